//! The truncated space `H_n` in the Dirichlet sine basis on (0, 1).
//!
//! Every operator in this crate is diagonal in the orthonormal basis
//! `e_k(ξ) = √2 sin(kπξ)`, with `A e_k = -λ_k e_k` and `λ_k = (kπ)²`, so the
//! semigroup, fractional powers, and Sobolev norms all act mode by mode.
//! Modes are 1-based in the mathematics and 0-based in storage: `coeffs[i]`
//! multiplies `e_{i+1}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::math;

/// Largest `λ_n t` accepted by [`apply_inverse_semigroup`]; `e^{700}` is
/// still finite in binary64.
pub const INVERSE_SEMIGROUP_LIMIT: f64 = 700.0;

/// `λ_k = (kπ)²`, the k-th Dirichlet eigenvalue of `-Δ` on (0, 1).
pub fn eigenvalue(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain!("eigenvalue index must be >= 1"));
    }
    Ok(lambda(k))
}

#[inline]
pub(crate) fn lambda(k: usize) -> f64 {
    let kp = k as f64 * PI;
    kp * kp
}

/// `λ_1..λ_n` as a vector.
pub fn eigenvalues(n: usize) -> Vec<f64> {
    (1..=n).map(lambda).collect()
}

/// Coefficients of an element of `H_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
}

impl SpectralVector {
    /// Validates length and finiteness.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain!("a spectral vector needs at least one mode"));
        }
        if let Some((i, v)) = coeffs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(domain!("coefficient of mode {} is not finite ({})", i + 1, v));
        }
        Ok(Self { coeffs })
    }

    /// Skips validation; callers guarantee a nonempty, finite vector.
    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        debug_assert!(coeffs.iter().all(|v| v.is_finite()));
        Self { coeffs }
    }

    /// Like [`SpectralVector::new`] but reports overflow as a range error.
    pub(crate) fn from_computed(coeffs: Vec<f64>, what: &str) -> Result<Self> {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range(alloc::format!("{what} produced a non-finite coefficient")));
        }
        Ok(Self::from_vec_unchecked(coeffs))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain!("dimension must be >= 1"));
        }
        Ok(Self { coeffs: alloc::vec![0.0; n] })
    }

    /// The basis vector `e_k` (1-based) in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(domain!("basis index {k} outside 1..={n}"));
        }
        let mut v = Self::zeros(n)?;
        v.coeffs[k - 1] = 1.0;
        Ok(v)
    }

    /// Builds a vector from a function of the 1-based mode index.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((1..=n).map(f).collect())
    }

    /// Initial datum with coefficients `k^{-p}`; lies in `Ḣ^γ` for `γ < 2p - 1`.
    pub fn power_decay(n: usize, p: f64) -> Result<Self> {
        Self::from_fn(n, |k| math::powf(k as f64, -p))
    }

    /// Sparse constructor from `(mode, value)` pairs, modes 1-based.
    pub fn from_modes(n: usize, modes: &[(usize, f64)]) -> Result<Self> {
        let mut v = Self::zeros(n)?;
        for &(k, c) in modes {
            if k == 0 || k > n {
                return Err(domain!("mode {k} outside 1..={n}"));
            }
            v.coeffs[k - 1] += c;
        }
        Self::new(v.coeffs)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `e_k`, 1-based.
    pub fn mode(&self, k: usize) -> f64 {
        self.coeffs[k - 1]
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.coeffs.iter().map(|v| v * v).sum())
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_dim(other.dim())?;
        Ok(dot(&self.coeffs, &other.coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        SpectralVector::from_computed(c, "addition")
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        SpectralVector::from_computed(c, "subtraction")
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        SpectralVector::from_computed(self.coeffs.iter().map(|v| v * s).collect(), "scaling")
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exponent `γ` of `(-A)^γ`. Negative values are smoothing powers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalExponent(f64);

impl FractionalExponent {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(domain!("fractional exponent must be finite"));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Nonnegative time argument of the semigroup `E(t) = e^{tA}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SemigroupTime(f64);

impl SemigroupTime {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(domain!("semigroup time must be finite and >= 0, got {t}"));
        }
        Ok(Self(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `E(t) v`: mode k is multiplied by `e^{-λ_k t}`.
pub fn apply_semigroup(v: &SpectralVector, t: SemigroupTime) -> SpectralVector {
    let t = t.value();
    let c = v.coeffs.iter().enumerate().map(|(i, x)| math::exp(-lambda(i + 1) * t) * x).collect();
    SpectralVector::from_vec_unchecked(c)
}

/// `E_n(-t) v`, the inverse of the semigroup on `H_n`. Fails with a range
/// error once `λ_n t` exceeds [`INVERSE_SEMIGROUP_LIMIT`].
pub fn apply_inverse_semigroup(v: &SpectralVector, t: SemigroupTime) -> Result<SpectralVector> {
    let t = t.value();
    let top = lambda(v.dim()) * t;
    if top > INVERSE_SEMIGROUP_LIMIT {
        return Err(Error::Range(alloc::format!(
            "inverse semigroup needs lambda_n * t <= {INVERSE_SEMIGROUP_LIMIT}, got {top:.3e}"
        )));
    }
    let c = v.coeffs.iter().enumerate().map(|(i, x)| math::exp(lambda(i + 1) * t) * x).collect();
    SpectralVector::from_computed(c, "inverse semigroup")
}

/// `(-A)^γ v`: mode k is multiplied by `λ_k^γ`.
pub fn apply_fractional_power(v: &SpectralVector, gamma: FractionalExponent) -> Result<SpectralVector> {
    let g = gamma.value();
    if g == 0.0 {
        return Ok(v.clone());
    }
    let c = v.coeffs.iter().enumerate().map(|(i, x)| math::powf(lambda(i + 1), g) * x).collect();
    SpectralVector::from_computed(c, "fractional power")
}

/// `‖v‖_γ = (Σ λ_k^γ v_k²)^{1/2}`, the `Ḣ^γ` norm.
pub fn sobolev_norm(v: &SpectralVector, gamma: FractionalExponent) -> f64 {
    sobolev_norm_slice(&v.coeffs, gamma.value())
}

pub(crate) fn sobolev_norm_slice(v: &[f64], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return math::sqrt(dot(v, v));
    }
    let s: f64 = v.iter().enumerate().map(|(i, x)| math::powf(lambda(i + 1), gamma) * x * x).sum();
    math::sqrt(s)
}

/// `P_m v`: keeps modes `1..=min(m, n)` and zero-pads to dimension `m`.
pub fn project(v: &SpectralVector, m: usize) -> Result<SpectralVector> {
    if m == 0 {
        return Err(domain!("projection dimension must be >= 1"));
    }
    let mut c = alloc::vec![0.0; m];
    let keep = m.min(v.dim());
    c[..keep].copy_from_slice(&v.coeffs[..keep]);
    Ok(SpectralVector::from_vec_unchecked(c))
}

/// Exact operator norm of `(-A)^γ E(t)` on `H` and its ratio to `t^{-γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingBound {
    /// `sup_k λ_k^γ e^{-λ_k t}`.
    pub norm: f64,
    /// Mode index attaining the supremum.
    pub maximizer: usize,
    /// `norm · t^γ`.
    pub ratio: f64,
    /// `(γ/e)^γ`, the supremum of `x^γ e^{-x}` over `x > 0`; `ratio` never exceeds it.
    pub ratio_bound: f64,
}

impl SmoothingBound {
    pub fn within_bound(&self) -> bool {
        self.ratio <= self.ratio_bound * (1.0 + 1e-12)
    }
}

/// Evaluates `sup_{k≥1} λ_k^γ e^{-λ_k t}` exactly. The map `λ ↦ λ^γ e^{-λt}`
/// is unimodal with peak at `λ = γ/t`, so only the two modes bracketing the
/// peak (and `k = 1`) need to be inspected.
pub fn smoothing_bound_check(gamma: FractionalExponent, t: f64) -> Result<SmoothingBound> {
    let g = gamma.value();
    if g < 0.0 {
        return Err(domain!("smoothing bound needs gamma >= 0"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain!("smoothing bound needs t > 0, got {t}"));
    }
    let value = |k: usize| {
        let l = lambda(k);
        // log form keeps huge λ^γ from overflowing before the exponential decays it
        if g == 0.0 {
            math::exp(-l * t)
        } else {
            math::exp(g * math::ln(l) - l * t)
        }
    };
    let peak = math::sqrt(g / t) / core::f64::consts::PI;
    let lo = (math::floor(peak) as usize).max(1);
    let mut best = (1usize, value(1));
    for k in [lo, lo + 1] {
        let v = value(k);
        if v > best.1 {
            best = (k, v);
        }
    }
    let ratio = best.1 * math::powf(t, g);
    let ratio_bound = if g == 0.0 { 1.0 } else { math::powf(g / core::f64::consts::E, g) };
    Ok(SmoothingBound { norm: best.1, maximizer: best.0, ratio, ratio_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn eigenvalues_match_dirichlet_spectrum() {
        assert!(close(eigenvalue(1).unwrap(), 9.869604401, 1e-9));
        assert!(close(eigenvalue(2).unwrap(), 39.47841760, 1e-9));
        assert!(close(eigenvalue(10).unwrap(), 986.9604401, 1e-9));
        assert!(eigenvalue(0).is_err());
        let l = eigenvalues(50);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(SpectralVector::new(vec![]).is_err());
        assert!(SpectralVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(SpectralVector::new(vec![f64::INFINITY]).is_err());
        assert!(SemigroupTime::new(-1.0).is_err());
        assert!(SemigroupTime::new(f64::NAN).is_err());
        assert!(FractionalExponent::new(f64::INFINITY).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let v = SpectralVector::new(vec![0.3, -1.2, 4.0]).unwrap();
        assert_eq!(apply_semigroup(&v, SemigroupTime::new(0.0).unwrap()), v);
        let e1 = SpectralVector::basis(3, 1).unwrap();
        let out = apply_semigroup(&e1, SemigroupTime::new(1.0).unwrap());
        assert!(close(out.mode(1), 5.1723e-5, 1e-4));
        assert_eq!(out.mode(2), 0.0);
    }

    #[test]
    fn inverse_semigroup_range() {
        let v = SpectralVector::new(vec![1.0; 8]).unwrap();
        // λ_8 = 631.65, so t = 1.2 puts λ_n t past the limit
        assert!(matches!(apply_inverse_semigroup(&v, SemigroupTime::new(1.2).unwrap()), Err(Error::Range(_))));
        let t = SemigroupTime::new(30.0 / lambda(8)).unwrap();
        let back = apply_inverse_semigroup(&apply_semigroup(&v, t), t).unwrap();
        for (a, b) in back.coeffs().iter().zip(v.coeffs()) {
            assert!(close(*a, *b, 1e-10));
        }
    }

    #[test]
    fn fractional_power_examples() {
        let v = SpectralVector::new(vec![0.5, 2.0, -3.0]).unwrap();
        assert_eq!(apply_fractional_power(&v, FractionalExponent::new(0.0).unwrap()).unwrap(), v);
        let e1 = SpectralVector::basis(3, 1).unwrap();
        let out = apply_fractional_power(&e1, FractionalExponent::new(0.5).unwrap()).unwrap();
        assert!(close(out.mode(1), PI, 1e-15));
        let g = FractionalExponent::new(0.7).unwrap();
        let mg = FractionalExponent::new(-0.7).unwrap();
        let round = apply_fractional_power(&apply_fractional_power(&v, g).unwrap(), mg).unwrap();
        for (a, b) in round.coeffs().iter().zip(v.coeffs()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn sobolev_norm_examples() {
        let v = SpectralVector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(sobolev_norm(&v, FractionalExponent::new(0.0).unwrap()), 5.0);
        let e1 = SpectralVector::basis(2, 1).unwrap();
        assert!(close(sobolev_norm(&e1, FractionalExponent::new(2.0).unwrap()), PI * PI, 1e-14));
        let e2 = SpectralVector::basis(2, 2).unwrap();
        assert!(close(sobolev_norm(&e2, FractionalExponent::new(-1.0).unwrap()), 0.159154943, 1e-8));
    }

    #[test]
    fn projection_examples() {
        let v = SpectralVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(project(&v, 4).unwrap(), v);
        let e3 = SpectralVector::basis(8, 3).unwrap();
        assert_eq!(project(&e3, 2).unwrap(), SpectralVector::zeros(2).unwrap());
        let p = project(&v, 2).unwrap();
        let padded = project(&p, 4).unwrap();
        let tail = v.sub(&padded).unwrap().norm();
        assert!(close(tail, 5.0, 1e-15));
        assert_eq!(project(&v, 6).unwrap().dim(), 6);
        assert!(project(&v, 0).is_err());
    }

    fn brute_force_sup(gamma: f64, t: f64, kmax: usize) -> f64 {
        (1..=kmax)
            .map(|k| {
                let l = lambda(k);
                l.powf(gamma) * (-l * t).exp()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn smoothing_bound_examples() {
        for t in [1e-3, 0.1, 2.0] {
            let r = smoothing_bound_check(FractionalExponent::new(0.0).unwrap(), t).unwrap();
            assert!(close(r.norm, (-PI * PI * t).exp(), 1e-14));
            assert!(r.norm <= 1.0);
        }
        let l1 = lambda(1);
        let r = smoothing_bound_check(FractionalExponent::new(1.0).unwrap(), 1.0 / l1).unwrap();
        let oracle = brute_force_sup(1.0, 1.0 / l1, 1_000_000);
        assert!(close(r.norm, oracle, 1e-14));
        assert!(close(r.norm, l1 * (-1.0f64).exp(), 1e-12));
        assert!(close(r.norm, 3.6308, 1e-4));
        assert_eq!(r.maximizer, 1);
        for t in [1e-3, 1e-2, 1e-1] {
            let r = smoothing_bound_check(FractionalExponent::new(0.5).unwrap(), t).unwrap();
            let oracle = brute_force_sup(0.5, t, 1_000_000);
            assert!(close(r.norm, oracle, 1e-14), "t={t}: {} vs {}", r.norm, oracle);
            assert!(r.ratio <= 0.4289 + 1e-9);
            assert!(r.within_bound());
        }
        assert!(smoothing_bound_check(FractionalExponent::new(0.5).unwrap(), 0.0).is_err());
    }
}
