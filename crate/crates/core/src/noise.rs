//! The covariance operator `Q` (diagonal in the sine basis) and samplers for
//! every Gaussian quantity the scheme and the exact linear solution need.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;
use crate::rng::SeedPath;
use crate::spectral::{lambda, SpectralVector};

/// Lane assignment inside one `(seed, stream_id, counter)` triple.
pub mod lane {
    /// Full-step Brownian increments driving the scheme.
    pub const INCREMENT: u32 = 0;
    /// `W(t_m + s) - W(t_m)` of a split increment.
    pub const SPLIT_HEAD: u32 = 1;
    /// `W(t_{m+1}) - W(t_m + s)` of a split increment.
    pub const SPLIT_TAIL: u32 = 2;
    /// Exact Ornstein-Uhlenbeck endpoints.
    pub const EXACT: u32 = 3;
    /// Random probe directions for diagnostics.
    pub const PROBE: u32 = 4;
}

/// Eigenvalues `q_k` of `Q` against `e_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// Space-time white noise, `q_k = 1`.
    White,
    /// `q_k = k^{-r}`.
    PowerDecay { r: f64 },
    /// Explicit `q_1, q_2, ...`; modes past the end have `q_k = 0`.
    Custom(Vec<f64>),
}

impl CovarianceSpec {
    pub fn power_decay(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(domain!("power decay exponent must be positive, got {r}"));
        }
        Ok(Self::PowerDecay { r })
    }

    pub fn custom(q: Vec<f64>) -> Result<Self> {
        if let Some(v) = q.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(domain!("covariance eigenvalues must be finite and >= 0, got {v}"));
        }
        Ok(Self::Custom(q))
    }

    /// `q_k` for 1-based `k`.
    pub fn q(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self {
            Self::White => 1.0,
            Self::PowerDecay { r } => math::powf(k as f64, -r),
            Self::Custom(q) => q.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn eigenvalues(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.q(k)).collect()
    }

    pub fn is_zero(&self, n: usize) -> bool {
        (1..=n).all(|k| self.q(k) == 0.0)
    }
}

/// Whether an increment is a raw Brownian increment `B ΔW` or has already
/// been filtered through the semigroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementKind {
    Raw,
    /// Distributed as `E_n(dt) B_n ΔW`.
    Filtered,
}

/// One Gaussian draw per mode over a time interval of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub values: SpectralVector,
    pub dt: f64,
    pub kind: IncrementKind,
}

impl NoiseIncrement {
    /// `E_n(dt)` applied to a raw increment. Mode k is `e^{-λ_k dt} · raw_k`,
    /// which is bit-identical to what [`sample_filtered_increment`] produces
    /// from the same draws.
    pub fn filtered(&self) -> Result<NoiseIncrement> {
        if self.kind != IncrementKind::Raw {
            return Err(domain!("increment is already filtered"));
        }
        let v = self.values.coeffs().iter().enumerate().map(|(i, x)| math::exp(-lambda(i + 1) * self.dt) * x).collect();
        Ok(NoiseIncrement { values: SpectralVector::from_vec_unchecked(v), dt: self.dt, kind: IncrementKind::Filtered })
    }

    /// Concatenates two consecutive raw increments into the increment over the
    /// union of their intervals.
    pub fn join(&self, next: &NoiseIncrement) -> Result<NoiseIncrement> {
        if self.kind != IncrementKind::Raw || next.kind != IncrementKind::Raw {
            return Err(domain!("only raw increments can be joined"));
        }
        Ok(NoiseIncrement { values: self.values.add(&next.values)?, dt: self.dt + next.dt, kind: IncrementKind::Raw })
    }
}

/// Partial sums of `‖(-A)^{(β-1)/2} Q^{1/2}‖²_HS = Σ λ_k^{β-1} q_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsCondition {
    pub partial_sum: f64,
    /// Upper bound on the remaining tail from the integral test; infinite
    /// when the series diverges.
    pub tail_bound: f64,
    pub converges: bool,
}

/// Evaluates the Hilbert-Schmidt regularity condition at exponent `beta`.
pub fn hs_condition_value(cov: &CovarianceSpec, beta: f64, n_partial: usize) -> Result<HsCondition> {
    if n_partial == 0 {
        return Err(domain!("need at least one term"));
    }
    if !beta.is_finite() {
        return Err(domain!("beta must be finite"));
    }
    let e = 2.0 * (beta - 1.0);
    let pi_factor = math::powf(core::f64::consts::PI, e);
    let mut partial = crate::stats::KahanSum::new();
    // add smallest terms first for the monotone families
    for k in (1..=n_partial).rev() {
        partial.add(pi_factor * math::powf(k as f64, e) * cov.q(k));
    }
    let partial_sum = partial.value();
    let nf = n_partial as f64;
    let (tail_bound, converges) = match cov {
        CovarianceSpec::White | CovarianceSpec::PowerDecay { .. } => {
            let r = if let CovarianceSpec::PowerDecay { r } = cov { *r } else { 0.0 };
            // summand ∝ k^{-p}
            let p = r - e;
            if p > 1.0 {
                (pi_factor * math::powf(nf, 1.0 - p) / (p - 1.0), true)
            } else {
                (f64::INFINITY, false)
            }
        }
        CovarianceSpec::Custom(q) => {
            let tail: f64 = (n_partial + 1..=q.len()).map(|k| pi_factor * math::powf(k as f64, e) * q[k - 1]).sum();
            (tail, true)
        }
    };
    Ok(HsCondition { partial_sum, tail_bound, converges })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(domain!("{name} must be finite and > 0, got {v}"));
    }
    Ok(())
}

fn scaled_normals(n: usize, path: &SeedPath, lane: u32, scale: impl Fn(usize) -> f64) -> Result<SpectralVector> {
    if n == 0 {
        return Err(domain!("dimension must be >= 1"));
    }
    let mut z = alloc::vec![0.0; n];
    path.fill_normals(lane, &mut z);
    for (i, v) in z.iter_mut().enumerate() {
        *v *= scale(i + 1);
    }
    Ok(SpectralVector::from_vec_unchecked(z))
}

/// Raw increment `B_n (W(t + dt) - W(t))`: mode k ~ N(0, q_k dt).
pub fn sample_raw_increment(
    cov: &CovarianceSpec,
    dt: f64,
    n: usize,
    path: &SeedPath,
    lane: u32,
) -> Result<NoiseIncrement> {
    check_positive("increment length", dt)?;
    let values = scaled_normals(n, path, lane, |k| math::sqrt(cov.q(k) * dt))?;
    Ok(NoiseIncrement { values, dt, kind: IncrementKind::Raw })
}

/// `E_n(τ) B_n ΔW_m`: mode k ~ N(0, τ e^{-2λ_k τ} q_k).
pub fn sample_filtered_increment(cov: &CovarianceSpec, tau: f64, n: usize, path: &SeedPath) -> Result<NoiseIncrement> {
    sample_raw_increment(cov, tau, n, path, lane::INCREMENT)?.filtered()
}

/// Splits `[t_m, t_m + τ]` at `t_m + s` and draws the two independent raw
/// increments. Their sum is a full raw increment over `τ`.
pub fn sample_subinterval_pair(
    cov: &CovarianceSpec,
    tau: f64,
    s: f64,
    n: usize,
    path: &SeedPath,
) -> Result<(NoiseIncrement, NoiseIncrement)> {
    check_positive("step", tau)?;
    if !(s > 0.0 && s < tau) {
        return Err(domain!("split point must lie in (0, {tau}), got {s}"));
    }
    let head = sample_raw_increment(cov, s, n, path, lane::SPLIT_HEAD)?;
    let rest_dt = tau - s;
    let values = scaled_normals(n, path, lane::SPLIT_TAIL, |k| math::sqrt(cov.q(k) * rest_dt))?;
    Ok((head, NoiseIncrement { values, dt: rest_dt, kind: IncrementKind::Raw }))
}

/// Variance of `∫_0^t e^{-κ(t-s)} dW(s)` per unit `q`: `(1 - e^{-2κt}) / (2κ)`,
/// with the `κ → 0` limit `t`.
pub(crate) fn ou_variance_factor(kappa: f64, t: f64) -> f64 {
    t * math::one_minus_exp_neg_over(2.0 * kappa * t)
}

/// Stochastic convolution `∫_0^T E(T - s) B dW(s)`: mode k ~ N(0, q_k (1 - e^{-2λ_k T}) / (2λ_k)).
pub fn sample_exact_ou_endpoint(
    cov: &CovarianceSpec,
    horizon: f64,
    n: usize,
    path: &SeedPath,
) -> Result<SpectralVector> {
    check_positive("horizon", horizon)?;
    scaled_normals(n, path, lane::EXACT, |k| math::sqrt(cov.q(k) * ou_variance_factor(lambda(k), horizon)))
}
