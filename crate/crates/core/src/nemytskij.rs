//! Nemytskij nonlinearities `F(φ)(ξ) = f(ξ, φ(ξ))`, evaluated
//! pseudo-spectrally on a [`CollocationGrid`] and projected back onto `H_n`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{domain, Result};
use crate::math;
use crate::noise::lane;
use crate::rng::SeedPath;
use crate::spectral::{sobolev_norm_slice, SpectralVector};
use crate::transform::CollocationGrid;

/// Pointwise map `(ξ, z) ↦ value`.
pub type ScalarMap = fn(f64, f64) -> f64;

/// Claimed regularity exponents `(β, η, δ)` of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityExponents {
    pub beta: f64,
    pub eta: f64,
    pub delta: f64,
}

impl RegularityExponents {
    pub fn new(beta: f64, eta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(domain!("beta must lie in (0, 1], got {beta}"));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(domain!("eta must lie in [0, 1), got {eta}"));
        }
        if !(1.0..2.0).contains(&delta) {
            return Err(domain!("delta must lie in [1, 2), got {delta}"));
        }
        Ok(Self { beta, eta, delta })
    }
}

impl Default for RegularityExponents {
    /// `η = 0.3` is the smallest round value above the `d/4` threshold in one
    /// space dimension.
    fn default() -> Self {
        Self { beta: 0.5, eta: 0.3, delta: 1.0 }
    }
}

/// User-supplied `f` with its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct CustomMaps {
    pub f: ScalarMap,
    pub df_dz: ScalarMap,
    pub d2f_dz2: ScalarMap,
    pub d2f_dxidz: ScalarMap,
}

// Identity of the function pointers; two equal maps compiled into different
// codegen units may still compare unequal.
impl PartialEq for CustomMaps {
    fn eq(&self, o: &Self) -> bool {
        use core::ptr::fn_addr_eq;
        fn_addr_eq(self.f, o.f)
            && fn_addr_eq(self.df_dz, o.df_dz)
            && fn_addr_eq(self.d2f_dz2, o.d2f_dz2)
            && fn_addr_eq(self.d2f_dxidz, o.d2f_dxidz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Zero,
    /// `a z`
    Linear {
        a: f64,
    },
    /// `a sin z`
    Sine {
        a: f64,
    },
    /// `a z / (1 + z²)`
    Rational {
        a: f64,
    },
    /// `a sin z + sin(πξ)`
    SineForced {
        a: f64,
    },
    Custom(CustomMaps),
}

impl Family {
    #[inline]
    fn f(&self, xi: f64, z: f64) -> f64 {
        match *self {
            Family::Zero => 0.0,
            Family::Linear { a } => a * z,
            Family::Sine { a } => a * math::sin(z),
            Family::Rational { a } => a * z / (1.0 + z * z),
            Family::SineForced { a } => a * math::sin(z) + math::sin(PI * xi),
            Family::Custom(m) => (m.f)(xi, z),
        }
    }

    #[inline]
    fn df(&self, xi: f64, z: f64) -> f64 {
        match *self {
            Family::Zero => 0.0,
            Family::Linear { a } => a,
            Family::Sine { a } | Family::SineForced { a } => a * math::cos(z),
            Family::Rational { a } => {
                let d = 1.0 + z * z;
                a * (1.0 - z * z) / (d * d)
            }
            Family::Custom(m) => (m.df_dz)(xi, z),
        }
    }

    #[inline]
    fn d2f(&self, xi: f64, z: f64) -> f64 {
        match *self {
            Family::Zero | Family::Linear { .. } => 0.0,
            Family::Sine { a } | Family::SineForced { a } => -a * math::sin(z),
            Family::Rational { a } => {
                let d = 1.0 + z * z;
                a * 2.0 * z * (z * z - 3.0) / (d * d * d)
            }
            Family::Custom(m) => (m.d2f_dz2)(xi, z),
        }
    }

    fn d2f_dxidz(&self, xi: f64, z: f64) -> f64 {
        match *self {
            Family::Custom(m) => (m.d2f_dxidz)(xi, z),
            _ => 0.0,
        }
    }
}

/// A nonlinearity together with its claimed constant `L` and exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct NemytskijSpec {
    pub name: String,
    pub family: Family,
    pub lipschitz_l: f64,
    pub exponents: RegularityExponents,
}

/// Names accepted by [`NemytskijSpec::from_name`].
pub const CATALOG: [&str; 5] = ["zero", "linear", "sin", "rational", "sin_forced"];

impl NemytskijSpec {
    fn builtin(name: &str, family: Family, lipschitz_l: f64) -> Self {
        Self { name: name.into(), family, lipschitz_l, exponents: RegularityExponents::default() }
    }

    pub fn zero() -> Self {
        Self::builtin("zero", Family::Zero, 0.0)
    }

    pub fn linear(a: f64) -> Self {
        Self::builtin("linear", Family::Linear { a }, math::abs(a))
    }

    pub fn sine(a: f64) -> Self {
        Self::builtin("sin", Family::Sine { a }, math::abs(a))
    }

    /// `max |d²/dz² z/(1+z²)| ≈ 1.457` (at `z = √2 - 1`), so `L = 1.5 |a|`.
    pub fn rational(a: f64) -> Self {
        Self::builtin("rational", Family::Rational { a }, 1.5 * math::abs(a))
    }

    pub fn sine_forced(a: f64) -> Self {
        Self::builtin("sin_forced", Family::SineForced { a }, math::abs(a).max(1.0))
    }

    pub fn custom(name: &str, maps: CustomMaps, lipschitz_l: f64) -> Result<Self> {
        if !(lipschitz_l >= 0.0) || !lipschitz_l.is_finite() {
            return Err(domain!("Lipschitz constant must be finite and >= 0"));
        }
        Ok(Self::builtin(name, Family::Custom(maps), lipschitz_l))
    }

    /// Catalog lookup; `scale` is the amplitude `a`.
    pub fn from_name(name: &str, scale: f64) -> Result<Self> {
        if !scale.is_finite() {
            return Err(domain!("nonlinearity scale must be finite"));
        }
        Ok(match name {
            "zero" => Self::zero(),
            "linear" => Self::linear(scale),
            "sin" => Self::sine(scale),
            "rational" => Self::rational(scale),
            "sin_forced" => Self::sine_forced(scale),
            _ => return Err(domain!("unknown nonlinearity {name:?}; expected one of {CATALOG:?}")),
        })
    }

    pub fn with_exponents(mut self, exponents: RegularityExponents) -> Self {
        self.exponents = exponents;
        self
    }

    /// `Some(a)` when `F(x) = a x` exactly (including `a = 0`).
    pub fn linear_rate(&self) -> Option<f64> {
        match self.family {
            Family::Zero => Some(0.0),
            Family::Linear { a } => Some(a),
            _ => None,
        }
    }

    pub fn f(&self, xi: f64, z: f64) -> f64 {
        self.family.f(xi, z)
    }

    pub fn df_dz(&self, xi: f64, z: f64) -> f64 {
        self.family.df(xi, z)
    }

    pub fn d2f_dz2(&self, xi: f64, z: f64) -> f64 {
        self.family.d2f(xi, z)
    }

    pub fn d2f_dxidz(&self, xi: f64, z: f64) -> f64 {
        self.family.d2f_dxidz(xi, z)
    }

    /// Samples `|f| ≤ L(|z|+1)` and the three derivative bounds on a
    /// `points × points` grid of `(ξ, z) ∈ (0,1) × [-z_max, z_max]`; returns
    /// the largest observed ratio to `L` (≤ 1 when the claims hold).
    pub fn verify_claims(&self, z_max: f64, points: usize) -> f64 {
        let l = self.lipschitz_l.max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 1..=points {
            let xi = i as f64 / (points + 1) as f64;
            for j in 0..points {
                let z = -z_max + 2.0 * z_max * j as f64 / (points.max(2) - 1) as f64;
                let r = [
                    math::abs(self.f(xi, z)) / (math::abs(z) + 1.0),
                    math::abs(self.df_dz(xi, z)),
                    math::abs(self.d2f_dz2(xi, z)),
                    math::abs(self.d2f_dxidz(xi, z)),
                ];
                for v in r {
                    worst = worst.max(v / l);
                }
            }
        }
        worst
    }

    /// Writes `P_n F(v)` into `out` (length `n`), using `phys` (length `m`)
    /// as scratch.
    pub fn eval_into(&self, grid: &CollocationGrid, v: &[f64], phys: &mut [f64], out: &mut [f64]) -> Result<()> {
        match self.family {
            Family::Zero => {
                out.fill(0.0);
                return Ok(());
            }
            // exact, and a no-op through the transform pair anyway
            Family::Linear { a } => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = a * x;
                }
                return Ok(());
            }
            _ => {}
        }
        grid.synthesize_into(v, phys);
        let h = 1.0 / (grid.m_points() + 1) as f64;
        for (j, u) in phys.iter_mut().enumerate() {
            let y = self.family.f((j + 1) as f64 * h, *u);
            if !y.is_finite() {
                return Err(domain!("nonlinearity is not finite at node {} (u = {u})", j + 1));
            }
            *u = y;
        }
        grid.analyze_into(phys, out);
        Ok(())
    }
}

fn check_grid(grid: &CollocationGrid, v: &SpectralVector) -> Result<()> {
    if grid.m_points() < v.dim() {
        return Err(domain!("grid of {} points cannot resolve {} modes", grid.m_points(), v.dim()));
    }
    Ok(())
}

/// `P_n F(v)`.
pub fn evaluate_f(spec: &NemytskijSpec, v: &SpectralVector, grid: &CollocationGrid) -> Result<SpectralVector> {
    check_grid(grid, v)?;
    let mut phys = alloc::vec![0.0; grid.m_points()];
    let mut out = alloc::vec![0.0; v.dim()];
    spec.eval_into(grid, v.coeffs(), &mut phys, &mut out)?;
    Ok(SpectralVector::from_vec_unchecked(out))
}

fn pointwise(
    grid: &CollocationGrid,
    n: usize,
    vectors: &[&SpectralVector],
    g: impl Fn(f64, &[f64]) -> f64,
) -> Result<SpectralVector> {
    let m = grid.m_points();
    let phys: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut u = alloc::vec![0.0; m];
            grid.synthesize_into(v.coeffs(), &mut u);
            u
        })
        .collect();
    let mut vals = alloc::vec![0.0; m];
    let mut at = alloc::vec![0.0; vectors.len()];
    for (j, slot) in vals.iter_mut().enumerate() {
        for (a, u) in at.iter_mut().zip(&phys) {
            *a = u[j];
        }
        let y = g(grid.node(j + 1), &at);
        if !y.is_finite() {
            return Err(domain!("non-finite pointwise value at node {}", j + 1));
        }
        *slot = y;
    }
    let mut out = alloc::vec![0.0; n];
    grid.analyze_into(&vals, &mut out);
    Ok(SpectralVector::from_vec_unchecked(out))
}

/// `P_n F'(v) w`, the projection of `∂f/∂z(ξ, v(ξ)) w(ξ)`.
pub fn evaluate_f_prime(
    spec: &NemytskijSpec,
    v: &SpectralVector,
    w: &SpectralVector,
    grid: &CollocationGrid,
) -> Result<SpectralVector> {
    check_grid(grid, v)?;
    v.check_dim(w.dim())?;
    pointwise(grid, v.dim(), &[v, w], |xi, u| spec.df_dz(xi, u[0]) * u[1])
}

/// `P_n F''(v)(w1, w2)`. The product `w1 w2` is formed first, so swapping the
/// directions gives a bit-identical result.
pub fn evaluate_f_second(
    spec: &NemytskijSpec,
    v: &SpectralVector,
    w1: &SpectralVector,
    w2: &SpectralVector,
    grid: &CollocationGrid,
) -> Result<SpectralVector> {
    check_grid(grid, v)?;
    v.check_dim(w1.dim())?;
    v.check_dim(w2.dim())?;
    pointwise(grid, v.dim(), &[v, w1, w2], |xi, u| spec.d2f_dz2(xi, u[0]) * (u[1] * u[2]))
}

/// Fraction of the energy of `f(ξ_j, v(ξ_j))` that the grid resolves but
/// `P_n` discards; a proxy for how much aliasing the pseudo-spectral
/// product incurs at this resolution.
pub fn aliasing_residual(spec: &NemytskijSpec, v: &SpectralVector, grid: &CollocationGrid) -> Result<f64> {
    check_grid(grid, v)?;
    let m = grid.m_points();
    let mut phys = alloc::vec![0.0; m];
    grid.synthesize_into(v.coeffs(), &mut phys);
    for (j, u) in phys.iter_mut().enumerate() {
        *u = spec.f(grid.node(j + 1), *u);
    }
    let mut all = alloc::vec![0.0; m];
    grid.analyze_into(&phys, &mut all);
    let total: f64 = all.iter().map(|c| c * c).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let tail: f64 = all[v.dim()..].iter().map(|c| c * c).sum();
    Ok(tail / total)
}

/// Largest empirical ratios for the four growth conditions on a nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `‖F(φ)‖ / (‖φ‖ + 1)`
    pub growth: f64,
    /// `‖F'(φ)ψ‖ / ‖ψ‖`
    pub first_derivative: f64,
    /// `‖(-A)^{-η} F''(φ)(ψ1, ψ2)‖ / (‖ψ1‖ ‖ψ2‖)`
    pub second_derivative: f64,
    /// `‖(-A)^{-δ/2} F'(φ)ψ‖ / ((1 + ‖φ‖_1) ‖ψ‖_{-1})`, with `φ ∈ Ḣ¹`
    pub dual_derivative: f64,
    pub samples: usize,
    pub bound: f64,
}

impl AssumptionReport {
    /// Names of the ratios that exceed `bound`.
    pub fn violations(&self) -> Vec<&'static str> {
        [
            ("growth", self.growth),
            ("first_derivative", self.first_derivative),
            ("second_derivative", self.second_derivative),
            ("dual_derivative", self.dual_derivative),
        ]
        .into_iter()
        .filter(|(_, r)| *r > self.bound)
        .map(|(name, _)| name)
        .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.growth.max(self.first_derivative).max(self.second_derivative).max(self.dual_derivative)
    }
}

/// Random direction with coefficients `z_k k^{-p}` drawn on the probe lane.
fn probe(n: usize, path: &SeedPath, p: f64) -> SpectralVector {
    let mut z = alloc::vec![0.0; n];
    path.fill_normals(lane::PROBE, &mut z);
    for (i, v) in z.iter_mut().enumerate() {
        *v *= math::powf((i + 1) as f64, -p);
    }
    SpectralVector::from_vec_unchecked(z)
}

/// Spot-checks the growth and derivative conditions on random elements of
/// `H_n`. Sample `i` uses counters `path.counter + 5i ..= path.counter + 5i + 4`
/// of `path.stream_id`; since the draws are prefix-stable in the mode index,
/// runs at different `n` probe the same underlying random functions.
pub fn check_growth_conditions(
    spec: &NemytskijSpec,
    n: usize,
    grid: &CollocationGrid,
    samples: usize,
    path: &SeedPath,
    bound: f64,
) -> Result<AssumptionReport> {
    if samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    if n == 0 || grid.m_points() < n {
        return Err(domain!("grid of {} points cannot resolve {n} modes", grid.m_points()));
    }
    let eta = spec.exponents.eta;
    let delta = spec.exponents.delta;
    let mut report = AssumptionReport {
        growth: 0.0,
        first_derivative: 0.0,
        second_derivative: 0.0,
        dual_derivative: 0.0,
        samples,
        bound,
    };
    for i in 0..samples {
        let at = |j: u64| path.with_counter(path.counter + 5 * i as u64 + j);
        let phi = probe(n, &at(0), 1.0);
        let psi = probe(n, &at(1), 1.0);
        let psi1 = probe(n, &at(2), 1.0);
        let psi2 = probe(n, &at(3), 1.0);
        let phi_smooth = probe(n, &at(4), 2.0);

        let f = evaluate_f(spec, &phi, grid)?;
        report.growth = report.growth.max(f.norm() / (phi.norm() + 1.0));

        let d1 = evaluate_f_prime(spec, &phi, &psi, grid)?;
        report.first_derivative = report.first_derivative.max(d1.norm() / psi.norm());

        let d2 = evaluate_f_second(spec, &phi, &psi1, &psi2, grid)?;
        let num = sobolev_norm_slice(d2.coeffs(), -2.0 * eta);
        report.second_derivative = report.second_derivative.max(num / (psi1.norm() * psi2.norm()));

        let d3 = evaluate_f_prime(spec, &phi_smooth, &psi, grid)?;
        let num = sobolev_norm_slice(d3.coeffs(), -delta);
        let den = (1.0 + sobolev_norm_slice(phi_smooth.coeffs(), 1.0)) * sobolev_norm_slice(psi.coeffs(), -1.0);
        report.dual_derivative = report.dual_derivative.max(num / den);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> CollocationGrid {
        CollocationGrid::direct(CollocationGrid::default_size(n)).unwrap()
    }

    fn sample_v(n: usize, seed: u64) -> SpectralVector {
        probe(n, &SeedPath::new(seed, 0, 0), 1.0)
    }

    #[test]
    fn zero_and_identity() {
        let n = 12;
        let g = grid(n);
        let v = sample_v(n, 1);
        let z = evaluate_f(&NemytskijSpec::zero(), &v, &g).unwrap();
        assert!(z.coeffs().iter().all(|c| *c == 0.0));
        let id = evaluate_f(&NemytskijSpec::linear(1.0), &v, &g).unwrap();
        assert_eq!(id, v);
        // the same map through the transform pair
        fn ident(_: f64, z: f64) -> f64 {
            z
        }
        fn one(_: f64, _: f64) -> f64 {
            1.0
        }
        fn zero(_: f64, _: f64) -> f64 {
            0.0
        }
        let maps = CustomMaps { f: ident, df_dz: one, d2f_dz2: zero, d2f_dxidz: zero };
        let spec = NemytskijSpec::custom("id", maps, 1.0).unwrap();
        let out = evaluate_f(&spec, &v, &g).unwrap();
        for (a, b) in out.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = sample_v(n, 2);
        let d = evaluate_f_prime(&spec, &v, &w, &g).unwrap();
        for (a, b) in d.coeffs().iter().zip(w.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let d2 = evaluate_f_second(&spec, &v, &w, &v, &g).unwrap();
        assert!(d2.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn forcing_projects_onto_first_mode() {
        fn forcing(xi: f64, _: f64) -> f64 {
            (PI * xi).sin()
        }
        fn zero(_: f64, _: f64) -> f64 {
            0.0
        }
        let maps = CustomMaps { f: forcing, df_dz: zero, d2f_dz2: zero, d2f_dxidz: zero };
        let spec = NemytskijSpec::custom("forcing", maps, 1.0).unwrap();
        let n = 8;
        let out = evaluate_f(&spec, &sample_v(n, 3), &grid(n)).unwrap();
        assert!((out.mode(1) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(out.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
        let w = sample_v(n, 4);
        let d = evaluate_f_prime(&spec, &sample_v(n, 3), &w, &grid(n)).unwrap();
        assert!(d.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn linear_plus_band_limited_forcing_is_exact() {
        let n = 10;
        let g = grid(n);
        let v = sample_v(n, 5);
        let spec = NemytskijSpec::sine_forced(0.0);
        let out = evaluate_f(&spec, &v, &g).unwrap();
        assert!((out.mode(1) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    fn fd_first(
        spec: &NemytskijSpec,
        v: &SpectralVector,
        w: &SpectralVector,
        g: &CollocationGrid,
        h: f64,
    ) -> SpectralVector {
        let p = evaluate_f(spec, &v.add(&w.scale(h).unwrap()).unwrap(), g).unwrap();
        let m = evaluate_f(spec, &v.sub(&w.scale(h).unwrap()).unwrap(), g).unwrap();
        p.sub(&m).unwrap().scale(0.5 / h).unwrap()
    }

    #[test]
    fn first_derivative_matches_central_differences() {
        let n = 16;
        let g = grid(n);
        let spec = NemytskijSpec::sine(1.0);
        let v = sample_v(n, 6);
        let w = sample_v(n, 7);
        let exact = evaluate_f_prime(&spec, &v, &w, &g).unwrap();
        let fd = fd_first(&spec, &v, &w, &g, 1e-5);
        let err = exact.sub(&fd).unwrap().norm() / exact.norm();
        assert!(err < 1e-8, "{err}");
        // O(h²) slope over h ∈ {1e-2, 1e-3}; smaller h is roundoff-dominated
        let e2 = exact.sub(&fd_first(&spec, &v, &w, &g, 1e-2)).unwrap().norm();
        let e3 = exact.sub(&fd_first(&spec, &v, &w, &g, 1e-3)).unwrap().norm();
        let slope = (e2 / e3).log10();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn second_derivative_matches_and_is_symmetric() {
        let n = 16;
        let g = grid(n);
        let spec = NemytskijSpec::sine(1.0);
        let v = sample_v(n, 8);
        let w1 = sample_v(n, 9);
        let w2 = sample_v(n, 10);
        let a = evaluate_f_second(&spec, &v, &w1, &w2, &g).unwrap();
        let b = evaluate_f_second(&spec, &v, &w2, &w1, &g).unwrap();
        assert_eq!(a, b);
        let h = 1e-4;
        let p = evaluate_f_prime(&spec, &v.add(&w2.scale(h).unwrap()).unwrap(), &w1, &g).unwrap();
        let m = evaluate_f_prime(&spec, &v.sub(&w2.scale(h).unwrap()).unwrap(), &w1, &g).unwrap();
        let fd = p.sub(&m).unwrap().scale(0.5 / h).unwrap();
        let err = a.sub(&fd).unwrap().norm() / a.norm();
        assert!(err < 1e-6, "{err}");
        let lin = evaluate_f_second(&NemytskijSpec::linear(2.0), &v, &w1, &w2, &g).unwrap();
        assert!(lin.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn catalog_claims_hold_pointwise() {
        for name in CATALOG {
            let spec = NemytskijSpec::from_name(name, 0.8).unwrap();
            assert!(spec.verify_claims(10.0, 201) <= 1.0 + 1e-12, "{name}");
        }
        assert!(NemytskijSpec::from_name("cubic", 1.0).is_err());
        // tightness of the rational bound
        let r = NemytskijSpec::rational(1.0);
        let z = 2f64.sqrt() - 1.0;
        assert!((r.d2f_dz2(0.5, z).abs() - 1.4567).abs() < 1e-3);
    }

    #[test]
    fn non_finite_nonlinearity_is_rejected() {
        fn blow(_: f64, z: f64) -> f64 {
            1.0 / (z - z)
        }
        let maps = CustomMaps { f: blow, df_dz: blow, d2f_dz2: blow, d2f_dxidz: blow };
        let spec = NemytskijSpec::custom("blow", maps, 1.0).unwrap();
        let n = 4;
        assert!(evaluate_f(&spec, &sample_v(n, 1), &grid(n)).is_err());
    }

    #[test]
    fn aliasing_residual_is_small_for_smooth_states() {
        let n = 32;
        let g = grid(n);
        let v = SpectralVector::power_decay(n, 2.5).unwrap();
        let r = aliasing_residual(&NemytskijSpec::sine(1.0), &v, &g).unwrap();
        assert!(r < 1e-6, "{r}");
        assert!(aliasing_residual(&NemytskijSpec::linear(1.0), &v, &g).unwrap() < 1e-24);
    }

    #[test]
    fn assumption_ratios() {
        let path = SeedPath::new(11, 0, 0);
        let n = 16;
        let zero = check_growth_conditions(&NemytskijSpec::zero(), n, &grid(n), 20, &path, 1.0).unwrap();
        assert_eq!(zero.max_ratio(), 0.0);
        let lin = NemytskijSpec::linear(1.0).with_exponents(RegularityExponents::new(0.5, 0.0, 1.0).unwrap());
        let r = check_growth_conditions(&lin, n, &grid(n), 20, &path, 1.0 + 1e-9).unwrap();
        assert_eq!(r.second_derivative, 0.0);
        assert!(r.violations().is_empty(), "{r:?}");
        assert!(check_growth_conditions(&lin, n, &grid(n), 0, &path, 1.0).is_err());
    }
}
