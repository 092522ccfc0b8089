//! The exponential Euler scheme
//! `Y_{m+1} = E_n(τ)(Y_m + τ F_n(Y_m)) + E_n(τ) B_n ΔW_m`,
//! its continuous extension, coupled fine/coarse paths, and exact Gaussian
//! laws for diagonal linear drift.
//!
//! Brownian increment `m` of a path is drawn on counter `path.counter + m`
//! of the increment lane. The filtered increment `E_n(τ)B_nΔW_m` is always
//! formed as `e^{-λ_k τ} · raw_k`, so filtering before or inside the step is
//! the same floating-point computation.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::kolmogorov::{linear_exact_law, GaussianState};
use crate::math;
use crate::nemytskij::NemytskijSpec;
use crate::noise::{lane, CovarianceSpec, IncrementKind, NoiseIncrement};
use crate::rng::SeedPath;
use crate::spectral::{lambda, SpectralVector};
use crate::transform::{CollocationGrid, DirectSineTransform, SineTransform};

/// Any mode exceeding this magnitude aborts the path.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Builds the sine transform for a grid of the given size.
pub type TransformFactory = fn(usize) -> Arc<dyn SineTransform>;

pub fn direct_transform(m: usize) -> Arc<dyn SineTransform> {
    Arc::new(DirectSineTransform::new(m))
}

/// Everything that defines one discretization.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub horizon: f64,
    pub steps: usize,
    pub cov: CovarianceSpec,
    pub nonlinearity: NemytskijSpec,
    pub x0: SpectralVector,
    factory: TransformFactory,
    grid: CollocationGrid,
}

impl SchemeConfig {
    /// The truncation dimension is `x0.dim()`; `τ = horizon / steps`.
    pub fn new(
        x0: SpectralVector,
        horizon: f64,
        steps: usize,
        cov: CovarianceSpec,
        nonlinearity: NemytskijSpec,
    ) -> Result<Self> {
        Self::with_factory(x0, horizon, steps, cov, nonlinearity, direct_transform)
    }

    pub fn with_factory(
        x0: SpectralVector,
        horizon: f64,
        steps: usize,
        cov: CovarianceSpec,
        nonlinearity: NemytskijSpec,
        factory: TransformFactory,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(domain!("final time must be finite and > 0, got {horizon}"));
        }
        if steps == 0 {
            return Err(domain!("need at least one step"));
        }
        let grid = CollocationGrid::with_transform(factory(CollocationGrid::default_size(x0.dim())))?;
        Ok(Self { horizon, steps, cov, nonlinearity, x0, factory, grid })
    }

    pub fn n(&self) -> usize {
        self.x0.dim()
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn grid(&self) -> &CollocationGrid {
        &self.grid
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(domain!("need at least one step"));
        }
        Ok(Self { steps, ..self.clone() })
    }

    /// Same problem truncated to `n` modes (`x0` is projected or zero-padded).
    pub fn with_dimension(&self, n: usize) -> Result<Self> {
        let x0 = crate::spectral::project(&self.x0, n)?;
        Self::with_factory(x0, self.horizon, self.steps, self.cov.clone(), self.nonlinearity.clone(), self.factory)
    }

    /// Replaces the collocation grid used for the nonlinearity.
    pub fn with_grid(mut self, grid: CollocationGrid) -> Result<Self> {
        if grid.m_points() < self.n() {
            return Err(domain!("grid of {} points cannot resolve {} modes", grid.m_points(), self.n()));
        }
        self.grid = grid;
        Ok(self)
    }
}

/// The states `Y_0..Y_M` of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemePath {
    pub states: Vec<SpectralVector>,
    pub seed_path: SeedPath,
}

impl SchemePath {
    pub fn endpoint(&self) -> &SpectralVector {
        self.states.last().expect("a path has at least its initial state")
    }
}

/// Step operator with a fixed step size and preallocated buffers.
pub(crate) struct Stepper<'a> {
    cfg: &'a SchemeConfig,
    dt: f64,
    decay: Vec<f64>,
    /// `sqrt(q_k dt)`
    scale: Vec<f64>,
    phys: Vec<f64>,
    drift: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(cfg: &'a SchemeConfig, dt: f64) -> Self {
        let n = cfg.n();
        Self {
            cfg,
            dt,
            decay: (1..=n).map(|k| math::exp(-lambda(k) * dt)).collect(),
            scale: (1..=n).map(|k| math::sqrt(cfg.cov.q(k) * dt)).collect(),
            phys: alloc::vec![0.0; cfg.grid.m_points()],
            drift: alloc::vec![0.0; n],
        }
    }

    /// Scales standard normals in place into a raw increment over `dt`.
    pub(crate) fn raw_from_normals(&self, z: &mut [f64]) {
        for (v, s) in z.iter_mut().zip(&self.scale) {
            *v *= s;
        }
    }

    /// `y ← E(dt)(y + dt F(y)) + E(dt) raw`.
    pub(crate) fn advance(&mut self, y: &mut [f64], raw: &[f64], index: usize) -> Result<()> {
        self.cfg
            .nonlinearity
            .eval_into(&self.cfg.grid, y, &mut self.phys, &mut self.drift)
            .map_err(|_| Error::IntegrationFailure { step: index, mode: 0, value: f64::NAN })?;
        for k in 0..y.len() {
            let d = self.decay[k];
            y[k] = d * (y[k] + self.dt * self.drift[k]) + d * raw[k];
        }
        guard(y, index)
    }
}

fn guard(y: &[f64], step: usize) -> Result<()> {
    for (i, v) in y.iter().enumerate() {
        if !(math::abs(*v) <= DIVERGENCE_LIMIT) {
            return Err(Error::IntegrationFailure { step, mode: i + 1, value: *v });
        }
    }
    Ok(())
}

fn check_increment(inc: &NoiseIncrement, kind: IncrementKind, dt: f64, n: usize) -> Result<()> {
    inc.values.check_dim(n)?;
    if inc.kind != kind {
        return Err(domain!("expected a {kind:?} increment, got {:?}", inc.kind));
    }
    if math::abs(inc.dt - dt) > 1e-12 * dt {
        return Err(domain!("increment covers {} but the step is {dt}", inc.dt));
    }
    Ok(())
}

/// One step from `y` with a filtered increment `E_n(τ)B_nΔW`.
pub fn step(cfg: &SchemeConfig, y: &SpectralVector, increment: &NoiseIncrement) -> Result<SpectralVector> {
    y.check_dim(cfg.n())?;
    check_increment(increment, IncrementKind::Filtered, cfg.tau(), cfg.n())?;
    let tau = cfg.tau();
    let f = crate::nemytskij::evaluate_f(&cfg.nonlinearity, y, &cfg.grid)?;
    let out: Vec<f64> = (0..cfg.n())
        .map(|i| {
            let d = math::exp(-lambda(i + 1) * tau);
            d * (y.coeffs()[i] + tau * f.coeffs()[i]) + increment.values.coeffs()[i]
        })
        .collect();
    guard(&out, 0)?;
    Ok(SpectralVector::from_vec_unchecked(out))
}

/// Runs `M` steps, calling `observe(m, Y_m)` for `m = 0..=M`.
pub fn integrate_observed(
    cfg: &SchemeConfig,
    path: &SeedPath,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<SpectralVector> {
    let mut stepper = Stepper::new(cfg, cfg.tau());
    let mut y = cfg.x0.coeffs().to_vec();
    let mut z = alloc::vec![0.0; cfg.n()];
    observe(0, &y);
    for m in 0..cfg.steps {
        path.with_counter(path.counter + m as u64).fill_normals(lane::INCREMENT, &mut z);
        stepper.raw_from_normals(&mut z);
        stepper.advance(&mut y, &z, m)?;
        observe(m + 1, &y);
    }
    Ok(SpectralVector::from_vec_unchecked(y))
}

/// `Y_M` without storing the path.
pub fn integrate_endpoint(cfg: &SchemeConfig, path: &SeedPath) -> Result<SpectralVector> {
    integrate_observed(cfg, path, |_, _| {})
}

/// Full path `Y_0..Y_M`.
pub fn integrate(cfg: &SchemeConfig, path: &SeedPath) -> Result<SchemePath> {
    let mut states = Vec::with_capacity(cfg.steps + 1);
    integrate_observed(cfg, path, |_, y| states.push(SpectralVector::from_vec_unchecked(y.to_vec())))?;
    Ok(SchemePath { states, seed_path: *path })
}

/// `Ỹ(t_m + s) = E_n(s)[Y_m + s F_n(Y_m) + B_n(W(t_m + s) - W(t_m))]`, with
/// the raw increment over `[t_m, t_m + s]`. At `s = τ`, fed the raw version
/// of the step's increment, this reproduces [`step`] bit for bit.
pub fn continuous_extension(
    cfg: &SchemeConfig,
    y_m: &SpectralVector,
    s: f64,
    inc_to_s: &NoiseIncrement,
) -> Result<SpectralVector> {
    y_m.check_dim(cfg.n())?;
    let tau = cfg.tau();
    if !(s > 0.0 && s <= tau * (1.0 + 1e-12)) {
        return Err(domain!("extension time must lie in (0, {tau}], got {s}"));
    }
    check_increment(inc_to_s, IncrementKind::Raw, s, cfg.n())?;
    let f = crate::nemytskij::evaluate_f(&cfg.nonlinearity, y_m, &cfg.grid)?;
    let out: Vec<f64> = (0..cfg.n())
        .map(|i| {
            let d = math::exp(-lambda(i + 1) * s);
            d * (y_m.coeffs()[i] + s * f.coeffs()[i]) + d * inc_to_s.values.coeffs()[i]
        })
        .collect();
    guard(&out, 0)?;
    Ok(SpectralVector::from_vec_unchecked(out))
}

/// Endpoints of several coarse discretizations and one fine reference, all
/// driven by the same Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledEndpoints {
    /// One endpoint per entry of `level_steps`, in order.
    pub levels: Vec<SpectralVector>,
    pub reference: SpectralVector,
}

/// Integrates the fine path with `reference_steps` steps and, alongside it,
/// every coarse path with `level_steps[i]` steps. Fine raw increment `j` is
/// drawn on counter `path.counter + j`; a coarse increment is the sum of the
/// fine raw increments it covers, filtered with the coarse step. Every level
/// must divide `reference_steps`.
pub fn coupled_endpoints(
    cfg: &SchemeConfig,
    level_steps: &[usize],
    reference_steps: usize,
    path: &SeedPath,
) -> Result<CoupledEndpoints> {
    if reference_steps == 0 {
        return Err(domain!("need at least one reference step"));
    }
    for &m in level_steps {
        if m == 0 || !reference_steps.is_multiple_of(m) {
            return Err(domain!("level with {m} steps does not divide the {reference_steps}-step reference"));
        }
    }
    let n = cfg.n();
    let horizon = cfg.horizon;
    let mut fine = Stepper::new(cfg, horizon / reference_steps as f64);
    let mut y_fine = cfg.x0.coeffs().to_vec();
    struct Level<'a> {
        stepper: Stepper<'a>,
        block: usize,
        y: Vec<f64>,
        acc: Vec<f64>,
    }
    let mut levels: Vec<Level> = level_steps
        .iter()
        .map(|&m| Level {
            stepper: Stepper::new(cfg, horizon / m as f64),
            block: reference_steps / m,
            y: cfg.x0.coeffs().to_vec(),
            acc: alloc::vec![0.0; n],
        })
        .collect();
    let mut raw = alloc::vec![0.0; n];
    for j in 0..reference_steps {
        path.with_counter(path.counter + j as u64).fill_normals(lane::INCREMENT, &mut raw);
        fine.raw_from_normals(&mut raw);
        fine.advance(&mut y_fine, &raw, j)?;
        for level in levels.iter_mut() {
            for (a, r) in level.acc.iter_mut().zip(&raw) {
                *a += r;
            }
            if (j + 1) % level.block == 0 {
                level.stepper.advance(&mut level.y, &level.acc, (j + 1) / level.block - 1)?;
                level.acc.fill(0.0);
            }
        }
    }
    Ok(CoupledEndpoints {
        levels: levels.into_iter().map(|l| SpectralVector::from_vec_unchecked(l.y)).collect(),
        reference: SpectralVector::from_vec_unchecked(y_fine),
    })
}

/// Endpoint of the scheme with step `τ / refinement` on the fine path whose
/// aggregated increments drive the coarse scheme; `refinement = 1` is
/// [`integrate_endpoint`].
pub fn integrate_reference(cfg: &SchemeConfig, refinement: usize, path: &SeedPath) -> Result<SpectralVector> {
    if refinement == 0 {
        return Err(domain!("refinement must be >= 1"));
    }
    Ok(coupled_endpoints(cfg, &[], cfg.steps * refinement, path)?.reference)
}

fn linear_rate(cfg: &SchemeConfig) -> Result<f64> {
    cfg.nonlinearity
        .linear_rate()
        .ok_or_else(|| domain!("closed-form laws need a zero or linear nonlinearity, got {:?}", cfg.nonlinearity.name))
}

/// Draw from the exact law of `X^n(T)` for drift `a x`:
/// mean `e^{(-λ_k + a)T} x0_k`, variance `q_k (1 - e^{-2(λ_k - a)T}) / (2(λ_k - a))`.
pub fn exact_linear_endpoint(cfg: &SchemeConfig, path: &SeedPath) -> Result<SpectralVector> {
    let a = linear_rate(cfg)?;
    let law = linear_exact_law(a, &cfg.cov, cfg.horizon, &cfg.x0)?;
    Ok(law.sample(path, lane::EXACT))
}

/// Per-mode growth factor `ρ_k = e^{-λ_k τ}(1 + aτ)` of the linear scheme.
pub(crate) fn linear_amplification(a: f64, k: usize, tau: f64) -> f64 {
    math::exp(-lambda(k) * tau) * (1.0 + a * tau)
}

/// `Σ_{j<m} ρ^{2j}` computed without cancellation near `ρ² = 1`.
pub(crate) fn geometric_sum_sq(rho: f64, m: usize) -> f64 {
    if rho == 0.0 {
        return 1.0;
    }
    let l2 = 2.0 * math::ln(math::abs(rho));
    if l2 == 0.0 {
        return m as f64;
    }
    math::expm1(m as f64 * l2) / math::expm1(l2)
}

/// Exact law of `Y_M` for drift `a x` with `M` steps of size `τ`: mean
/// `ρ_k^M x0_k` and variance `q_k τ e^{-2λ_k τ} Σ_{j<M} ρ_k^{2j}`.
pub fn linear_scheme_law(cfg: &SchemeConfig) -> Result<GaussianState> {
    let a = linear_rate(cfg)?;
    let tau = cfg.tau();
    let m = cfg.steps;
    let n = cfg.n();
    let mut mean = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    let ln_growth = math::ln_1p(a * tau);
    for k in 1..=n {
        let l = lambda(k);
        let rho = linear_amplification(a, k, tau);
        let rho_m =
            if 1.0 + a * tau > 0.0 { math::exp(m as f64 * (-l * tau + ln_growth)) } else { math::powf(rho, m as f64) };
        mean.push(rho_m * cfg.x0.coeffs()[k - 1]);
        var.push(cfg.cov.q(k) * tau * math::exp(-2.0 * l * tau) * geometric_sum_sq(rho, m));
    }
    GaussianState::new(SpectralVector::from_computed(mean, "scheme law")?, var)
}
