//! Both sides of the weak-error representation
//!
//! ```text
//! E Φ(Y_M) - E Φ(X(T)) = Σ_m ∫_{t_m}^{t_{m+1}} E⟨Dμ(T-t, Ỹ(t)), E(t-t_m) F(Y_m) - F(Ỹ(t))⟩ dt
//!                      + Σ_m ∫_{t_m}^{t_{m+1}} ½ E Tr[D²μ(T-t, Ỹ(t)) (E(t-t_m)B(E(t-t_m)B)* - BB*)] dt
//! ```
//!
//! For linear drift `a x` every expectation is Gaussian and evaluated in
//! closed form; the time integrals use Gauss-Legendre on each subinterval.
//! A Monte Carlo evaluator over coupled scheme paths covers the rest.
//!
//! With `r = t - t_m` and drift `a x`, the continuous extension is
//! `Ỹ_k = e^{-λ_k r}((1 + a r) Y_{m,k} + ΔW_k(r))` and the drift mismatch is
//! `Z_k = -a e^{-λ_k r}(a r Y_{m,k} + ΔW_k(r))`.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::exec::Executor;
use crate::kolmogorov::{grad_mu, hess_mu_diagonal, mu, GaussianState, KolmogorovField, TestFunctional};
use crate::math;
use crate::noise::{lane, ou_variance_factor, CovarianceSpec};
use crate::quadrature::{composite, GaussLegendre, QuadratureValue};
use crate::rng::SeedPath;
use crate::scheme::{integrate_reference, linear_scheme_law, SchemeConfig, Stepper};
use crate::spectral::{lambda, SpectralVector};
use crate::stats::{Estimate, MeanAccumulator};

/// Default Gauss-Legendre nodes per subinterval.
pub const DEFAULT_NODES: usize = 8;

/// Acceptance rule: `|residual| ≤ absolute + quadrature_error + stderr_multiple · residual_stderr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub absolute: f64,
    pub stderr_multiple: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { absolute: 1e-10, stderr_multiple: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationReport {
    pub lhs: Estimate,
    pub rhs_drift_term: Estimate,
    pub rhs_trace_term: Estimate,
    /// `lhs - (rhs_drift_term + rhs_trace_term)`
    pub residual: f64,
    /// Standard error of the residual. Monte Carlo runs estimate it from the
    /// per-path residuals, which accounts for the correlation between terms.
    pub residual_stderr: f64,
    /// Change of the right-hand side when the rule is halved.
    pub quadrature_error: f64,
    pub quadrature_nodes: usize,
    pub mc_samples: u64,
    pub tolerance: f64,
    pub passed: bool,
}

impl RepresentationReport {
    fn assemble(
        lhs: Estimate,
        drift: Estimate,
        trace: Estimate,
        residual_stderr: f64,
        quadrature_error: f64,
        nodes: usize,
        tol: Tolerances,
    ) -> Self {
        let residual = lhs.mean - (drift.mean + trace.mean);
        let tolerance = tol.absolute + quadrature_error + tol.stderr_multiple * residual_stderr;
        Self {
            lhs,
            rhs_drift_term: drift,
            rhs_trace_term: trace,
            residual,
            residual_stderr,
            quadrature_error,
            quadrature_nodes: nodes,
            mc_samples: lhs.samples.max(drift.samples),
            tolerance,
            passed: math::abs(residual) <= tolerance,
        }
    }
}

fn check_field(cfg: &SchemeConfig, field: &KolmogorovField) -> Result<f64> {
    let a = cfg
        .nonlinearity
        .linear_rate()
        .ok_or_else(|| domain!("closed-form evaluation needs zero or linear drift, got {:?}", cfg.nonlinearity.name))?;
    if a != field.a {
        return Err(domain!("scheme drift rate {a} differs from the field's {}", field.a));
    }
    if cfg.cov != field.cov {
        return Err(domain!("scheme and field use different covariances"));
    }
    cfg.x0.check_dim(field.n())?;
    Ok(a)
}

/// `E Φ(Y_M) - E Φ(X^n(T))` from the two exact Gaussian laws.
pub fn lhs_weak_error(cfg: &SchemeConfig, field: &KolmogorovField) -> Result<f64> {
    check_field(cfg, field)?;
    let scheme = linear_scheme_law(cfg)?.expect(&field.functional)?;
    let exact = mu(field, cfg.horizon, &cfg.x0)?;
    Ok(scheme - exact)
}

/// Per-step moments `(mean_m, V_m)` of the linear scheme, `m = 0..M-1`.
fn step_laws(cfg: &SchemeConfig, a: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let tau = cfg.tau();
    let n = cfg.n();
    let mut mean = cfg.x0.coeffs().to_vec();
    let mut var = alloc::vec![0.0; n];
    let mut out = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        out.push((mean.clone(), var.clone()));
        for k in 1..=n {
            let d = math::exp(-lambda(k) * tau);
            let rho = d * (1.0 + a * tau);
            mean[k - 1] *= rho;
            var[k - 1] = rho * rho * var[k - 1] + cfg.cov.q(k) * tau * d * d;
        }
    }
    out
}

/// Law of `Ỹ(t_m + r)` and the moments of `Z` given the law of `Y_m`.
struct ExtensionMoments {
    y: GaussianState,
    z_mean: Vec<f64>,
    /// `Cov(Ỹ_k, Z_k)`
    yz_cov: Vec<f64>,
}

fn extension_moments(a: f64, cov: &CovarianceSpec, r: f64, mean: &[f64], var: &[f64]) -> ExtensionMoments {
    let n = mean.len();
    let mut ym = Vec::with_capacity(n);
    let mut yv = Vec::with_capacity(n);
    let mut z_mean = Vec::with_capacity(n);
    let mut yz_cov = Vec::with_capacity(n);
    let g = 1.0 + a * r;
    for k in 1..=n {
        let e = math::exp(-lambda(k) * r);
        let q = cov.q(k);
        ym.push(e * g * mean[k - 1]);
        yv.push(e * e * (g * g * var[k - 1] + q * r));
        z_mean.push(-a * e * a * r * mean[k - 1]);
        yz_cov.push(-a * e * e * (g * a * r * var[k - 1] + q * r));
    }
    ExtensionMoments { y: GaussianState { mean: SpectralVector::from_vec_unchecked(ym), var: yv }, z_mean, yz_cov }
}

/// `D(s) = exp(-½ Σ g_k² σ_k²(s))` for the cosine kind.
fn cosine_damping(field: &KolmogorovField, g: &[f64], s: f64) -> f64 {
    let v: f64 =
        (1..=g.len()).map(|k| g[k - 1] * g[k - 1] * field.cov.q(k) * ou_variance_factor(lambda(k) - field.a, s)).sum();
    math::exp(-0.5 * v)
}

/// `(drift integrand, trace integrand)` at `t = t_m + r`, `s = T - t`.
fn analytic_integrands(field: &KolmogorovField, a: f64, r: f64, s: f64, mean: &[f64], var: &[f64]) -> (f64, f64) {
    let mom = extension_moments(a, &field.cov, r, mean, var);
    let n = mean.len();
    let gap = |k: usize| field.cov.q(k) * math::expm1(-2.0 * lambda(k) * r);
    match &field.functional {
        TestFunctional::Cosine(g) => {
            let h = field.h(s);
            let d = cosine_damping(field, g.coeffs(), s);
            let es = mom.y.expect_sin(&h);
            let ec = mom.y.expect_cos(&h);
            let mut drift = 0.0;
            let mut trace = 0.0;
            for k in 1..=n {
                let hk = h[k - 1];
                drift += hk * (mom.z_mean[k - 1] * es + hk * mom.yz_cov[k - 1] * ec);
                trace += gap(k) * hk * hk;
            }
            (-d * drift, -0.5 * d * ec * trace)
        }
        TestFunctional::Linear(_) => {
            let h = field.h(s);
            (h.iter().zip(&mom.z_mean).map(|(h, z)| h * z).sum(), 0.0)
        }
        TestFunctional::QuadraticDiag(w) => {
            let mut drift = 0.0;
            let mut trace = 0.0;
            for k in 1..=n {
                let e = math::exp((-lambda(k) + a) * s);
                let c = 2.0 * w[k - 1] * e * e;
                drift += c * (mom.y.mean.coeffs()[k - 1] * mom.z_mean[k - 1] + mom.yz_cov[k - 1]);
                trace += gap(k) * c;
            }
            (drift, 0.5 * trace)
        }
    }
}

fn breaks(cfg: &SchemeConfig) -> Vec<f64> {
    let tau = cfg.tau();
    (0..=cfg.steps).map(|m| if m == cfg.steps { cfg.horizon } else { m as f64 * tau }).collect()
}

fn analytic_term(cfg: &SchemeConfig, field: &KolmogorovField, nodes: usize, which: usize) -> Result<QuadratureValue> {
    let a = check_field(cfg, field)?;
    let laws = step_laws(cfg, a);
    let b = breaks(cfg);
    composite(&b, nodes, |m, t| {
        let (mean, var) = &laws[m];
        let (d, tr) = analytic_integrands(field, a, t - b[m], cfg.horizon - t, mean, var);
        if which == 0 {
            d
        } else {
            tr
        }
    })
}

/// Drift term in closed form (linear drift); exactly zero when `a = 0`.
pub fn rhs_drift_term(cfg: &SchemeConfig, field: &KolmogorovField, nodes: usize) -> Result<QuadratureValue> {
    if check_field(cfg, field)? == 0.0 {
        return Ok(QuadratureValue { value: 0.0, error_estimate: 0.0 });
    }
    analytic_term(cfg, field, nodes, 0)
}

/// Trace term in closed form (linear drift).
pub fn rhs_trace_term(cfg: &SchemeConfig, field: &KolmogorovField, nodes: usize) -> Result<QuadratureValue> {
    analytic_term(cfg, field, nodes, 1)
}

/// Evaluates both sides in closed form.
pub fn verify_representation(
    cfg: &SchemeConfig,
    field: &KolmogorovField,
    nodes: usize,
    tol: Tolerances,
) -> Result<RepresentationReport> {
    let lhs = lhs_weak_error(cfg, field)?;
    let drift = rhs_drift_term(cfg, field, nodes)?;
    let trace = rhs_trace_term(cfg, field, nodes)?;
    Ok(RepresentationReport::assemble(
        Estimate::exact(lhs),
        Estimate::exact(drift.value),
        Estimate::exact(trace.value),
        0.0,
        drift.error_estimate + trace.error_estimate,
        nodes,
        tol,
    ))
}

/// `Z̃(t) = E_n(T - t) Ỹ(t)`.
pub fn auxiliary_z(cfg: &SchemeConfig, y_tilde: &SpectralVector, t: f64) -> Result<SpectralVector> {
    if !(t >= 0.0 && t <= cfg.horizon) {
        return Err(domain!("t must lie in [0, {}]", cfg.horizon));
    }
    Ok(crate::spectral::apply_semigroup(y_tilde, crate::SemigroupTime::new(cfg.horizon - t)?))
}

/// Derivatives of `μ(s, ·)` as needed by the Monte Carlo evaluator.
pub trait GradientModel: Sync {
    fn dim(&self) -> usize;
    /// `Dμ(s, x)` and the diagonal of `D²μ(s, x)`.
    fn derivatives(&self, s: f64, x: &[f64], grad: &mut [f64], hess_diag: &mut [f64]) -> Result<()>;
}

impl GradientModel for KolmogorovField {
    fn dim(&self) -> usize {
        self.n()
    }

    fn derivatives(&self, s: f64, x: &[f64], grad: &mut [f64], hess_diag: &mut [f64]) -> Result<()> {
        let x = SpectralVector::from_vec_unchecked(x.to_vec());
        grad.copy_from_slice(grad_mu(self, s, &x)?.coeffs());
        hess_diag.copy_from_slice(&hess_mu_diagonal(self, s, &x)?);
        Ok(())
    }
}

/// `μ(s, x)` estimated by averaging `Φ` over fine-step scheme endpoints from
/// `x`, with derivatives by central differences of step `h` over common
/// random numbers. Intended for very small `n`; the finite-difference bias
/// is `O(h²)` and is not corrected.
#[derive(Debug, Clone)]
pub struct MonteCarloKolmogorov {
    pub cfg: SchemeConfig,
    pub functional: TestFunctional,
    /// Fine step used for inner paths.
    pub fine_dt: f64,
    pub inner_samples: u32,
    pub h: f64,
    pub seed: u64,
}

impl MonteCarloKolmogorov {
    pub fn new(
        cfg: SchemeConfig,
        functional: TestFunctional,
        fine_dt: f64,
        inner_samples: u32,
        seed: u64,
    ) -> Result<Self> {
        cfg.x0.check_dim(functional.dim())?;
        if !(fine_dt > 0.0) || inner_samples == 0 {
            return Err(domain!("need a positive inner step and at least one inner sample"));
        }
        Ok(Self { cfg, functional, fine_dt, inner_samples, h: 1e-2, seed })
    }

    /// Monte Carlo estimate of `μ(s, x)`.
    pub fn value(&self, s: f64, x: &[f64]) -> Result<f64> {
        let x = SpectralVector::new(x.to_vec())?;
        if s <= 0.0 {
            return Ok(self.functional.eval(x.coeffs()));
        }
        let steps = (math::floor(s / self.fine_dt) as usize + 1).max(1);
        let mut cfg = self.cfg.with_steps(steps)?;
        cfg.horizon = s;
        cfg.x0 = x;
        let mut acc = crate::stats::KahanSum::new();
        for i in 0..self.inner_samples {
            let end = integrate_reference(&cfg, 1, &SeedPath::new(self.seed, i, 0))?;
            acc.add(self.functional.eval(end.coeffs()));
        }
        Ok(acc.value() / self.inner_samples as f64)
    }
}

impl GradientModel for MonteCarloKolmogorov {
    fn dim(&self) -> usize {
        self.functional.dim()
    }

    fn derivatives(&self, s: f64, x: &[f64], grad: &mut [f64], hess_diag: &mut [f64]) -> Result<()> {
        let centre = self.value(s, x)?;
        let mut y = x.to_vec();
        for k in 0..x.len() {
            y[k] = x[k] + self.h;
            let up = self.value(s, &y)?;
            y[k] = x[k] - self.h;
            let down = self.value(s, &y)?;
            y[k] = x[k];
            grad[k] = (up - down) / (2.0 * self.h);
            hess_diag[k] = (up - 2.0 * centre + down) / (self.h * self.h);
        }
        Ok(())
    }
}

/// How `E Φ(X^n(T))` is obtained in the Monte Carlo evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactValue {
    Known(f64),
    /// Fine scheme with `τ / refinement`, on a path independent of the
    /// representation samples.
    FineScheme {
        refinement: usize,
    },
}

/// Monte Carlo evaluation of both sides over coupled paths.
///
/// Sample `i` uses stream `path.stream_id + i`. On subinterval `m` the
/// Brownian path is built from independent pieces between the sorted
/// quadrature times (both the `q`-node rule and the `q/2`-node rule used for
/// the error estimate) on the split lane, counter `path.counter + m·P + j`;
/// `Ỹ` at each node uses the partial sum and `Y_{m+1}` the full sum, so
/// `Ỹ(t_{m+1}) = Y_{m+1}` holds on every path.
#[allow(clippy::too_many_arguments)]
pub fn verify_representation_mc<E: Executor, G: GradientModel>(
    cfg: &SchemeConfig,
    model: &G,
    functional: &TestFunctional,
    exact: ExactValue,
    nodes: usize,
    samples: u32,
    path: &SeedPath,
    exec: &E,
    tol: Tolerances,
) -> Result<RepresentationReport> {
    let n = cfg.n();
    if model.dim() != n || functional.dim() != n {
        return Err(domain!("model and functional must act on {n} modes"));
    }
    if samples < 2 {
        return Err(domain!("need at least two samples"));
    }
    let tau = cfg.tau();
    let hi = GaussLegendre::new(nodes)?;
    let lo = GaussLegendre::new((nodes / 2).max(1))?;
    // (r, weight in hi rule, weight in lo rule), sorted by r
    let mut times: Vec<(f64, f64, f64)> = hi
        .on_interval(0.0, tau)
        .map(|(r, w)| (r, w, 0.0))
        .chain(lo.on_interval(0.0, tau).map(|(r, w)| (r, 0.0, w)))
        .collect();
    times.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pieces = times.len() as u64 + 1;

    let per_sample = |i: usize| -> Result<[f64; 6]> {
        let sp = path.with_stream(path.stream_id.wrapping_add(i as u32));
        let mut stepper = Stepper::new(cfg, tau);
        let grid = cfg.grid();
        let mut phys = alloc::vec![0.0; grid.m_points()];
        let mut y = cfg.x0.coeffs().to_vec();
        let mut fy = alloc::vec![0.0; n];
        let mut w = alloc::vec![0.0; n];
        let mut yt = alloc::vec![0.0; n];
        let mut fyt = alloc::vec![0.0; n];
        let mut grad = alloc::vec![0.0; n];
        let mut hess = alloc::vec![0.0; n];
        let mut z = alloc::vec![0.0; n];
        let q: Vec<f64> = (1..=n).map(|k| cfg.cov.q(k)).collect();
        let (mut d_hi, mut t_hi, mut d_lo, mut t_lo) = (0.0, 0.0, 0.0, 0.0);
        for m in 0..cfg.steps {
            cfg.nonlinearity.eval_into(grid, &y, &mut phys, &mut fy)?;
            w.fill(0.0);
            let mut prev = 0.0;
            let t_m = m as f64 * tau;
            for (j, &(r, w_hi, w_lo)) in times.iter().enumerate() {
                let dr = r - prev;
                sp.with_counter(sp.counter + m as u64 * pieces + j as u64).fill_normals(lane::SPLIT_HEAD, &mut z);
                for k in 0..n {
                    w[k] += math::sqrt(q[k] * dr) * z[k];
                }
                prev = r;
                for k in 0..n {
                    let d = math::exp(-lambda(k + 1) * r);
                    yt[k] = d * (y[k] + r * fy[k]) + d * w[k];
                }
                cfg.nonlinearity.eval_into(grid, &yt, &mut phys, &mut fyt)?;
                let s = cfg.horizon - (t_m + r);
                model.derivatives(s.max(0.0), &yt, &mut grad, &mut hess)?;
                let mut drift = 0.0;
                let mut trace = 0.0;
                for k in 0..n {
                    let l = lambda(k + 1);
                    drift += grad[k] * (math::exp(-l * r) * fy[k] - fyt[k]);
                    trace += q[k] * math::expm1(-2.0 * l * r) * hess[k];
                }
                d_hi += w_hi * drift;
                d_lo += w_lo * drift;
                t_hi += w_hi * 0.5 * trace;
                t_lo += w_lo * 0.5 * trace;
            }
            let dr = tau - prev;
            sp.with_counter(sp.counter + m as u64 * pieces + pieces - 1).fill_normals(lane::SPLIT_HEAD, &mut z);
            for k in 0..n {
                w[k] += math::sqrt(q[k] * dr) * z[k];
            }
            stepper.advance(&mut y, &w, m)?;
        }
        let phi_end = functional.eval(&y);
        let reference = match exact {
            ExactValue::Known(v) => v,
            ExactValue::FineScheme { refinement } => {
                functional.eval(integrate_reference(cfg, refinement, &sp)?.coeffs())
            }
        };
        Ok([phi_end - reference, d_hi, t_hi, d_lo, t_lo, phi_end])
    };

    let rows = exec.map_indexed(samples as usize, per_sample);
    let mut acc: [MeanAccumulator; 4] = Default::default();
    let mut resid_lo = MeanAccumulator::new();
    for row in rows {
        let [lhs, d_hi, t_hi, d_lo, t_lo, _] = row?;
        acc[0].push(lhs);
        acc[1].push(d_hi);
        acc[2].push(t_hi);
        acc[3].push(lhs - d_hi - t_hi);
        resid_lo.push(lhs - d_lo - t_lo);
    }
    let lhs = acc[0].estimate();
    let drift = acc[1].estimate();
    let trace = acc[2].estimate();
    let residual = acc[3].estimate();
    let quad = math::abs(acc[3].mean() - resid_lo.mean());
    let mut report = RepresentationReport::assemble(lhs, drift, trace, residual.stderr, quad, nodes, tol);
    report.mc_samples = samples as u64;
    Ok(report)
}

/// `E Φ(Y_M) - E Φ(X^n(T))` by Monte Carlo over scheme endpoints, with the
/// exact side either known or estimated from fine-step paths coupled to the
/// same Brownian increments.
pub fn lhs_weak_error_mc<E: Executor>(
    cfg: &SchemeConfig,
    functional: &TestFunctional,
    exact: ExactValue,
    samples: u32,
    path: &SeedPath,
    exec: &E,
) -> Result<Estimate> {
    let rows = exec.map_indexed(samples as usize, |i| -> Result<f64> {
        let sp = path.with_stream(path.stream_id.wrapping_add(i as u32));
        Ok(match exact {
            ExactValue::Known(v) => functional.eval(crate::scheme::integrate_endpoint(cfg, &sp)?.coeffs()) - v,
            ExactValue::FineScheme { refinement } => {
                let out = crate::scheme::coupled_endpoints(cfg, &[cfg.steps], cfg.steps * refinement, &sp)?;
                functional.eval(out.levels[0].coeffs()) - functional.eval(out.reference.coeffs())
            }
        })
    });
    let mut acc = MeanAccumulator::new();
    for r in rows {
        acc.push(r?);
    }
    Ok(acc.estimate())
}
