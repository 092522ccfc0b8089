//! Convergence and diagnostic studies, as pure functions of their inputs.
//!
//! Every Monte Carlo runner takes an [`Executor`] and a base [`SeedPath`];
//! sample `i` always uses stream `path.stream_id + i`, and reductions run in
//! sample order, so results do not depend on how the executor schedules work.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::exec::Executor;
use crate::kolmogorov::{linear_exact_law, KolmogorovField, TestFunctional};
use crate::math;
use crate::noise::sample_subinterval_pair;
use crate::rate::RatePoint;
use crate::representation::lhs_weak_error;
use crate::rng::SeedPath;
use crate::scheme::{continuous_extension, coupled_endpoints, integrate_observed, linear_scheme_law, SchemeConfig};
use crate::spectral::{lambda, sobolev_norm_slice, SpectralVector};
use crate::stats::{Estimate, MeanAccumulator};

/// Step count `T / τ`, which must be a positive integer.
pub fn steps_for(horizon: f64, tau: f64) -> Result<usize> {
    let m = horizon / tau;
    let r = libm::round(m);
    if !(r >= 1.0) || math::abs(m - r) > 1e-9 * r {
        return Err(domain!("step {tau} does not divide the horizon {horizon}"));
    }
    Ok(r as usize)
}

fn check_monotone(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(domain!("{what} sweep is empty"));
    }
    let up = xs.windows(2).all(|w| w[1] > w[0]);
    let down = xs.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(domain!("{what} sweep must be strictly monotone"));
    }
    Ok(())
}

/// Field matching the scheme's drift and noise, with the functional resized
/// to the scheme's dimension.
pub fn field_for(cfg: &SchemeConfig, functional: &TestFunctional) -> Result<KolmogorovField> {
    let a =
        cfg.nonlinearity.linear_rate().ok_or_else(|| domain!("closed-form weak errors need zero or linear drift"))?;
    KolmogorovField::new(a, cfg.cov.clone(), functional.resized(cfg.n())?)
}

/// `|E Φ(Y_M) - E Φ(X^n(T))|` in closed form for each `τ`.
pub fn weak_rate_time_analytic(
    base: &SchemeConfig,
    functional: &TestFunctional,
    taus: &[f64],
) -> Result<Vec<RatePoint>> {
    check_monotone(taus, "tau")?;
    let field = field_for(base, functional)?;
    taus.iter()
        .map(|&tau| {
            let cfg = base.with_steps(steps_for(base.horizon, tau)?)?;
            Ok(RatePoint::exact(tau, math::abs(lhs_weak_error(&cfg, &field)?)))
        })
        .collect()
}

/// Reference used for spatial errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialReference {
    /// The same scheme (same `τ`) truncated at `N_ref`.
    Scheme,
    /// The exact law at `N_ref`, and the exact law at each `N`; isolates the
    /// truncation error from the time discretization.
    Exact,
}

/// `|E Φ(·^N) - E Φ(·^{N_ref})|` in closed form, reported against `h = λ_N`.
pub fn weak_rate_spatial_analytic(
    base: &SchemeConfig,
    functional: &TestFunctional,
    dims: &[usize],
    n_ref: usize,
    reference: SpatialReference,
) -> Result<Vec<RatePoint>> {
    let as_f: Vec<f64> = dims.iter().map(|d| *d as f64).collect();
    check_monotone(&as_f, "N")?;
    if dims.iter().any(|d| *d == 0 || *d > n_ref) {
        return Err(domain!("every N must lie in 1..={n_ref}"));
    }
    let value = |n: usize| -> Result<f64> {
        let cfg = base.with_dimension(n)?;
        let field = field_for(&cfg, functional)?;
        let law = match reference {
            SpatialReference::Scheme => linear_scheme_law(&cfg)?,
            SpatialReference::Exact => linear_exact_law(field.a, &cfg.cov, cfg.horizon, &cfg.x0)?,
        };
        law.expect(&field.functional)
    };
    let r = value(n_ref)?;
    dims.iter().map(|&n| Ok(RatePoint::exact(lambda(n), math::abs(value(n)? - r)))).collect()
}

/// Monte Carlo spatial weak errors: every `N` and the reference `N_ref` run
/// on the same Brownian path (draws are prefix-stable in the mode index), and
/// the error at `N` is the mean of `Φ(Y^N_M) - Φ(Y^{N_ref}_M)`.
pub fn weak_rate_spatial_mc<E: Executor>(
    base: &SchemeConfig,
    functional: &TestFunctional,
    dims: &[usize],
    n_ref: usize,
    samples: u32,
    path: &SeedPath,
    exec: &E,
) -> Result<Vec<RatePoint>> {
    let as_f: Vec<f64> = dims.iter().map(|d| *d as f64).collect();
    check_monotone(&as_f, "N")?;
    if dims.iter().any(|d| *d == 0 || *d > n_ref) {
        return Err(domain!("every N must lie in 1..={n_ref}"));
    }
    if samples < 2 {
        return Err(domain!("need at least two samples"));
    }
    let reference = base.with_dimension(n_ref)?;
    let phi_ref = functional.resized(n_ref)?;
    let levels: Vec<(SchemeConfig, TestFunctional)> =
        dims.iter().map(|&n| Ok((base.with_dimension(n)?, functional.resized(n)?))).collect::<Result<_>>()?;
    let rows = exec.map_indexed(samples as usize, |i| -> Result<Vec<f64>> {
        let sp = path.with_stream(path.stream_id.wrapping_add(i as u32));
        let r = phi_ref.eval(crate::scheme::integrate_endpoint(&reference, &sp)?.coeffs());
        levels
            .iter()
            .map(|(cfg, phi)| Ok(phi.eval(crate::scheme::integrate_endpoint(cfg, &sp)?.coeffs()) - r))
            .collect()
    });
    let mut acc = alloc::vec![MeanAccumulator::new(); dims.len()];
    for row in rows {
        for (a, d) in acc.iter_mut().zip(row?) {
            a.push(d);
        }
    }
    Ok(dims
        .iter()
        .zip(&acc)
        .map(|(&n, a)| {
            let e = a.estimate();
            RatePoint { h: lambda(n), error: math::abs(e.mean), stderr: e.stderr, samples: e.samples }
        })
        .collect())
}

/// Monte Carlo temporal weak errors against a shared fine reference.
///
/// All step sizes in `taus` are driven by one fine path with step
/// `min(τ) / refinement`; the error at `τ` is the mean over samples of
/// `Φ(Y^τ_M) - Φ(Y^{ref})`.
pub fn weak_rate_time_mc<E: Executor>(
    base: &SchemeConfig,
    functional: &TestFunctional,
    taus: &[f64],
    refinement: usize,
    samples: u32,
    path: &SeedPath,
    exec: &E,
) -> Result<Vec<RatePoint>> {
    check_monotone(taus, "tau")?;
    if refinement == 0 || samples < 2 {
        return Err(domain!("need refinement >= 1 and at least two samples"));
    }
    let phi = functional.resized(base.n())?;
    let levels: Vec<usize> = taus.iter().map(|t| steps_for(base.horizon, *t)).collect::<Result<_>>()?;
    let finest = *levels.iter().max().expect("nonempty");
    let reference_steps = finest * refinement;
    let rows = exec.map_indexed(samples as usize, |i| -> Result<Vec<f64>> {
        let sp = path.with_stream(path.stream_id.wrapping_add(i as u32));
        let out = coupled_endpoints(base, &levels, reference_steps, &sp)?;
        let r = phi.eval(out.reference.coeffs());
        Ok(out.levels.iter().map(|y| phi.eval(y.coeffs()) - r).collect())
    });
    let mut acc = alloc::vec![MeanAccumulator::new(); levels.len()];
    for row in rows {
        for (a, d) in acc.iter_mut().zip(row?) {
            a.push(d);
        }
    }
    Ok(taus
        .iter()
        .zip(&acc)
        .map(|(&tau, a)| {
            let e = a.estimate();
            RatePoint { h: tau, error: math::abs(e.mean), stderr: e.stderr, samples: e.samples }
        })
        .collect())
}

/// Monte Carlo moment diagnostics for one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub tau: f64,
    /// `sup_m (E ‖(-A)^γ Y_m‖²)^{1/2}`
    pub sup_gamma_norm: Estimate,
    /// `(E ‖(-A)^{1/2} Y_M‖²)^{1/2}`
    pub h1_norm: Estimate,
    /// `(E ‖Ỹ(T - τ/2) - Y_{M-1}‖²)^{1/2}`
    pub increment_norm: Estimate,
}

/// Square root of a mean-square estimate, with the delta-method stderr.
fn root(e: Estimate) -> Estimate {
    let mean = math::sqrt(e.mean.max(0.0));
    let stderr = if mean > 0.0 { e.stderr / (2.0 * mean) } else { 0.0 };
    Estimate { mean, stderr, samples: e.samples }
}

/// For each `τ`: the `Ḣ^{2γ}`-type moment bound over the path, the `Ḣ¹` norm
/// at the final time, and the size of the continuous extension's increment
/// over half a step on the last subinterval.
pub fn moment_diagnostics<E: Executor>(
    base: &SchemeConfig,
    taus: &[f64],
    gamma: f64,
    samples: u32,
    path: &SeedPath,
    exec: &E,
) -> Result<Vec<MomentRow>> {
    check_monotone(taus, "tau")?;
    if samples < 2 {
        return Err(domain!("need at least two samples"));
    }
    let n = base.n();
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let cfg = base.with_steps(steps_for(base.horizon, tau)?)?;
        let m_total = cfg.steps;
        let rows = exec.map_indexed(samples as usize, |i| -> Result<(Vec<f64>, f64, f64)> {
            let sp = path.with_stream(path.stream_id.wrapping_add(i as u32));
            let mut per_m = Vec::with_capacity(m_total + 1);
            let mut before_last = alloc::vec![0.0; n];
            let end = integrate_observed(&cfg, &sp, |m, y| {
                let s = sobolev_norm_slice(y, 2.0 * gamma);
                per_m.push(s * s);
                if m + 1 == m_total {
                    before_last.copy_from_slice(y);
                }
            })?;
            let h1 = sobolev_norm_slice(end.coeffs(), 1.0);
            let y_prev = SpectralVector::from_vec_unchecked(before_last);
            let s = 0.5 * cfg.tau();
            let (head, _) =
                sample_subinterval_pair(&cfg.cov, cfg.tau(), s, n, &sp.with_counter(sp.counter + m_total as u64 - 1))?;
            let ext = continuous_extension(&cfg, &y_prev, s, &head)?;
            let d = ext.sub(&y_prev)?.norm();
            Ok((per_m, h1 * h1, d * d))
        });
        let mut per_m = alloc::vec![MeanAccumulator::new(); m_total + 1];
        let mut h1 = MeanAccumulator::new();
        let mut inc = MeanAccumulator::new();
        for row in rows {
            let (pm, h, d) = row?;
            for (a, v) in per_m.iter_mut().zip(pm) {
                a.push(v);
            }
            h1.push(h);
            inc.push(d);
        }
        let sup = per_m
            .iter()
            .map(|a| a.estimate())
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("at least the initial state");
        out.push(MomentRow {
            tau,
            sup_gamma_norm: root(sup),
            h1_norm: root(h1.estimate()),
            increment_norm: root(inc.estimate()),
        });
    }
    Ok(out)
}
