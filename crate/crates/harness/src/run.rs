//! One function per experiment: config in, [`RunOutput`] out.

use serde_json::{json, Value};
use spde_weak::exec::Executor;
use spde_weak::experiments::{
    field_for, moment_diagnostics, weak_rate_spatial_analytic, weak_rate_spatial_mc, weak_rate_time_analytic,
    weak_rate_time_mc, SpatialReference,
};
use spde_weak::kolmogorov::linear_exact_law;
use spde_weak::nemytskij::{aliasing_residual, check_growth_conditions};
use spde_weak::noise::hs_condition_value;
use spde_weak::rate::{fit_rate, RateFit, RatePoint};
use spde_weak::representation::{
    verify_representation, verify_representation_mc, ExactValue, MonteCarloKolmogorov, RepresentationReport, Tolerances,
};
use spde_weak::rng::SeedPath;
use spde_weak::scheme::integrate_endpoint;
use spde_weak::spectral::{eigenvalue, sobolev_norm};
use spde_weak::stats::Estimate;
use spde_weak::FractionalExponent;

use crate::config::{ExperimentConfig, ExperimentKind, RepresentationMethod, SpatialReferenceConfig};
use crate::output::{num, RunOutput, Table};
use crate::HarnessError;

/// Runs `kind` with the given config. A mismatch between `kind` and the
/// config's own `experiment` field is a config error.
pub fn run<E: Executor>(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    seed: u64,
    exec: &E,
) -> Result<RunOutput, HarnessError> {
    if cfg.experiment != kind {
        return Err(HarnessError::Config(format!(
            "config describes a {} experiment, not {}",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    let path = SeedPath::new(seed, 0, 0);
    match kind {
        ExperimentKind::Simulate => simulate(cfg, &path),
        ExperimentKind::WeakRateTime => weak_rate_time(cfg, &path, exec),
        ExperimentKind::WeakRateSpatial => weak_rate_spatial(cfg, &path, exec),
        ExperimentKind::RepresentationCheck => representation(cfg, seed, &path, exec),
        ExperimentKind::MomentDiagnostics => moments(cfg, &path, exec),
        ExperimentKind::AssumptionCheck => assumptions(cfg, &path),
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Check {
    name: &'static str,
    value: f64,
    /// `(lower, upper)`; either may be absent.
    bounds: (Option<f64>, Option<f64>),
}

impl Check {
    fn passed(&self) -> bool {
        self.value.is_finite()
            && self.bounds.0.is_none_or(|lo| self.value >= lo)
            && self.bounds.1.is_none_or(|hi| self.value <= hi)
    }

    fn to_json(&self) -> Value {
        json!({"name": self.name, "value": self.value, "min": self.bounds.0, "max": self.bounds.1, "passed": self.passed()})
    }
}

fn acceptance_json(checks: &[Check], extra_ok: bool) -> (Value, bool) {
    let passed = extra_ok && checks.iter().all(Check::passed);
    (json!({"checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(), "passed": passed}), passed)
}

fn fit_json(fit: &RateFit) -> Value {
    json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_ci": [fit.slope_ci.0, fit.slope_ci.1],
        "r_squared": fit.r_squared,
        "weighted": fit.weighted,
    })
}

fn estimate_json(e: &Estimate) -> Value {
    json!({"mean": e.mean, "stderr": e.stderr, "samples": e.samples})
}

/// CSV, summary and acceptance verdict for a convergence sweep.
fn rate_output(cfg: &ExperimentConfig, method: &str, points: Vec<RatePoint>, h_name: &str) -> RunOutput {
    let mut warnings = Vec::new();
    let fit = match fit_rate(&points) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("no rate fit: {e}"));
            None
        }
    };
    let used: Vec<bool> = match &fit {
        Some(f) => f.used.clone(),
        None => points.iter().map(|p| p.above_noise_floor()).collect(),
    };
    for (p, u) in points.iter().zip(&used) {
        if !u {
            warnings.push(format!(
                "{h_name} = {}: error {} not above the noise floor (stderr {}), excluded from the fit",
                num(p.h),
                num(p.error),
                num(p.stderr)
            ));
        }
    }
    let mut table = Table::new(&["h", "error", "stderr", "samples"]);
    for p in &points {
        table.push(vec![num(p.h), num(p.error), num(p.stderr), p.samples.to_string()]);
    }
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    if let Some(f) = &fit {
        if t.slope_min.is_some() || t.slope_max.is_some() {
            checks.push(Check { name: "slope", value: f.slope, bounds: (t.slope_min, t.slope_max) });
        }
        if let Some(r2) = t.r_squared_min {
            checks.push(Check { name: "r_squared", value: f.r_squared, bounds: (Some(r2), None) });
        }
    }
    let (acceptance, passed) = acceptance_json(&checks, fit.is_some());
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "method": method,
        "h": h_name,
        "points": points.iter().zip(&used).map(|(p, u)| json!({
            "h": p.h, "error": p.error, "stderr": p.stderr, "samples": p.samples, "used_in_fit": u,
        })).collect::<Vec<_>>(),
        "fit": fit.as_ref().map(fit_json),
        "acceptance": acceptance,
        "warnings": warnings,
    });
    RunOutput { csv: Some(table), summary: Some(summary), report: None, passed, warnings }
}

fn weak_rate_time<E: Executor>(cfg: &ExperimentConfig, path: &SeedPath, exec: &E) -> Result<RunOutput, HarnessError> {
    let taus = cfg.tau_sweep.clone().unwrap_or_default();
    let base = cfg.scheme(cfg.n, 1)?;
    let phi = cfg.functional.build(cfg.n)?;
    let (method, points) = if base.nonlinearity.linear_rate().is_some() {
        ("analytic", weak_rate_time_analytic(&base, &phi, &taus)?)
    } else {
        ("monte_carlo_crn", weak_rate_time_mc(&base, &phi, &taus, cfg.mc.refinement, cfg.mc.samples, path, exec)?)
    };
    Ok(rate_output(cfg, method, points, "tau"))
}

fn weak_rate_spatial<E: Executor>(
    cfg: &ExperimentConfig,
    path: &SeedPath,
    exec: &E,
) -> Result<RunOutput, HarnessError> {
    let dims = cfg.n_sweep.clone().unwrap_or_default();
    let n_ref = cfg.n_ref();
    let base = cfg.scheme(n_ref, cfg.fixed_steps()?)?;
    let phi = cfg.functional.build(n_ref)?;
    let reference: SpatialReference = cfg.spatial_reference.unwrap_or(SpatialReferenceConfig::Scheme).into();
    let (method, points) = if base.nonlinearity.linear_rate().is_some() {
        ("analytic", weak_rate_spatial_analytic(&base, &phi, &dims, n_ref, reference)?)
    } else {
        if reference == SpatialReference::Exact {
            return Err(HarnessError::Config("an exact spatial reference needs zero or linear drift".into()));
        }
        ("monte_carlo", weak_rate_spatial_mc(&base, &phi, &dims, n_ref, cfg.mc.samples, path, exec)?)
    };
    let mut out = rate_output(cfg, method, points, "lambda_N");
    if let Some(Value::Object(m)) = &mut out.summary {
        m.insert("N".into(), json!(dims));
        m.insert("N_ref".into(), json!(n_ref));
        m.insert("reference".into(), json!(if reference == SpatialReference::Exact { "exact" } else { "scheme" }));
    }
    Ok(out)
}

fn report_json(r: &RepresentationReport, method: &str, functional: &str) -> Value {
    json!({
        "method": method,
        "functional": functional,
        "lhs": estimate_json(&r.lhs),
        "rhs_drift_term": estimate_json(&r.rhs_drift_term),
        "rhs_trace_term": estimate_json(&r.rhs_trace_term),
        "residual": r.residual,
        "residual_stderr": r.residual_stderr,
        "quadrature_error": r.quadrature_error,
        "quadrature_nodes": r.quadrature_nodes,
        "mc_samples": r.mc_samples,
        "tolerance": r.tolerance,
        "passed": r.passed,
    })
}

fn representation<E: Executor>(
    cfg: &ExperimentConfig,
    seed: u64,
    path: &SeedPath,
    exec: &E,
) -> Result<RunOutput, HarnessError> {
    let scheme = cfg.scheme(cfg.n, cfg.fixed_steps()?)?;
    let phi = cfg.functional.build(cfg.n)?;
    let defaults = Tolerances::default();
    let tol = Tolerances {
        absolute: cfg.tolerances.absolute.unwrap_or(defaults.absolute),
        stderr_multiple: cfg.tolerances.stderr_multiple.unwrap_or(defaults.stderr_multiple),
    };
    let linear = scheme.nonlinearity.linear_rate();
    let method = cfg.method.unwrap_or(if linear.is_some() {
        RepresentationMethod::Analytic
    } else {
        RepresentationMethod::MonteCarlo
    });
    let mut warnings = Vec::new();
    if phi.is_diagnostic() {
        warnings.push(format!("{} functional lies outside the bounded-derivative class; diagnostic only", phi.kind()));
    }
    let report = match (method, linear) {
        (RepresentationMethod::Analytic, Some(_)) => {
            let field = field_for(&scheme, &phi)?;
            verify_representation(&scheme, &field, cfg.quadrature_nodes.unwrap_or(32), tol)?
        }
        (RepresentationMethod::Analytic, None) => {
            return Err(HarnessError::Config("analytic representation check needs zero or linear drift".into()))
        }
        (RepresentationMethod::MonteCarlo, Some(a)) => {
            let field = field_for(&scheme, &phi)?;
            let exact = linear_exact_law(a, &scheme.cov, scheme.horizon, &scheme.x0)?.expect(&field.functional)?;
            let nodes = cfg.quadrature_nodes.unwrap_or(spde_weak::representation::DEFAULT_NODES);
            verify_representation_mc(
                &scheme,
                &field,
                &field.functional,
                ExactValue::Known(exact),
                nodes,
                cfg.mc.samples,
                path,
                exec,
                tol,
            )?
        }
        (RepresentationMethod::MonteCarlo, None) => {
            let fine_dt = scheme.tau() / cfg.mc.refinement as f64;
            let inner = cfg.mc.inner_samples.unwrap_or(200);
            // inner paths live on their own seed so they never share draws with the outer ones
            let model =
                MonteCarloKolmogorov::new(scheme.clone(), phi.clone(), fine_dt, inner, seed ^ 0x9e37_79b9_7f4a_7c15)?;
            let nodes = cfg.quadrature_nodes.unwrap_or(spde_weak::representation::DEFAULT_NODES);
            verify_representation_mc(
                &scheme,
                &model,
                &phi,
                ExactValue::FineScheme { refinement: cfg.mc.refinement },
                nodes,
                cfg.mc.samples,
                path,
                exec,
                tol,
            )?
        }
    };
    let name = match method {
        RepresentationMethod::Analytic => "analytic",
        RepresentationMethod::MonteCarlo => "monte_carlo",
    };
    let mut doc = report_json(&report, name, phi.kind());
    doc["warnings"] = json!(warnings);
    Ok(RunOutput { csv: None, summary: None, report: Some(doc), passed: report.passed, warnings })
}

fn moments<E: Executor>(cfg: &ExperimentConfig, path: &SeedPath, exec: &E) -> Result<RunOutput, HarnessError> {
    let taus = cfg.tau_sweep.clone().unwrap_or_default();
    let beta = cfg.covariance.nominal_beta();
    let gamma = cfg.gamma.unwrap_or((beta / 2.0 - 0.05).max(0.0));
    let base = cfg.scheme(cfg.n, 1)?;
    let rows = moment_diagnostics(&base, &taus, gamma, cfg.mc.samples, path, exec)?;
    let mut table = Table::new(&[
        "tau",
        "sup_gamma_norm",
        "sup_gamma_stderr",
        "h1_norm",
        "h1_stderr",
        "increment_norm",
        "increment_stderr",
        "samples",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.tau),
            num(r.sup_gamma_norm.mean),
            num(r.sup_gamma_norm.stderr),
            num(r.h1_norm.mean),
            num(r.h1_norm.stderr),
            num(r.increment_norm.mean),
            num(r.increment_norm.stderr),
            r.increment_norm.samples.to_string(),
        ]);
    }
    let series = |f: &dyn Fn(&spde_weak::experiments::MomentRow) -> Estimate| -> Vec<RatePoint> {
        rows.iter()
            .map(|r| {
                let e = f(r);
                RatePoint { h: r.tau, error: e.mean, stderr: e.stderr, samples: e.samples }
            })
            .collect()
    };
    let mut warnings = Vec::new();
    let mut fit_of = |name: &str, pts: Vec<RatePoint>| match fit_rate(&pts) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("{name}: no fit ({e})"));
            None
        }
    };
    let inc_fit = fit_of("increment_norm", series(&|r| r.increment_norm));
    let h1_fit = fit_of("h1_norm", series(&|r| r.h1_norm));
    let t = &cfg.tolerances;
    let inc_min = t.increment_slope_min.unwrap_or(beta / 2.0 - 0.05);
    let h1_min = t.h1_slope_min.unwrap_or((beta - 1.0) / 2.0 - 0.05);
    let mut checks = Vec::new();
    if let Some(f) = &inc_fit {
        checks.push(Check { name: "increment_slope", value: f.slope, bounds: (Some(inc_min), None) });
    }
    if let Some(f) = &h1_fit {
        checks.push(Check { name: "h1_slope", value: f.slope, bounds: (Some(h1_min), None) });
    }
    // the γ-moment stays bounded as τ shrinks: its spread over the sweep is O(stderr)
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_gamma_norm.mean).collect();
    let spread =
        sup.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / sup.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "sup_gamma_norm_max_over_min", value: spread, bounds: (None, Some(1.25)) });
    for c in &checks {
        if !c.passed() {
            warnings.push(format!("trend violated: {} = {}", c.name, num(c.value)));
        }
    }
    let (acceptance, passed) = acceptance_json(&checks, inc_fit.is_some() && h1_fit.is_some());
    let report = json!({
        "experiment": cfg.experiment.name(),
        "gamma": gamma,
        "nominal_beta": beta,
        "rows": rows.iter().map(|r| json!({
            "tau": r.tau,
            "sup_gamma_norm": estimate_json(&r.sup_gamma_norm),
            "h1_norm": estimate_json(&r.h1_norm),
            "increment_norm": estimate_json(&r.increment_norm),
        })).collect::<Vec<_>>(),
        "increment_fit": inc_fit.as_ref().map(fit_json),
        "h1_fit": h1_fit.as_ref().map(fit_json),
        "acceptance": acceptance,
        "warnings": warnings,
    });
    Ok(RunOutput { csv: Some(table), summary: None, report: Some(report), passed, warnings })
}

fn assumptions(cfg: &ExperimentConfig, path: &SeedPath) -> Result<RunOutput, HarnessError> {
    let scheme = cfg.scheme(cfg.n, 1)?;
    let spec = &scheme.nonlinearity;
    let bound = cfg.tolerances.assumption_bound.unwrap_or(4.0 * spec.lipschitz_l.max(1.0));
    let samples = cfg.mc.samples.min(10_000) as usize;
    let ratios = check_growth_conditions(spec, cfg.n, scheme.grid(), samples, path, bound)?;
    let claims = spec.verify_claims(10.0, 201);
    let aliasing = aliasing_residual(spec, &scheme.x0, scheme.grid())?;
    let beta = cfg.covariance.probe_beta();
    let hs = hs_condition_value(&scheme.cov, beta, cfg.n.max(1024))?;
    let violations = ratios.violations();
    let checks = [
        Check { name: "pointwise_claims_ratio", value: claims, bounds: (None, Some(1.0 + 1e-12)) },
        Check { name: "max_operator_ratio", value: ratios.max_ratio(), bounds: (None, Some(bound)) },
    ];
    let (acceptance, passed) = acceptance_json(&checks, hs.converges);
    let mut warnings: Vec<String> = violations.iter().map(|v| format!("{v} ratio exceeds {}", num(bound))).collect();
    if !hs.converges {
        warnings.push(format!("Hilbert-Schmidt series diverges at beta = {}", num(beta)));
    }
    let report = json!({
        "experiment": cfg.experiment.name(),
        "nonlinearity": spec.name,
        "lipschitz_l": spec.lipschitz_l,
        "exponents": {"beta": spec.exponents.beta, "eta": spec.exponents.eta, "delta": spec.exponents.delta},
        "ratios": {
            "growth": ratios.growth,
            "first_derivative": ratios.first_derivative,
            "second_derivative": ratios.second_derivative,
            "dual_derivative": ratios.dual_derivative,
            "samples": ratios.samples,
        },
        "aliasing_residual_x0": aliasing,
        "hs_condition": {"beta": beta, "partial_sum": hs.partial_sum, "tail_bound": hs.tail_bound, "converges": hs.converges},
        "acceptance": acceptance,
        "warnings": warnings,
    });
    Ok(RunOutput { csv: None, summary: None, report: Some(report), passed, warnings })
}

fn simulate(cfg: &ExperimentConfig, path: &SeedPath) -> Result<RunOutput, HarnessError> {
    let scheme = cfg.scheme(cfg.n, cfg.fixed_steps()?)?;
    let end = integrate_endpoint(&scheme, path)?;
    let mut table = Table::new(&["k", "lambda", "x0", "y_T"]);
    for k in 1..=cfg.n {
        table.push(vec![k.to_string(), num(eigenvalue(k)?), num(scheme.x0.mode(k)), num(end.mode(k))]);
    }
    let phi = cfg.functional.build(cfg.n)?;
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "n": cfg.n,
        "steps": scheme.steps,
        "tau": scheme.tau(),
        "l2_norm": end.norm(),
        "h1_norm": sobolev_norm(&end, FractionalExponent::new(1.0)?),
        "functional": phi.kind(),
        "functional_value": phi.eval(end.coeffs()),
    });
    Ok(RunOutput { csv: Some(table), summary: Some(summary), report: None, passed: true, warnings: vec![] })
}
