//! JSON experiment configs and their translation into core types.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spde_weak::experiments::SpatialReference;
use spde_weak::kolmogorov::TestFunctional;
use spde_weak::nemytskij::NemytskijSpec;
use spde_weak::noise::CovarianceSpec;
use spde_weak::scheme::SchemeConfig;
use spde_weak::SpectralVector;

use crate::fft::auto_transform;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    WeakRateTime,
    WeakRateSpatial,
    RepresentationCheck,
    MomentDiagnostics,
    AssumptionCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::WeakRateTime => "weak_rate_time",
            Self::WeakRateSpatial => "weak_rate_spatial",
            Self::RepresentationCheck => "representation_check",
            Self::MomentDiagnostics => "moment_diagnostics",
            Self::AssumptionCheck => "assumption_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceConfig {
    White,
    PowerDecay { r: f64 },
    Custom { q: Vec<f64> },
}

impl CovarianceConfig {
    pub fn build(&self) -> Result<CovarianceSpec, HarnessError> {
        Ok(match self {
            Self::White => CovarianceSpec::White,
            Self::PowerDecay { r } => CovarianceSpec::power_decay(*r)?,
            Self::Custom { q } => CovarianceSpec::custom(q.clone())?,
        })
    }

    /// Largest `β ≤ 1` for which the Hilbert-Schmidt condition holds, up to
    /// the open endpoint: `Σ k^{2(β-1)} q_k < ∞` with `q_k = k^{-r}` needs
    /// `β < (1 + r)/2`. Custom spectra are finite, hence `β = 1`.
    pub fn nominal_beta(&self) -> f64 {
        match self {
            Self::White => 0.5,
            Self::PowerDecay { r } => ((1.0 + r) / 2.0).min(1.0),
            Self::Custom { .. } => 1.0,
        }
    }

    /// An admissible `β` at which to evaluate the Hilbert-Schmidt series:
    /// the nominal value when it is attained, else just inside it.
    pub fn probe_beta(&self) -> f64 {
        match self {
            Self::PowerDecay { r } if *r > 1.0 => 1.0,
            Self::Custom { .. } => 1.0,
            _ => self.nominal_beta() - 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub name: String,
    #[serde(default = "one")]
    pub scale: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { name: "zero".into(), scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// `cos⟨x, g⟩`: `g_k = g_all` (default 0), overridden by `g_modes` entries `[k, g_k]`.
    Cosine {
        #[serde(default)]
        g_modes: Vec<(usize, f64)>,
        #[serde(default)]
        g_all: Option<f64>,
    },
    /// `⟨x, g⟩`, with `g` as for the cosine functional.
    Linear {
        #[serde(default)]
        g_modes: Vec<(usize, f64)>,
        #[serde(default)]
        g_all: Option<f64>,
    },
    QuadraticDiag {
        weights: Vec<f64>,
    },
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self::Cosine { g_modes: vec![(1, 1.0), (2, 0.5)], g_all: None }
    }
}

impl FunctionalConfig {
    pub fn build(&self, n: usize) -> Result<TestFunctional, HarnessError> {
        let g = |m: &[(usize, f64)], all: Option<f64>| -> Result<SpectralVector, HarnessError> {
            let mut c = vec![all.unwrap_or(0.0); n];
            for &(k, v) in m {
                if k == 0 {
                    return Err(HarnessError::Config("functional modes start at 1".into()));
                }
                if k <= n {
                    c[k - 1] = v;
                }
            }
            Ok(SpectralVector::new(c)?)
        };
        Ok(match self {
            Self::Cosine { g_modes, g_all } => TestFunctional::Cosine(g(g_modes, *g_all)?),
            Self::Linear { g_modes, g_all } => TestFunctional::Linear(g(g_modes, *g_all)?),
            Self::QuadraticDiag { weights } => TestFunctional::QuadraticDiag(weights.clone()).resized(n)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `x_k = k^{-p}`
    PowerDecay {
        p: f64,
    },
    Modes {
        modes: Vec<(usize, f64)>,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self::PowerDecay { p: 2.5 }
    }
}

impl InitialConfig {
    pub fn build(&self, n: usize) -> Result<SpectralVector, HarnessError> {
        Ok(match self {
            Self::PowerDecay { p } => SpectralVector::power_decay(n, *p)?,
            Self::Modes { modes } => {
                let kept: Vec<(usize, f64)> = modes.iter().copied().filter(|(k, _)| *k <= n).collect();
                SpectralVector::from_modes(n, &kept)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: u32,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    /// Used when `--seed` is not given (default 0).
    #[serde(default)]
    pub seed: Option<u64>,
    /// Inner paths per evaluation of a Monte Carlo Kolmogorov solution.
    #[serde(default)]
    pub inner_samples: Option<u32>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: default_samples(), refinement: default_refinement(), seed: None, inner_samples: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationMethod {
    /// Closed-form laws and Gauss-Legendre quadrature; zero or linear drift.
    Analytic,
    MonteCarlo,
}

/// Acceptance thresholds; anything left out is reported but not enforced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    pub r_squared_min: Option<f64>,
    /// Representation check: absolute part of the residual tolerance.
    pub absolute: Option<f64>,
    /// Representation check: allowed multiples of the residual's stderr.
    pub stderr_multiple: Option<f64>,
    /// Moment diagnostics: minimum increment-norm slope (default `β/2 - 0.05`).
    pub increment_slope_min: Option<f64>,
    /// Moment diagnostics: minimum `Ḣ¹`-norm slope (default `(β-1)/2 - 0.05`).
    pub h1_slope_min: Option<f64>,
    /// Assumption check: largest allowed empirical ratio.
    pub assumption_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialReferenceConfig {
    Scheme,
    Exact,
}

impl From<SpatialReferenceConfig> for SpatialReference {
    fn from(r: SpatialReferenceConfig) -> Self {
        match r {
            SpatialReferenceConfig::Scheme => SpatialReference::Scheme,
            SpatialReferenceConfig::Exact => SpatialReference::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Truncation dimension (spatial runs: ignored in favour of `N_ref`).
    pub n: usize,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    /// Fixed step for runs that do not sweep `τ`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub tau_sweep: Option<Vec<f64>>,
    #[serde(rename = "N_sweep", default)]
    pub n_sweep: Option<Vec<usize>>,
    #[serde(rename = "N_ref", default)]
    pub n_ref: Option<usize>,
    #[serde(default)]
    pub spatial_reference: Option<SpatialReferenceConfig>,
    pub covariance: CovarianceConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub x0: InitialConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    /// Gauss-Legendre nodes per step for the representation check.
    #[serde(default)]
    pub quadrature_nodes: Option<usize>,
    /// Representation check: default analytic for zero or linear drift.
    #[serde(default)]
    pub method: Option<RepresentationMethod>,
    /// Exponent `γ` of the moment diagnostic `‖(-A)^γ Y_m‖`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> u32 {
    20_000
}

fn default_refinement() -> usize {
    64
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("T must be finite and > 0, got {}", self.horizon));
        }
        if self.mc.samples == 0 {
            return bad("mc.samples must be >= 1".into());
        }
        if self.mc.refinement == 0 {
            return bad("mc.refinement must be >= 1".into());
        }
        let needs_taus = matches!(self.experiment, ExperimentKind::WeakRateTime | ExperimentKind::MomentDiagnostics);
        if needs_taus && self.tau_sweep.as_ref().is_none_or(|s| s.is_empty()) {
            return bad(format!("{} needs a nonempty tau_sweep", self.experiment.name()));
        }
        if self.experiment == ExperimentKind::WeakRateSpatial && self.n_sweep.as_ref().is_none_or(|s| s.is_empty()) {
            return bad("weak_rate_spatial needs a nonempty N_sweep".into());
        }
        if let Some(s) = &self.tau_sweep {
            if !strictly_monotone(s) || s.iter().any(|t| !(*t > 0.0)) {
                return bad("tau_sweep must be positive and strictly monotone".into());
            }
        }
        if let Some(s) = &self.n_sweep {
            let f: Vec<f64> = s.iter().map(|n| *n as f64).collect();
            if !strictly_monotone(&f) {
                return bad("N_sweep must be strictly monotone".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (defaults filled in) JSON form.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn nonlinearity(&self) -> Result<NemytskijSpec, HarnessError> {
        Ok(NemytskijSpec::from_name(&self.nonlinearity.name, self.nonlinearity.scale)?)
    }

    /// The base discretization at dimension `n` with `steps` steps.
    pub fn scheme(&self, n: usize, steps: usize) -> Result<SchemeConfig, HarnessError> {
        Ok(SchemeConfig::with_factory(
            self.x0.build(n)?,
            self.horizon,
            steps,
            self.covariance.build()?,
            self.nonlinearity()?,
            auto_transform,
        )?)
    }

    /// Steps for the fixed `τ` (default `T/64`).
    pub fn fixed_steps(&self) -> Result<usize, HarnessError> {
        match self.tau {
            Some(tau) => Ok(spde_weak::experiments::steps_for(self.horizon, tau)?),
            None => Ok(64),
        }
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref.unwrap_or_else(|| 4 * self.n_sweep.as_ref().and_then(|s| s.iter().max().copied()).unwrap_or(self.n))
    }
}

fn strictly_monotone(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0]) || xs.windows(2).all(|w| w[1] < w[0])
}
