//! Closed forms for `μ(t, x) = E[Φ(X^n(t, x))]` and
//! `ν(t, y) = μ(t, E_n(-t) y)` when the drift is `F(x) = a x`.
//!
//! With drift `a x` every mode is an independent Ornstein-Uhlenbeck process
//! with rate `λ_k - a`, so `X^n(t, x)` is Gaussian with mean
//! `e^{c_k t} x_k` (`c_k = -λ_k + a`) and variance
//! `σ_k²(t) = q_k (1 - e^{2 c_k t}) / (-2 c_k)`. For the cosine functional
//! `Φ(x) = cos⟨g, x⟩` this gives, with `h_k = g_k e^{c_k t}` and
//! `D(t) = exp(-½ Σ g_k² σ_k²(t))`,
//!
//! ```text
//! μ = cos⟨h, x⟩ D,   ∂_k μ = -sin⟨h, x⟩ D h_k,   ∂_jk μ = -cos⟨h, x⟩ D h_j h_k.
//! ```

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;
use crate::noise::{ou_variance_factor, CovarianceSpec};
use crate::rng::SeedPath;
use crate::spectral::{apply_inverse_semigroup, dot, lambda, sobolev_norm_slice, SemigroupTime, SpectralVector};

/// Test functional `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctional {
    /// `cos⟨x, g⟩`
    Cosine(SpectralVector),
    /// `⟨x, g⟩`
    Linear(SpectralVector),
    /// `Σ w_k x_k²`. Its first derivative is unbounded, so results obtained
    /// with it are diagnostic only.
    QuadraticDiag(Vec<f64>),
}

impl TestFunctional {
    pub fn dim(&self) -> usize {
        match self {
            Self::Cosine(g) | Self::Linear(g) => g.dim(),
            Self::QuadraticDiag(w) => w.len(),
        }
    }

    /// True for functionals outside the bounded-derivative class.
    pub fn is_diagnostic(&self) -> bool {
        matches!(self, Self::QuadraticDiag(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Cosine(_) => "cosine",
            Self::Linear(_) => "linear",
            Self::QuadraticDiag(_) => "quadratic_diag",
        }
    }

    /// Same functional on `n` modes (truncated or zero-padded).
    pub fn resized(&self, n: usize) -> Result<Self> {
        Ok(match self {
            Self::Cosine(g) => Self::Cosine(crate::spectral::project(g, n)?),
            Self::Linear(g) => Self::Linear(crate::spectral::project(g, n)?),
            Self::QuadraticDiag(w) => {
                let mut v = alloc::vec![0.0; n];
                let keep = n.min(w.len());
                v[..keep].copy_from_slice(&w[..keep]);
                Self::QuadraticDiag(v)
            }
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Cosine(g) => math::cos(dot(g.coeffs(), x)),
            Self::Linear(g) => dot(g.coeffs(), x),
            Self::QuadraticDiag(w) => w.iter().zip(x).map(|(w, x)| w * x * x).sum(),
        }
    }
}

/// A Gaussian law on `H_n` with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: SpectralVector,
    pub var: Vec<f64>,
}

impl GaussianState {
    pub fn new(mean: SpectralVector, var: Vec<f64>) -> Result<Self> {
        mean.check_dim(var.len())?;
        if let Some(v) = var.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(domain!("variances must be finite and >= 0, got {v}"));
        }
        Ok(Self { mean, var })
    }

    pub fn dim(&self) -> usize {
        self.var.len()
    }

    /// `mean_k + sqrt(var_k) z_k` with `z` from `(path, lane)`.
    pub fn sample(&self, path: &SeedPath, lane: u32) -> SpectralVector {
        let mut z = alloc::vec![0.0; self.dim()];
        path.fill_normals(lane, &mut z);
        for ((z, m), v) in z.iter_mut().zip(self.mean.coeffs()).zip(&self.var) {
            *z = m + math::sqrt(*v) * *z;
        }
        SpectralVector::from_vec_unchecked(z)
    }

    /// `exp(-½ Σ h_k² var_k)`, the modulus of the characteristic function at `h`.
    pub fn damping(&self, h: &[f64]) -> f64 {
        math::exp(-0.5 * h.iter().zip(&self.var).map(|(h, v)| h * h * v).sum::<f64>())
    }

    /// `E cos⟨h, X⟩`.
    pub fn expect_cos(&self, h: &[f64]) -> f64 {
        math::cos(dot(h, self.mean.coeffs())) * self.damping(h)
    }

    /// `E sin⟨h, X⟩`.
    pub fn expect_sin(&self, h: &[f64]) -> f64 {
        math::sin(dot(h, self.mean.coeffs())) * self.damping(h)
    }

    /// `E Φ(X)`.
    pub fn expect(&self, phi: &TestFunctional) -> Result<f64> {
        self.mean.check_dim(phi.dim())?;
        Ok(match phi {
            TestFunctional::Cosine(g) => self.expect_cos(g.coeffs()),
            TestFunctional::Linear(g) => dot(g.coeffs(), self.mean.coeffs()),
            TestFunctional::QuadraticDiag(w) => {
                w.iter().zip(self.mean.coeffs()).zip(&self.var).map(|((w, m), v)| w * (m * m + v)).sum()
            }
        })
    }
}

fn check_rate(a: f64) -> Result<()> {
    if !a.is_finite() || a >= lambda(1) {
        return Err(domain!("drift rate a = {a} must be finite and below lambda_1 = {}", lambda(1)));
    }
    Ok(())
}

/// Exact law of `X^n(t, x)` for drift `a x`.
pub fn linear_exact_law(a: f64, cov: &CovarianceSpec, t: f64, x: &SpectralVector) -> Result<GaussianState> {
    check_rate(a)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain!("time must be finite and >= 0, got {t}"));
    }
    let n = x.dim();
    let mut mean = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for k in 1..=n {
        let kappa = lambda(k) - a;
        mean.push(math::exp(-kappa * t) * x.coeffs()[k - 1]);
        var.push(cov.q(k) * ou_variance_factor(kappa, t));
    }
    GaussianState::new(SpectralVector::from_vec_unchecked(mean), var)
}

/// Drift rate, noise, and functional defining `μ^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovField {
    pub a: f64,
    pub cov: CovarianceSpec,
    pub functional: TestFunctional,
}

impl KolmogorovField {
    pub fn new(a: f64, cov: CovarianceSpec, functional: TestFunctional) -> Result<Self> {
        check_rate(a)?;
        if functional.dim() == 0 {
            return Err(domain!("functional must act on at least one mode"));
        }
        Ok(Self { a, cov, functional })
    }

    pub fn n(&self) -> usize {
        self.functional.dim()
    }

    /// `e^{c_k t}`
    fn growth(&self, k: usize, t: f64) -> f64 {
        math::exp((-lambda(k) + self.a) * t)
    }

    /// `h_k = g_k e^{c_k t}` for the cosine and linear kinds.
    pub(crate) fn h(&self, t: f64) -> Vec<f64> {
        match &self.functional {
            TestFunctional::Cosine(g) | TestFunctional::Linear(g) => {
                g.coeffs().iter().enumerate().map(|(i, g)| g * self.growth(i + 1, t)).collect()
            }
            TestFunctional::QuadraticDiag(w) => alloc::vec![0.0; w.len()],
        }
    }

    /// Gradient of `μ` per unit of `h` when `h` is the only dependence.
    fn cosine_factors(&self, t: f64, x: &[f64]) -> (Vec<f64>, f64, f64) {
        let h = self.h(t);
        let g = match &self.functional {
            TestFunctional::Cosine(g) => g.coeffs(),
            _ => unreachable!(),
        };
        let s: f64 = (1..=g.len())
            .map(|k| g[k - 1] * g[k - 1] * self.cov.q(k) * ou_variance_factor(lambda(k) - self.a, t))
            .sum();
        let d = math::exp(-0.5 * s);
        let arg = dot(&h, x);
        (h, arg, d)
    }

    fn check(&self, t: f64, x: &SpectralVector) -> Result<()> {
        x.check_dim(self.n())?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(domain!("time must be finite and >= 0, got {t}"));
        }
        Ok(())
    }
}

/// Law of `X^n(t, x)`.
pub fn propagate_law(field: &KolmogorovField, t: f64, x: &SpectralVector) -> Result<GaussianState> {
    field.check(t, x)?;
    linear_exact_law(field.a, &field.cov, t, x)
}

/// `μ^n(t, x)`.
pub fn mu(field: &KolmogorovField, t: f64, x: &SpectralVector) -> Result<f64> {
    propagate_law(field, t, x)?.expect(&field.functional)
}

/// `Dμ^n(t, x)`.
pub fn grad_mu(field: &KolmogorovField, t: f64, x: &SpectralVector) -> Result<SpectralVector> {
    field.check(t, x)?;
    let out = match &field.functional {
        TestFunctional::Cosine(_) => {
            let (h, arg, d) = field.cosine_factors(t, x.coeffs());
            let s = -math::sin(arg) * d;
            h.iter().map(|h| s * h).collect()
        }
        TestFunctional::Linear(_) => field.h(t),
        TestFunctional::QuadraticDiag(w) => w
            .iter()
            .zip(x.coeffs())
            .enumerate()
            .map(|(i, (w, x))| {
                let e = field.growth(i + 1, t);
                2.0 * w * e * e * x
            })
            .collect(),
    };
    Ok(SpectralVector::from_vec_unchecked(out))
}

/// `D²μ^n(t, x)(w1, w2)`.
pub fn hess_mu_quadratic_form(
    field: &KolmogorovField,
    t: f64,
    x: &SpectralVector,
    w1: &SpectralVector,
    w2: &SpectralVector,
) -> Result<f64> {
    field.check(t, x)?;
    w1.check_dim(field.n())?;
    w2.check_dim(field.n())?;
    Ok(match &field.functional {
        TestFunctional::Cosine(_) => {
            let (h, arg, d) = field.cosine_factors(t, x.coeffs());
            -math::cos(arg) * d * (dot(&h, w1.coeffs()) * dot(&h, w2.coeffs()))
        }
        TestFunctional::Linear(_) => 0.0,
        TestFunctional::QuadraticDiag(w) => (0..field.n())
            .map(|i| {
                let e = field.growth(i + 1, t);
                2.0 * w[i] * e * e * (w1.coeffs()[i] * w2.coeffs()[i])
            })
            .sum(),
    })
}

/// Diagonal `∂_kk μ^n(t, x)`, enough for traces against diagonal operators.
pub fn hess_mu_diagonal(field: &KolmogorovField, t: f64, x: &SpectralVector) -> Result<Vec<f64>> {
    field.check(t, x)?;
    Ok(match &field.functional {
        TestFunctional::Cosine(_) => {
            let (h, arg, d) = field.cosine_factors(t, x.coeffs());
            let c = -math::cos(arg) * d;
            h.iter().map(|h| c * h * h).collect()
        }
        TestFunctional::Linear(_) => alloc::vec![0.0; field.n()],
        TestFunctional::QuadraticDiag(w) => w
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let e = field.growth(i + 1, t);
                2.0 * w * e * e
            })
            .collect(),
    })
}

fn pull_back(t: f64, y: &SpectralVector) -> Result<SpectralVector> {
    apply_inverse_semigroup(y, SemigroupTime::new(t)?)
}

/// `ν^n(t, y) = μ^n(t, E_n(-t) y)`.
pub fn nu(field: &KolmogorovField, t: f64, y: &SpectralVector) -> Result<f64> {
    mu(field, t, &pull_back(t, y)?)
}

/// `Dν^n(t, y) = E_n(-t) Dμ^n(t, E_n(-t) y)`.
pub fn grad_nu(field: &KolmogorovField, t: f64, y: &SpectralVector) -> Result<SpectralVector> {
    let g = grad_mu(field, t, &pull_back(t, y)?)?;
    pull_back(t, &g)
}

/// `D²ν^n(t, y)(w1, w2) = D²μ^n(t, E_n(-t) y)(E_n(-t) w1, E_n(-t) w2)`.
pub fn hess_nu_quadratic_form(
    field: &KolmogorovField,
    t: f64,
    y: &SpectralVector,
    w1: &SpectralVector,
    w2: &SpectralVector,
) -> Result<f64> {
    hess_mu_quadratic_form(field, t, &pull_back(t, y)?, &pull_back(t, w1)?, &pull_back(t, w2)?)
}

/// Five-point central difference of `f` at `t` with step `1e-4 max(1, t)`,
/// shrunk so the stencil stays inside `(0, ∞)`.
fn time_derivative(t: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut h = 1e-4 * t.max(1.0);
    if 2.0 * h >= t {
        h = t / 4.0;
    }
    Ok((f(t - 2.0 * h)? - 8.0 * f(t - h)? + 8.0 * f(t + h)? - f(t + 2.0 * h)?) / (12.0 * h))
}

/// `∂_t μ - ⟨A x + a x, Dμ⟩ - ½ Σ_k q_k ∂_kk μ`.
pub fn kolmogorov_residual(field: &KolmogorovField, t: f64, x: &SpectralVector) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain!("residual needs t > 0"));
    }
    let dt = time_derivative(t, |s| mu(field, s, x))?;
    let g = grad_mu(field, t, x)?;
    let h = hess_mu_diagonal(field, t, x)?;
    let mut drift = 0.0;
    let mut trace = 0.0;
    for k in 1..=field.n() {
        drift += (-lambda(k) + field.a) * x.coeffs()[k - 1] * g.coeffs()[k - 1];
        trace += field.cov.q(k) * h[k - 1];
    }
    Ok(dt - drift - 0.5 * trace)
}

/// `∂_t ν - ⟨E(t) F(E(-t) y), Dν⟩ - ½ Tr[D²ν E(t)B(E(t)B)*]`; with `F = a x`
/// the drift term is `a ⟨y, Dν⟩` and the trace weights are `q_k e^{-2λ_k t}`.
pub fn nu_residual(field: &KolmogorovField, t: f64, y: &SpectralVector) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain!("residual needs t > 0"));
    }
    let dt = time_derivative(t, |s| nu(field, s, y))?;
    let g = grad_nu(field, t, y)?;
    let x = pull_back(t, y)?;
    let hmu = hess_mu_diagonal(field, t, &x)?;
    let mut drift = 0.0;
    let mut trace = 0.0;
    for k in 1..=field.n() {
        drift += field.a * y.coeffs()[k - 1] * g.coeffs()[k - 1];
        // ∂_kk ν = e^{2λt} ∂_kk μ, against the weight q_k e^{-2λt}
        trace += field.cov.q(k) * hmu[k - 1];
    }
    Ok(dt - drift - 0.5 * trace)
}

/// `‖(-A)^γ Dμ(t, x)‖ t^γ`, bounded uniformly in `t` by the smoothing
/// property of the semigroup.
pub fn smoothed_gradient_ratio(field: &KolmogorovField, t: f64, x: &SpectralVector, gamma: f64) -> Result<f64> {
    let g = grad_mu(field, t, x)?;
    Ok(sobolev_norm_slice(g.coeffs(), 2.0 * gamma) * math::powf(t, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedPath;
    use crate::stats::MeanAccumulator;

    fn cosine_field(n: usize, a: f64) -> KolmogorovField {
        let g = SpectralVector::from_modes(n, &[(1, 1.0), (2, 0.5)]).unwrap();
        KolmogorovField::new(a, CovarianceSpec::White, TestFunctional::Cosine(g)).unwrap()
    }

    fn probe(n: usize, seed: u64) -> SpectralVector {
        let mut z = alloc::vec![0.0; n];
        SeedPath::new(seed, 0, 0).fill_normals(0, &mut z);
        SpectralVector::new(z.iter().enumerate().map(|(i, z)| z / (i + 1) as f64).collect()).unwrap()
    }

    #[test]
    fn law_at_zero_and_scalar_value() {
        let f = cosine_field(3, 0.0);
        let x = probe(3, 1);
        let law = propagate_law(&f, 0.0, &x).unwrap();
        assert_eq!(law.mean, x);
        assert!(law.var.iter().all(|v| *v == 0.0));
        assert_eq!(mu(&f, 0.0, &x).unwrap(), f.functional.eval(x.coeffs()));
        let law = propagate_law(&f, 1.0, &SpectralVector::zeros(3).unwrap()).unwrap();
        assert!((law.var[0] - 0.050_660_59).abs() < 1e-8);
    }

    #[test]
    fn semiflow() {
        let f = cosine_field(5, 0.7);
        let x = probe(5, 2);
        let (t, s) = (0.013, 0.021);
        let a = propagate_law(&f, t, &x).unwrap();
        let b = propagate_law(&f, t + s, &x).unwrap();
        let step = propagate_law(&f, s, &a.mean).unwrap();
        for k in 1..=5 {
            let e = (-(lambda(k) - 0.7) * s).exp();
            assert!((step.mean.mode(k) - b.mean.mode(k)).abs() < 1e-12);
            let v = e * e * a.var[k - 1] + step.var[k - 1];
            assert!((v - b.var[k - 1]).abs() < 1e-12 * b.var[k - 1]);
        }
    }

    #[test]
    fn cosine_scalar_example() {
        let g = SpectralVector::basis(1, 1).unwrap();
        let f = KolmogorovField::new(0.0, CovarianceSpec::White, TestFunctional::Cosine(g.clone())).unwrap();
        let v = mu(&f, 1.0, &g).unwrap();
        assert!((v - 0.974_990).abs() < 1e-5, "{v}");
    }

    #[test]
    fn linear_kind() {
        let g = SpectralVector::from_modes(4, &[(1, 1.0), (3, -2.0)]).unwrap();
        let f = KolmogorovField::new(0.5, CovarianceSpec::White, TestFunctional::Linear(g.clone())).unwrap();
        let x = probe(4, 3);
        let t = 0.03;
        let want: f64 = (1..=4).map(|k| g.mode(k) * ((-lambda(k) + 0.5) * t).exp() * x.mode(k)).sum();
        assert!((mu(&f, t, &x).unwrap() - want).abs() < 1e-15);
        let gr = grad_mu(&f, t, &x).unwrap();
        assert_eq!(gr, grad_mu(&f, t, &probe(4, 4)).unwrap());
        assert_eq!(hess_mu_quadratic_form(&f, t, &x, &x, &gr).unwrap(), 0.0);
        assert!(kolmogorov_residual(&f, t, &x).unwrap().abs() < 1e-9);
    }

    fn fd_grad(f: impl Fn(&SpectralVector) -> f64, x: &SpectralVector, h: f64) -> Vec<f64> {
        (1..=x.dim())
            .map(|k| {
                let e = SpectralVector::basis(x.dim(), k).unwrap().scale(h).unwrap();
                (f(&x.add(&e).unwrap()) - f(&x.sub(&e).unwrap())) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_and_hessians_match_differences() {
        for functional in [
            TestFunctional::Cosine(SpectralVector::from_modes(4, &[(1, 1.0), (2, 0.5), (4, 0.3)]).unwrap()),
            TestFunctional::QuadraticDiag(alloc::vec![1.0, 0.5, 0.25, 2.0]),
        ] {
            let f = KolmogorovField::new(0.3, CovarianceSpec::White, functional).unwrap();
            for (i, t) in [0.001, 0.01, 0.05].into_iter().enumerate() {
                let x = probe(4, 10 + i as u64);
                let g = grad_mu(&f, t, &x).unwrap();
                let fd = fd_grad(|y| mu(&f, t, y).unwrap(), &x, 1e-5);
                for (a, b) in g.coeffs().iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-7 * g.norm().max(1e-3), "{a} vs {b}");
                }
                let w1 = probe(4, 20 + i as u64);
                let w2 = probe(4, 30 + i as u64);
                let hq = hess_mu_quadratic_form(&f, t, &x, &w1, &w2).unwrap();
                assert_eq!(hq, hess_mu_quadratic_form(&f, t, &x, &w2, &w1).unwrap());
                let h = 1e-4;
                let gp = grad_mu(&f, t, &x.add(&w2.scale(h).unwrap()).unwrap()).unwrap();
                let gm = grad_mu(&f, t, &x.sub(&w2.scale(h).unwrap()).unwrap()).unwrap();
                let fd = gp.sub(&gm).unwrap().dot(&w1).unwrap() / (2.0 * h);
                assert!((hq - fd).abs() <= 1e-5 * hq.abs().max(1e-3), "{hq} vs {fd}");
                let diag = hess_mu_diagonal(&f, t, &x).unwrap();
                for k in 1..=4 {
                    let e = SpectralVector::basis(4, k).unwrap();
                    assert!((diag[k - 1] - hess_mu_quadratic_form(&f, t, &x, &e, &e).unwrap()).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn nu_chain_rule() {
        let f = cosine_field(4, 0.4);
        let t = 0.02;
        let y = probe(4, 5);
        assert_eq!(nu(&f, 0.0, &y).unwrap(), f.functional.eval(y.coeffs()));
        let g = grad_nu(&f, t, &y).unwrap();
        let fd = fd_grad(|z| nu(&f, t, z).unwrap(), &y, 1e-6);
        for (a, b) in g.coeffs().iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-7 * g.norm(), "{a} vs {b}");
        }
        let big = SpectralVector::zeros(64).unwrap();
        let wide = KolmogorovField::new(0.0, CovarianceSpec::White, TestFunctional::Linear(big.clone())).unwrap();
        assert!(matches!(nu(&wide, 1.0, &big), Err(crate::Error::Range(_))));
    }

    #[test]
    fn residuals_vanish() {
        for a in [0.0, 0.8] {
            let f = cosine_field(4, a);
            for t in [1e-3, 0.05, 0.5, 1.0] {
                let x = probe(4, 7);
                let r = kolmogorov_residual(&f, t, &x).unwrap();
                assert!(r.abs() < 1e-6, "mu residual {r} at t={t}");
                let r = nu_residual(&f, t, &x).unwrap();
                assert!(r.abs() < 1e-6, "nu residual {r} at t={t}");
            }
        }
    }

    #[test]
    fn mu_matches_monte_carlo() {
        let f = cosine_field(3, 0.0);
        let x = SpectralVector::basis(3, 1).unwrap();
        let t = 0.1;
        let law = propagate_law(&f, t, &x).unwrap();
        let acc: MeanAccumulator =
            (0..100_000u32).map(|i| f.functional.eval(law.sample(&SeedPath::new(77, i, 0), 3).coeffs())).collect();
        let e = acc.estimate();
        assert!((e.mean - mu(&f, t, &x).unwrap()).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn gradient_smoothing_is_bounded() {
        let n = 64;
        let g = SpectralVector::from_fn(n, |k| 1.0 / k as f64).unwrap();
        let f = KolmogorovField::new(0.0, CovarianceSpec::White, TestFunctional::Cosine(g)).unwrap();
        let x = probe(n, 9);
        for gamma in [0.25, 0.5, 0.75] {
            let ratios: Vec<f64> =
                [1e-3, 1e-2, 0.1, 1.0].iter().map(|t| smoothed_gradient_ratio(&f, *t, &x, gamma).unwrap()).collect();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(max < 2.0, "{gamma}: {ratios:?}");
        }
    }

    #[test]
    fn rejects_unstable_rate() {
        let g = SpectralVector::basis(1, 1).unwrap();
        assert!(KolmogorovField::new(10.0, CovarianceSpec::White, TestFunctional::Linear(g)).is_err());
    }
}
