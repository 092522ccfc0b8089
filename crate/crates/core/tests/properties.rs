use proptest::prelude::*;
use spde_weak::noise::{sample_filtered_increment, sample_raw_increment, CovarianceSpec};
use spde_weak::rate::{fit_rate, RatePoint};
use spde_weak::rng::{open_uniform, SeedPath};
use spde_weak::spectral::{apply_inverse_semigroup, apply_semigroup, sobolev_norm};
use spde_weak::transform::{to_physical, to_spectral, CollocationGrid};
use spde_weak::{FractionalExponent, SemigroupTime, SpectralVector};

fn vector(max_n: usize) -> impl Strategy<Value = SpectralVector> {
    prop::collection::vec(-10.0..10.0f64, 1..=max_n).prop_map(|v| SpectralVector::new(v).unwrap())
}

proptest! {
    #[test]
    fn semigroup_composes(v in vector(40), s in 0.0..0.05f64, t in 0.0..0.05f64) {
        let st = |x| SemigroupTime::new(x).unwrap();
        let a = apply_semigroup(&apply_semigroup(&v, st(s)), st(t));
        let b = apply_semigroup(&v, st(s + t));
        // exp(-a)exp(-b) vs exp(-a-b) carries ~eps·(a+b) relative rounding,
        // and deep modes may land in the subnormal range
        for (k, (x, y)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
            let exponent = ((k + 1) as f64 * std::f64::consts::PI).powi(2) * (s + t);
            let floor = 16.0 * f64::MIN_POSITIVE * v.coeffs()[k].abs();
            prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * (1.0 + exponent) * y.abs() + floor);
        }
    }

    #[test]
    fn semigroup_inverse_round_trip(v in vector(8), t in 0.0..0.01f64) {
        let st = SemigroupTime::new(t).unwrap();
        let back = apply_inverse_semigroup(&apply_semigroup(&v, st), st).unwrap();
        prop_assert!(back.sub(&v).unwrap().norm() <= 1e-12 * v.norm().max(1.0));
    }

    #[test]
    fn semigroup_contracts_sobolev_norms(v in vector(30), t in 0.0..1.0f64, g in -1.0..1.0f64) {
        let gamma = FractionalExponent::new(g).unwrap();
        let e = apply_semigroup(&v, SemigroupTime::new(t).unwrap());
        prop_assert!(sobolev_norm(&e, gamma) <= sobolev_norm(&v, gamma) * (1.0 + 1e-14));
    }

    #[test]
    fn transform_pair_exact(v in vector(48)) {
        let grid = CollocationGrid::direct(CollocationGrid::default_size(v.dim())).unwrap();
        let back = to_spectral(&to_physical(&v, &grid).unwrap(), &grid, v.dim()).unwrap();
        prop_assert!(back.sub(&v).unwrap().norm() <= 1e-12 * v.norm().max(1e-300));
    }

    #[test]
    fn fit_recovers_exact_power_law(p in -2.0..2.5f64, c in 1e-3..1e3f64, len in 3usize..9) {
        let pts: Vec<RatePoint> = (0..len).map(|j| {
            let h = 2f64.powi(-(j as i32) - 2);
            RatePoint::exact(h, c * h.powf(p))
        }).collect();
        let fit = fit_rate(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
        prop_assert!(!fit.weighted);
    }

    #[test]
    fn filtering_is_mode_wise_damping(seed in any::<u64>(), stream in any::<u32>(), tau in 1e-4..0.5f64, n in 1usize..32) {
        let cov = CovarianceSpec::power_decay(1.5).unwrap();
        let path = SeedPath::new(seed, stream, 0);
        let raw = sample_raw_increment(&cov, tau, n, &path, 0).unwrap();
        let filtered = sample_filtered_increment(&cov, tau, n, &path).unwrap();
        prop_assert_eq!(raw.filtered().unwrap().values, filtered.values);
    }

    #[test]
    fn uniforms_stay_open(hi in any::<u32>(), lo in any::<u32>()) {
        let u = open_uniform(hi, lo);
        prop_assert!(u > 0.0 && u < 1.0);
    }
}

#[test]
fn normals_have_unit_moments() {
    let mut z = vec![0.0; 200_000];
    SeedPath::new(42, 7, 0).fill_normals(0, &mut z);
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let kurt = z.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
    assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");
    assert!((kurt - 3.0).abs() < 4.0 * (24.0 / n).sqrt(), "kurtosis {kurt}");
}

#[test]
fn normals_pass_a_binned_chi_square() {
    // equiprobable bins at the standard normal deciles
    const EDGES: [f64; 9] = [-1.2816, -0.8416, -0.5244, -0.2533, 0.0, 0.2533, 0.5244, 0.8416, 1.2816];
    let mut z = vec![0.0; 100_000];
    SeedPath::new(1, 0, 3).fill_normals(2, &mut z);
    let mut counts = [0usize; 10];
    for x in &z {
        counts[EDGES.iter().filter(|e| x > e).count()] += 1;
    }
    let expected = z.len() as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 9 degrees of freedom
    assert!(chi2 < 27.88, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn streams_and_lanes_are_uncorrelated() {
    let draw = |p: SeedPath, lane| {
        let mut z = vec![0.0; 50_000];
        p.fill_normals(lane, &mut z);
        z
    };
    let base = SeedPath::new(9, 0, 0);
    let pairs = [
        (draw(base, 0), draw(base.with_stream(1), 0)),
        (draw(base, 0), draw(base, 1)),
        (draw(base, 0), draw(base.with_counter(1), 0)),
    ];
    for (a, b) in pairs {
        let r = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
        assert!(r.abs() < 4.0 / (a.len() as f64).sqrt(), "correlation {r}");
    }
}

#[test]
fn draws_are_reproducible() {
    let p = SeedPath::new(123, 4, 5);
    assert_eq!(p.normal(1, 3), p.normal(1, 3));
    let mut a = vec![0.0; 16];
    p.fill_normals(1, &mut a);
    assert_eq!(a[2], p.normal(1, 3));
}

#[test]
fn increment_variance_matches_ito_isometry() {
    let cov = CovarianceSpec::power_decay(1.0).unwrap();
    let tau = 0.02;
    let samples = 50_000u32;
    let mut sums = [0.0f64; 3];
    for i in 0..samples {
        let f = sample_filtered_increment(&cov, tau, 3, &SeedPath::new(5, i, 0)).unwrap();
        for (k, s) in sums.iter_mut().enumerate() {
            *s += f.values.coeffs()[k].powi(2);
        }
    }
    for (k, s) in sums.iter().enumerate() {
        let mode = k + 1;
        let lambda = (mode as f64 * std::f64::consts::PI).powi(2);
        let expected = cov.q(mode) * tau * (-2.0 * lambda * tau).exp();
        let est = s / samples as f64;
        let se = expected * (2.0 / samples as f64).sqrt();
        assert!((est - expected).abs() < 4.0 * se, "mode {mode}: {est} vs {expected}");
    }
}
