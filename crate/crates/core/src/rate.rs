//! Log-log least-squares fits of convergence orders.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// One measured error at discretization parameter `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub h: f64,
    pub error: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl RatePoint {
    pub fn exact(h: f64, error: f64) -> Self {
        Self { h, error, stderr: 0.0, samples: 0 }
    }

    /// Points within four standard errors of zero are indistinguishable from
    /// Monte Carlo noise and never enter a fit.
    pub fn above_noise_floor(&self) -> bool {
        self.error.is_finite() && self.error > 0.0 && self.error >= 4.0 * self.stderr
    }
}

/// Fitted `log error = intercept + slope · log h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    /// Which entries of `points` entered the fit.
    pub used: Vec<bool>,
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval for the slope.
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    /// True when the fit was weighted by `(error / stderr)²`.
    pub weighted: bool,
}

impl RateFit {
    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }

    pub fn excluded(&self) -> usize {
        self.used.iter().filter(|u| !**u).count()
    }
}

/// Two-sided 95% Student-t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
    2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(df: usize) -> f64 {
    T975.get(df.wrapping_sub(1)).copied().unwrap_or(1.960)
}

/// Weighted least squares on `(ln h, ln error)`. Points must clear the noise
/// floor ([`RatePoint::above_noise_floor`]). When every usable point has a
/// positive standard error the weights are `(error / stderr)²`, the inverse
/// variance of `ln error` to first order; otherwise the fit is unweighted.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let used: Vec<bool> = points.iter().map(|p| p.h > 0.0 && p.h.is_finite() && p.above_noise_floor()).collect();
    let pts: Vec<&RatePoint> = points.iter().zip(&used).filter(|(_, u)| **u).map(|(p, _)| p).collect();
    if pts.len() < 3 {
        return Err(Error::Fit(alloc::format!(
            "need at least 3 points above the noise floor, have {} of {}",
            pts.len(),
            points.len()
        )));
    }
    let weighted = pts.iter().all(|p| p.stderr > 0.0);
    let w: Vec<f64> = pts
        .iter()
        .map(|p| {
            if weighted {
                let r = p.error / p.stderr;
                r * r
            } else {
                1.0
            }
        })
        .collect();
    let x: Vec<f64> = pts.iter().map(|p| math::ln(p.h)).collect();
    let y: Vec<f64> = pts.iter().map(|p| math::ln(p.error)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..pts.len() {
        let dx = x[i] - xm;
        let dy = y[i] - ym;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Fit("all usable points share the same h".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = (0..pts.len())
        .map(|i| {
            let r = y[i] - intercept - slope * x[i];
            w[i] * r * r
        })
        .sum();
    let df = pts.len() - 2;
    let se = if df > 0 { math::sqrt(ss_res / df as f64 / sxx) } else { 0.0 };
    let half = t_quantile(df) * se;
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        points: points.to_vec(),
        used,
        slope,
        intercept,
        slope_ci: (slope - half, slope + half),
        r_squared,
        weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedPath;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<RatePoint> = (4..=10)
            .map(|j| {
                let h = 2f64.powi(-j);
                RatePoint::exact(h, 3.0 * h)
            })
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        // spatial form: error ∝ λ_N^{-1}
        let pts: Vec<RatePoint> = [8.0f64, 16.0, 32.0, 64.0]
            .iter()
            .map(|n| {
                let l = (n * core::f64::consts::PI).powi(2);
                RatePoint::exact(l, 0.2 / l)
            })
            .collect();
        assert!((fit_rate(&pts).unwrap().slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = [RatePoint::exact(0.1, 0.1), RatePoint::exact(0.05, 0.05)];
        assert!(matches!(fit_rate(&pts), Err(Error::Fit(_))));
        // the noise floor removes a point
        let pts = [
            RatePoint::exact(0.1, 0.1),
            RatePoint::exact(0.05, 0.05),
            RatePoint { h: 0.025, error: 0.01, stderr: 0.005, samples: 10 },
        ];
        assert!(fit_rate(&pts).is_err());
        let pts = [RatePoint::exact(0.1, 0.1), RatePoint::exact(0.05, 0.0), RatePoint::exact(0.025, 0.025)];
        assert!(fit_rate(&pts).is_err());
    }

    #[test]
    fn confidence_interval_is_calibrated() {
        let mut covered = 0;
        for trial in 0..100u32 {
            let pts: Vec<RatePoint> = (0..6)
                .map(|j| {
                    let h = 2f64.powi(-(j + 3));
                    let z = SeedPath::new(99, trial, j as u64).normal(0, 1);
                    let e = 0.5 * h.powf(0.8) * (0.05 * z).exp();
                    RatePoint { h, error: e, stderr: 0.05 * e, samples: 1000 }
                })
                .collect();
            let fit = fit_rate(&pts).unwrap();
            if fit.slope_ci.0 <= 0.8 && 0.8 <= fit.slope_ci.1 {
                covered += 1;
            }
        }
        assert!(covered >= 90, "{covered}");
    }
}
