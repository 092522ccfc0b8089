//! Gauss-Legendre quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{domain, Result};
use crate::math;

/// Nodes and weights of the `q`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_q` by Newton iteration from the Chebyshev-like initial
    /// guesses `cos(π(i - 1/4)/(q + 1/2))`.
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(domain!("quadrature needs at least one node"));
        }
        let mut nodes = alloc::vec![0.0; q];
        let mut weights = alloc::vec![0.0; q];
        let qf = q as f64;
        for i in 0..q.div_ceil(2) {
            let mut x = math::cos(PI * (i as f64 + 0.75) / (qf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if math::abs(dx) <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre value with `q` nodes per subinterval, plus the
/// change relative to the same rule at `q/2` nodes as an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// Integrates `f` over each `[t_m, t_{m+1}]` of `breaks` with `q` nodes.
pub fn composite(breaks: &[f64], q: usize, f: impl Fn(usize, f64) -> f64) -> Result<QuadratureValue> {
    if breaks.len() < 2 {
        return Err(domain!("need at least one subinterval"));
    }
    let fine = GaussLegendre::new(q)?;
    let coarse = GaussLegendre::new((q / 2).max(1))?;
    let mut hi = crate::stats::KahanSum::new();
    let mut lo = crate::stats::KahanSum::new();
    for (m, w) in breaks.windows(2).enumerate() {
        for (x, wt) in fine.on_interval(w[0], w[1]) {
            hi.add(wt * f(m, x));
        }
        if q > 1 {
            for (x, wt) in coarse.on_interval(w[0], w[1]) {
                lo.add(wt * f(m, x));
            }
        }
    }
    let value = hi.value();
    let err = if q > 1 { math::abs(value - lo.value()) } else { f64::INFINITY };
    Ok(QuadratureValue { value, error_estimate: err.max(4.0 * f64::EPSILON * math::abs(value)) })
}
