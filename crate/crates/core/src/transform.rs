//! Collocation grid and discrete sine transforms between spectral
//! coefficients and point values at the interior nodes `ξ_j = j/(m+1)`.
//!
//! Both directions reduce to the DST-I matrix `S_{jk} = sin(π j k/(m+1))`,
//! which satisfies `S² = (m+1)/2 · I`:
//!
//! * synthesis `u_j = √2 Σ_k v_k sin(kπ ξ_j)`, i.e. `u = √2 S v`;
//! * analysis `v_k = √2/(m+1) Σ_j u_j sin(kπ ξ_j)`, i.e. `v = √2/(m+1) S u`.
//!
//! The direct transform here costs `O(n m)`; the harness crate supplies an
//! FFT-backed [`SineTransform`] for large grids.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};
use crate::math;
use crate::spectral::SpectralVector;

/// Unnormalized DST-I of fixed length `m`.
pub trait SineTransform: Send + Sync + core::fmt::Debug {
    /// Transform length `m`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `output[r-1] = Σ_{s=1}^{input.len()} input[s-1] sin(π r s/(m+1))` for
    /// `r = 1..=output.len()`. Inputs shorter than `m` are implicitly
    /// zero-padded; both slices are at most `m` long.
    fn apply(&self, input: &[f64], output: &mut [f64]);
}

/// Table-driven `O(len(input) · len(output))` DST-I.
#[derive(Debug, Clone)]
pub struct DirectSineTransform {
    m: usize,
    // sin(π r/(m+1)) for r in 0..2(m+1)
    table: Vec<f64>,
}

impl DirectSineTransform {
    pub fn new(m: usize) -> Self {
        let period = 2 * (m + 1);
        let table = (0..period).map(|r| math::sin(PI * r as f64 / (m + 1) as f64)).collect();
        Self { m, table }
    }
}

impl SineTransform for DirectSineTransform {
    fn len(&self) -> usize {
        self.m
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        debug_assert!(input.len() <= self.m && output.len() <= self.m);
        let period = self.table.len();
        for (r, out) in output.iter_mut().enumerate() {
            let r = r + 1;
            let mut idx = 0usize;
            let mut acc = 0.0;
            for x in input {
                idx += r;
                if idx >= period {
                    idx -= period;
                }
                acc += x * self.table[idx];
            }
            *out = acc;
        }
    }
}

/// Dealiasing factor for default grids: `m = 2n + 1`.
pub const DEALIAS_FACTOR: usize = 2;

/// Interior collocation nodes `ξ_j = j/(m+1)`, `j = 1..=m`, with the transform
/// used to move between coefficient and point-value representations.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    transform: Arc<dyn SineTransform>,
}

impl CollocationGrid {
    pub fn with_transform(transform: Arc<dyn SineTransform>) -> Result<Self> {
        if transform.is_empty() {
            return Err(domain!("grid needs at least one point"));
        }
        Ok(Self { transform })
    }

    /// Grid of `m` points with the direct transform.
    pub fn direct(m: usize) -> Result<Self> {
        Self::with_transform(Arc::new(DirectSineTransform::new(m)))
    }

    /// Default dealiased grid size for truncation dimension `n`.
    pub fn default_size(n: usize) -> usize {
        DEALIAS_FACTOR * n + 1
    }

    pub fn m_points(&self) -> usize {
        self.transform.len()
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / (self.m_points() + 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.m_points()).map(|j| self.node(j))
    }

    /// Synthesis into a caller buffer of length `m`.
    pub(crate) fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        self.transform.apply(coeffs, out);
        for u in out.iter_mut() {
            *u *= SQRT_2;
        }
    }

    /// Analysis of `values` (length `m`) into `out.len()` coefficients.
    pub(crate) fn analyze_into(&self, values: &[f64], out: &mut [f64]) {
        self.transform.apply(values, out);
        let scale = SQRT_2 / (self.m_points() + 1) as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

/// Point values `u(ξ_j) = Σ_k v_k √2 sin(kπξ_j)` at the grid nodes.
pub fn to_physical(v: &SpectralVector, grid: &CollocationGrid) -> Result<Vec<f64>> {
    if grid.m_points() < v.dim() {
        return Err(domain!("grid of {} points cannot resolve {} modes", grid.m_points(), v.dim()));
    }
    let mut out = alloc::vec![0.0; grid.m_points()];
    grid.synthesize_into(v.coeffs(), &mut out);
    Ok(out)
}

/// Discrete sine analysis of point values onto the first `n` modes.
pub fn to_spectral(values: &[f64], grid: &CollocationGrid, n: usize) -> Result<SpectralVector> {
    if values.len() != grid.m_points() {
        return Err(domain!("expected {} point values, got {}", grid.m_points(), values.len()));
    }
    if n == 0 || n > grid.m_points() {
        return Err(domain!("cannot analyze onto {n} modes with a {}-point grid", grid.m_points()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(domain!("non-finite point value"));
    }
    let mut out = alloc::vec![0.0; n];
    grid.analyze_into(values, &mut out);
    Ok(SpectralVector::from_vec_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_evaluation() {
        let grid = CollocationGrid::direct(3).unwrap();
        assert_eq!(grid.node(2), 0.5);
        let e1 = SpectralVector::basis(1, 1).unwrap();
        let u = to_physical(&e1, &grid).unwrap();
        assert!((u[1] - SQRT_2).abs() < 1e-15);
        let z = to_physical(&SpectralVector::zeros(2).unwrap(), &grid).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn analysis_examples() {
        let n = 6;
        let grid = CollocationGrid::direct(CollocationGrid::default_size(n)).unwrap();
        let vals: Vec<f64> = grid.nodes().map(|x| SQRT_2 * (2.0 * PI * x).sin()).collect();
        let v = to_spectral(&vals, &grid, n).unwrap();
        for k in 1..=n {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert!((v.mode(k) - want).abs() < 1e-12);
        }
        let vals: Vec<f64> = grid.nodes().map(|x| (PI * x).sin()).collect();
        let v = to_spectral(&vals, &grid, n).unwrap();
        assert!((v.mode(1) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        let zero = to_spectral(&alloc::vec![0.0; grid.m_points()], &grid, n).unwrap();
        assert_eq!(zero, SpectralVector::zeros(n).unwrap());
    }

    #[test]
    fn size_checks() {
        let grid = CollocationGrid::direct(4).unwrap();
        assert!(to_physical(&SpectralVector::zeros(5).unwrap(), &grid).is_err());
        assert!(to_spectral(&[0.0; 3], &grid, 2).is_err());
        assert!(to_spectral(&[0.0; 4], &grid, 5).is_err());
        assert!(CollocationGrid::direct(0).is_err());
    }

    #[test]
    fn round_trip_band_limited() {
        let n = 9;
        let grid = CollocationGrid::direct(CollocationGrid::default_size(n)).unwrap();
        let v = SpectralVector::from_fn(n, |k| (k as f64 * 0.7).cos() / k as f64).unwrap();
        let back = to_spectral(&to_physical(&v, &grid).unwrap(), &grid, n).unwrap();
        for (a, b) in back.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).abs() <= 1e-12 * v.norm());
        }
    }
}
