//! FFT-backed DST-I for large collocation grids.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use spde_weak::transform::{DirectSineTransform, SineTransform};

/// Grids smaller than this use the table-driven transform, which is faster
/// there and exact to the last bit on tiny problems.
pub const FFT_THRESHOLD: usize = 64;

/// DST-I of length `m` via a complex FFT of the odd extension of length
/// `2(m+1)`: with `x_{2(m+1)-s} = -x_s`, the FFT gives
/// `X_r = -2i Σ_s x_s sin(π r s/(m+1))`, so the transform is `-Im(X_r)/2`.
pub struct FftSineTransform {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl FftSineTransform {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        Self { m, fft }
    }
}

impl fmt::Debug for FftSineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftSineTransform").field("m", &self.m).finish()
    }
}

impl SineTransform for FftSineTransform {
    fn len(&self) -> usize {
        self.m
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        debug_assert!(input.len() <= self.m && output.len() <= self.m);
        let period = 2 * (self.m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); period];
        for (s, x) in input.iter().enumerate() {
            buf[s + 1].re = *x;
            buf[period - s - 1].re = -*x;
        }
        self.fft.process(&mut buf);
        for (r, out) in output.iter_mut().enumerate() {
            *out = -0.5 * buf[r + 1].im;
        }
    }
}

/// Transform factory for `SchemeConfig::with_factory`.
pub fn auto_transform(m: usize) -> Arc<dyn SineTransform> {
    if m < FFT_THRESHOLD {
        Arc::new(DirectSineTransform::new(m))
    } else {
        Arc::new(FftSineTransform::new(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_transform() {
        for m in [1, 2, 7, 64, 129, 513] {
            let direct = DirectSineTransform::new(m);
            let fast = FftSineTransform::new(m);
            let input: Vec<f64> = (0..m).map(|i| ((i * 37 % 11) as f64 - 5.0) / (i + 1) as f64).collect();
            for (len_in, len_out) in [(m, m), (m / 2 + 1, m), (m, m / 2 + 1)] {
                let mut a = vec![0.0; len_out];
                let mut b = vec![0.0; len_out];
                direct.apply(&input[..len_in], &mut a);
                fast.apply(&input[..len_in], &mut b);
                let scale = a.iter().fold(1.0f64, |s, v| s.max(v.abs()));
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-12 * scale, "m={m}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn threshold_picks_backend() {
        assert!(format!("{:?}", auto_transform(8)).contains("Direct"));
        assert!(format!("{:?}", auto_transform(1025)).contains("Fft"));
    }
}
