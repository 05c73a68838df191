use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

/// Separable multi-dimensional FFT over all `2n` axes of a grid.
///
/// The forward transform is unnormalized; the inverse divides by the total
/// sample count, so `inverse(forward(x)) == x` up to roundoff.
pub struct NdFft {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let p = grid.points_per_axis;
        Self {
            grid,
            forward: planner.plan_fft_forward(p),
            inverse: planner.plan_fft_inverse(p),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, self.forward.as_ref());
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, self.inverse.as_ref());
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.grid.len(), "buffer does not match grid");
        let p = self.grid.points_per_axis;
        let n = data.len();
        // Lines per task: enough work to amortize scratch allocation.
        let batch = (super::CHUNK / p).max(1) * p;
        let mut tmp = vec![Complex64::default(); n];
        for axis in 0..self.grid.real_dim() {
            let s = self.grid.stride(axis);
            if s == 1 {
                data.par_chunks_mut(batch).for_each(|c| fft.process(c));
                continue;
            }
            // tmp[(outer, col, k)] = data[(outer, k, col)]
            {
                let src: &[Complex64] = data;
                tmp.par_chunks_mut(p).enumerate().for_each(|(row, line)| {
                    let outer = row / s;
                    let col = row % s;
                    let base = outer * p * s + col;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = src[base + k * s];
                    }
                });
            }
            tmp.par_chunks_mut(batch).for_each(|c| fft.process(c));
            {
                let src: &[Complex64] = &tmp;
                data.par_chunks_mut(s).enumerate().for_each(|(row, line)| {
                    let outer = row / p;
                    let k = row % p;
                    let base = outer * s * p + k;
                    for (col, v) in line.iter_mut().enumerate() {
                        *v = src[base + col * p];
                    }
                });
            }
        }
    }
}
