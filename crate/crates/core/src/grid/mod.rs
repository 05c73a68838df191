//! Uniform periodic grids over a truncated `R^{2n} = C^n`, complex fields and
//! (0,q)-forms on them, and the d-bar / adjoint / Laplacian operators realized
//! as Fourier multipliers.
//!
//! Coordinates follow `z_j = x_{2j-1} + i x_{2j}`; with 0-based axes, complex
//! coordinate `j` is built from axes `2j` (real part) and `2j + 1` (imaginary
//! part). Samples are stored row-major with the last axis varying fastest.

mod dump;
mod fft;
mod field;
mod ops;
mod stencil;
mod symbol;

pub use dump::{read_field, write_field, write_form, FieldSidecar};
pub use fft::NdFft;
pub use field::{multi_indices, FormField, ScalarField};
pub use ops::Operators;
pub use stencil::{central_difference_coefficients, CentralStencil};
pub use symbol::{DerivativeScheme, FrequencySymbol};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of samples handled per parallel task. Fixed so that chunked
/// reductions sum in the same order for every thread count.
pub(crate) const CHUNK: usize = 4096;

/// Uniform periodic grid on `[-L, L)^{2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec")]
pub struct GridSpec {
    pub complex_dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
}

#[derive(Deserialize)]
struct RawGridSpec {
    complex_dim: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        GridSpec::new(raw.complex_dim, raw.points_per_axis, raw.half_width)
    }
}

impl GridSpec {
    pub fn new(complex_dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if complex_dim == 0 {
            return Err(Error::InvalidGrid("complex_dim must be at least 1".into()));
        }
        if points_per_axis < 8 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be even and >= 8, got {points_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        let total = (points_per_axis as u128).checked_pow(2 * complex_dim as u32);
        match total {
            Some(t) if t <= (1u128 << 31) => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "{points_per_axis}^{} samples is too large",
                    2 * complex_dim
                )))
            }
        }
        Ok(Self {
            complex_dim,
            points_per_axis,
            half_width,
        })
    }

    /// Same geometry at a different resolution.
    pub fn with_resolution(&self, points_per_axis: usize) -> Result<Self> {
        Self::new(self.complex_dim, points_per_axis, self.half_width)
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.real_dim() as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.real_dim() as i32)
    }

    /// Coordinate of node `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// Nearest node index for a coordinate, or `None` if it is not within
    /// `tol * h` of a node.
    pub fn node_index(&self, x: f64, tol: f64) -> Option<usize> {
        let h = self.spacing();
        let t = (x + self.half_width) / h;
        let i = t.round();
        if (t - i).abs() <= tol && i >= 0.0 && (i as usize) < self.points_per_axis {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis
            .pow((self.real_dim() - 1 - axis) as u32)
    }

    /// Signed integer wavenumber of FFT bin `i`, in `{-P/2, ..., P/2 - 1}`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let p = self.points_per_axis as i64;
        let i = i as i64;
        if i < p / 2 {
            i
        } else {
            i - p
        }
    }

    /// Angular frequency `2 pi k / (2L)` of FFT bin `i`.
    pub fn angular_frequency(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(i) as f64 / self.half_width
    }

    pub fn axis_indices(&self, flat: usize, out: &mut [usize]) {
        let p = self.points_per_axis;
        let mut rest = flat;
        for a in (0..self.real_dim()).rev() {
            out[a] = rest % p;
            rest /= p;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let p = self.points_per_axis;
        let mut rest = flat;
        for a in (0..self.real_dim()).rev() {
            out[a] = self.coord(rest % p);
            rest /= p;
        }
    }

    /// Evaluates `f(flat, axis_indices)` for every node, in parallel, keeping
    /// output order.
    pub fn map_indices<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(usize, &[usize]) -> T + Sync,
    {
        let d = self.real_dim();
        let p = self.points_per_axis;
        let mut out = vec![T::default(); self.len()];
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let start = c * CHUNK;
                let mut idx = vec![0usize; d];
                self.axis_indices(start, &mut idx);
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(start + k, &idx);
                    // odometer increment, last axis fastest
                    for a in (0..d).rev() {
                        idx[a] += 1;
                        if idx[a] < p {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
            });
        out
    }

    /// Evaluates `f(point)` at every node.
    pub fn map_points<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(&[f64]) -> T + Sync,
    {
        let d = self.real_dim();
        self.map_indices(|_, idx| {
            let mut x = [0.0f64; 16];
            for a in 0..d {
                x[a] = self.coord(idx[a]);
            }
            f(&x[..d])
        })
    }

    /// Whether a point lies in the inner half-box `[-L/2, L/2]^{2n}`.
    pub fn in_inner_half(&self, x: &[f64]) -> bool {
        x.iter().all(|c| c.abs() <= 0.5 * self.half_width)
    }
}

/// Sum of `f` over a slice, chunked so the result does not depend on the
/// thread count.
pub(crate) fn chunked_sum<T: Sync>(data: &[T], f: impl Fn(usize, &T) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = data
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            chunk
                .iter()
                .enumerate()
                .map(|(k, v)| f(base + k, v))
                .sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}
