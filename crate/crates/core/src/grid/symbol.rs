use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stencil::central_difference_coefficients;
use super::GridSpec;
use crate::error::Result;

/// How first derivatives are discretized. Both choices are Fourier
/// multipliers on the torus, so every operator below is diagonal in
/// frequency space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivativeScheme {
    /// Exact differentiation of band-limited fields.
    #[default]
    Spectral,
    /// Local central differences of the given even order (2, 4, 6 or 8).
    CentralDifference { order: usize },
}

/// Per-axis multipliers of a derivative scheme on a grid.
///
/// A first derivative along an axis is multiplication by `i * first[k]`;
/// `-d^2/dx^2` is multiplication by `second[k]`. The Nyquist bin of `first`
/// is zero for both schemes, so derivatives of real fields stay real.
#[derive(Clone, Debug)]
pub struct FrequencySymbol {
    scheme: DerivativeScheme,
    wavenumbers: Vec<i64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl FrequencySymbol {
    pub fn new(grid: &GridSpec, scheme: DerivativeScheme) -> Result<Self> {
        let p = grid.points_per_axis;
        let h = grid.spacing();
        let wavenumbers: Vec<i64> = (0..p).map(|i| grid.wavenumber(i)).collect();
        let nyquist = p / 2;
        let (first, second) = match scheme {
            DerivativeScheme::Spectral => {
                let xi: Vec<f64> = (0..p).map(|i| grid.angular_frequency(i)).collect();
                let first = (0..p)
                    .map(|i| if i == nyquist { 0.0 } else { xi[i] })
                    .collect();
                let second = xi.iter().map(|x| x * x).collect();
                (first, second)
            }
            DerivativeScheme::CentralDifference { order } => {
                let a = central_difference_coefficients(order)?;
                let first: Vec<f64> = (0..p)
                    .map(|i| {
                        if i == nyquist || i == 0 {
                            return 0.0;
                        }
                        let theta = 2.0 * std::f64::consts::PI * wavenumbers[i] as f64 / p as f64;
                        2.0 / h
                            * a.iter()
                                .enumerate()
                                .map(|(j, c)| c * ((j + 1) as f64 * theta).sin())
                                .sum::<f64>()
                    })
                    .collect();
                let second = first.iter().map(|s| s * s).collect();
                (first, second)
            }
        };
        Ok(Self {
            scheme,
            wavenumbers,
            first,
            second,
        })
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Real multiplier `sigma` with `d/dx <-> i sigma` for FFT bin `k`.
    pub fn first(&self, k: usize) -> f64 {
        self.first[k]
    }

    /// Symbol of `-d^2/dx^2` for FFT bin `k`.
    pub fn second(&self, k: usize) -> f64 {
        self.second[k]
    }

    /// Symbol of `d/dz-bar_j`: `(i sigma_{2j} - sigma_{2j+1}) / 2`.
    pub fn dbar(&self, j: usize, idx: &[usize]) -> Complex64 {
        0.5 * Complex64::new(-self.first[idx[2 * j + 1]], self.first[idx[2 * j]])
    }

    /// Symbol of `d/dz_j`: `(i sigma_{2j} + sigma_{2j+1}) / 2`.
    pub fn dz(&self, j: usize, idx: &[usize]) -> Complex64 {
        0.5 * Complex64::new(self.first[idx[2 * j + 1]], self.first[idx[2 * j]])
    }

    /// Symbol of the complex Laplacian `dbar theta + theta dbar`, which is
    /// diagonal and equal to `sum_j |dbar_j|^2`.
    pub fn box_symbol(&self, idx: &[usize]) -> f64 {
        0.25 * idx.iter().map(|&k| self.first[k] * self.first[k]).sum::<f64>()
    }

    /// Symbol of `-Delta`.
    pub fn neg_laplacian(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&k| self.second[k]).sum()
    }

    /// True on bins where every first-derivative multiplier vanishes: the
    /// kernel of d-bar on functions and of the box operator on forms.
    pub fn is_kernel_mode(&self, idx: &[usize]) -> bool {
        idx.iter().all(|&k| self.first[k] == 0.0)
    }
}
