use num_complex::Complex64;

use crate::error::{Error, Result};

/// Antisymmetric weights `a_1..a_p` of the order-`2p` central difference
/// `f'(x) ~ (1/h) sum_j a_j (f(x + jh) - f(x - jh))`.
pub fn central_difference_coefficients(order: usize) -> Result<&'static [f64]> {
    const O2: [f64; 1] = [0.5];
    const O4: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
    const O6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    const O8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    match order {
        2 => Ok(&O2),
        4 => Ok(&O4),
        6 => Ok(&O6),
        8 => Ok(&O8),
        _ => Err(Error::Config(format!(
            "central-difference order must be 2, 4, 6 or 8, got {order}"
        ))),
    }
}

/// Pointwise central-difference d-bar, evaluated against a closure rather
/// than grid samples. Matches the `CentralDifference` Fourier multiplier on
/// the torus whenever the sampled function does not wrap around the box.
#[derive(Clone, Debug)]
pub struct CentralStencil {
    order: usize,
    coeffs: &'static [f64],
    h: f64,
}

impl CentralStencil {
    pub fn new(order: usize, h: f64) -> Result<Self> {
        Ok(Self {
            order,
            coeffs: central_difference_coefficients(order)?,
            h,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Stencil half-width in cells.
    pub fn reach(&self) -> usize {
        self.coeffs.len()
    }

    /// Partial derivative along real axis `axis` at `x`.
    pub fn partial_at<F>(&self, g: &F, x: &[f64], axis: usize) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mut y = [0.0f64; 16];
        let d = x.len();
        y[..d].copy_from_slice(x);
        let mut acc = Complex64::default();
        for (j, &a) in self.coeffs.iter().enumerate() {
            let step = (j + 1) as f64 * self.h;
            y[axis] = x[axis] + step;
            let plus = g(&y[..d]);
            y[axis] = x[axis] - step;
            let minus = g(&y[..d]);
            acc += (plus - minus) * a;
        }
        acc / self.h
    }

    /// `d/dz-bar_j` at `x`, with `z_j = x_{2j} + i x_{2j+1}` (0-based).
    pub fn dbar_at<F>(&self, g: &F, x: &[f64], j: usize) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let re = self.partial_at(g, x, 2 * j);
        let im = self.partial_at(g, x, 2 * j + 1);
        0.5 * (re + Complex64::i() * im)
    }
}
