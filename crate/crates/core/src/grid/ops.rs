use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::field::multi_indices;
use super::{chunked_sum, DerivativeScheme, FormField, FrequencySymbol, GridSpec, NdFft, ScalarField};
use crate::error::{Error, Result};

/// The d-bar complex on a grid, with all operators applied as Fourier
/// multipliers of a chosen [`DerivativeScheme`].
///
/// Sign conventions, for sorted multi-indices and 0-based positions:
///
/// * `(dbar w)_K = sum_{k in K} (-1)^{pos(k, K)} dbar_k w_{K \ k}`
/// * `(theta w)_J = -sum_{k not in J} (-1)^{#{j in J : j < k}} d_k w_{J + k}`
///
/// With the form inner product `<a, b> = h^{2n} sum_J sum a_J conj(b_J)` the
/// two are exactly adjoint on the grid.
pub struct Operators {
    grid: GridSpec,
    symbol: FrequencySymbol,
    fft: NdFft,
}

impl Operators {
    pub fn new(grid: GridSpec, scheme: DerivativeScheme) -> Result<Self> {
        Ok(Self {
            grid,
            symbol: FrequencySymbol::new(&grid, scheme)?,
            fft: NdFft::new(grid),
        })
    }

    pub fn spectral(grid: GridSpec) -> Self {
        Self::new(grid, DerivativeScheme::Spectral).expect("spectral symbol always builds")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn symbol(&self) -> &FrequencySymbol {
        &self.symbol
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.symbol.scheme()
    }

    pub fn fft(&self) -> &NdFft {
        &self.fft
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Unnormalized forward transform of a field.
    pub fn forward(&self, w: &ScalarField) -> Result<Vec<Complex64>> {
        self.check(w.grid())?;
        let mut buf = w.samples().to_vec();
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    /// Inverse of [`Operators::forward`].
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> ScalarField {
        self.fft.inverse(&mut spectrum);
        ScalarField::from_raw(self.grid, spectrum)
    }

    /// Pointwise product of a spectrum with `m(idx)`.
    pub fn apply_multiplier<M>(&self, spectrum: &[Complex64], m: M) -> Vec<Complex64>
    where
        M: Fn(&[usize]) -> Complex64 + Sync,
    {
        self.grid.map_indices(|k, idx| spectrum[k] * m(idx))
    }

    fn forward_form(&self, w: &FormField) -> Result<Vec<Vec<Complex64>>> {
        self.check(w.grid())?;
        w.components().iter().map(|c| self.forward(c)).collect()
    }

    fn inverse_form(&self, degree: usize, spectra: Vec<Vec<Complex64>>) -> FormField {
        let comps = spectra.into_iter().map(|s| self.inverse(s)).collect();
        FormField::from_components(self.grid, degree, comps).expect("component count by construction")
    }

    /// `dbar` on spectra of a degree-`q` form, returning degree `q + 1`.
    pub(crate) fn dbar_hat(&self, w: &[Vec<Complex64>], q: usize) -> Vec<Vec<Complex64>> {
        let n = self.grid.complex_dim;
        let in_keys = multi_indices(n, q);
        multi_indices(n, q + 1)
            .into_iter()
            .map(|key| {
                let terms: Vec<(usize, f64, usize)> = key
                    .iter()
                    .enumerate()
                    .map(|(pos, &k)| {
                        let rest: Vec<usize> = key.iter().copied().filter(|&j| j != k).collect();
                        let src = in_keys.iter().position(|c| *c == rest).expect("subset key");
                        let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                        (k, sign, src)
                    })
                    .collect();
                self.grid.map_indices(|flat, idx| {
                    terms
                        .iter()
                        .map(|&(k, sign, src)| sign * self.symbol.dbar(k, idx) * w[src][flat])
                        .sum()
                })
            })
            .collect()
    }

    /// `theta` on spectra of a degree-`q` form, returning degree `q - 1`.
    pub(crate) fn adjoint_hat(&self, w: &[Vec<Complex64>], q: usize) -> Vec<Vec<Complex64>> {
        let n = self.grid.complex_dim;
        let in_keys = multi_indices(n, q);
        multi_indices(n, q - 1)
            .into_iter()
            .map(|key| {
                let terms: Vec<(usize, f64, usize)> = (0..n)
                    .filter(|k| !key.contains(k))
                    .map(|k| {
                        let before = key.iter().filter(|&&j| j < k).count();
                        let mut sup = key.clone();
                        sup.push(k);
                        sup.sort_unstable();
                        let src = in_keys.iter().position(|c| *c == sup).expect("superset key");
                        let sign = if before % 2 == 0 { -1.0 } else { 1.0 };
                        (k, sign, src)
                    })
                    .collect();
                self.grid.map_indices(|flat, idx| {
                    terms
                        .iter()
                        .map(|&(k, sign, src)| sign * self.symbol.dz(k, idx) * w[src][flat])
                        .sum()
                })
            })
            .collect()
    }

    /// `dbar` from degree `q` to `q + 1`.
    pub fn dbar(&self, w: &FormField) -> Result<FormField> {
        let q = w.degree();
        if q >= self.grid.complex_dim {
            return Err(Error::Degree {
                degree: q,
                n: self.grid.complex_dim,
                op: "dbar",
            });
        }
        let hat = self.forward_form(w)?;
        Ok(self.inverse_form(q + 1, self.dbar_hat(&hat, q)))
    }

    /// `dbar` of a function as a (0,1)-form.
    pub fn dbar_function(&self, w: &ScalarField) -> Result<FormField> {
        self.dbar(&FormField::from_scalar(w.clone()))
    }

    /// Formal adjoint `theta` from degree `q` to `q - 1`.
    pub fn dbar_adjoint(&self, w: &FormField) -> Result<FormField> {
        let q = w.degree();
        if q == 0 {
            return Err(Error::Degree {
                degree: 0,
                n: self.grid.complex_dim,
                op: "dbar_adjoint",
            });
        }
        let hat = self.forward_form(w)?;
        Ok(self.inverse_form(q - 1, self.adjoint_hat(&hat, q)))
    }

    /// `dbar theta + theta dbar`, evaluated by composing the two operators.
    pub fn box_laplacian(&self, w: &FormField) -> Result<FormField> {
        let q = w.degree();
        let n = self.grid.complex_dim;
        let hat = self.forward_form(w)?;
        let mut out: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); self.grid.len()]; hat.len()];
        if q > 0 {
            let down = self.adjoint_hat(&hat, q);
            for (o, t) in out.iter_mut().zip(self.dbar_hat(&down, q - 1)) {
                o.par_iter_mut().zip(t).for_each(|(a, b)| *a += b);
            }
        }
        if q < n {
            let up = self.dbar_hat(&hat, q);
            for (o, t) in out.iter_mut().zip(self.adjoint_hat(&up, q + 1)) {
                o.par_iter_mut().zip(t).for_each(|(a, b)| *a += b);
            }
        }
        Ok(self.inverse_form(q, out))
    }

    /// Real Laplacian `Delta w`.
    pub fn laplacian(&self, w: &ScalarField) -> Result<ScalarField> {
        let hat = self.forward(w)?;
        let out = self.apply_multiplier(&hat, |idx| Complex64::new(-self.symbol.neg_laplacian(idx), 0.0));
        Ok(self.inverse(out))
    }

    /// Partial derivatives along every real axis.
    pub fn gradient(&self, w: &ScalarField) -> Result<Vec<ScalarField>> {
        let hat = self.forward(w)?;
        Ok((0..self.grid.real_dim())
            .map(|a| {
                let d = self.apply_multiplier(&hat, |idx| Complex64::new(0.0, self.symbol.first(idx[a])));
                self.inverse(d)
            })
            .collect())
    }

    /// `||grad w||^2`, evaluated in frequency space.
    pub fn gradient_norm_sq(&self, w: &ScalarField) -> Result<f64> {
        let hat = self.forward(w)?;
        let d = self.grid.real_dim();
        let s = self.grid.map_indices(|k, idx| {
            let sig: f64 = (0..d).map(|a| self.symbol.first(idx[a]).powi(2)).sum();
            sig * hat[k].norm_sqr()
        });
        Ok(self.parseval_scale() * chunked_sum(&s, |_, v| *v))
    }

    /// `||w||^2` computed from the transform.
    pub fn spectral_norm_sq(&self, w: &ScalarField) -> Result<f64> {
        let hat = self.forward(w)?;
        Ok(self.parseval_scale() * chunked_sum(&hat, |_, v| v.norm_sqr()))
    }

    /// Random field whose spectrum is supported on `|k| <= max_wavenumber`
    /// along every axis, with independent coefficients uniform in the unit square. The Nyquist
    /// bin is always empty.
    pub fn random_band_limited<R: Rng + ?Sized>(&self, max_wavenumber: usize, rng: &mut R) -> ScalarField {
        let kmax = max_wavenumber.min(self.grid.points_per_axis / 2 - 1) as i64;
        let d = self.grid.real_dim();
        let mut idx = vec![0usize; d];
        let spectrum: Vec<Complex64> = (0..self.grid.len())
            .map(|k| {
                let re = rng.gen_range(-1.0..1.0);
                let im = rng.gen_range(-1.0..1.0);
                self.grid.axis_indices(k, &mut idx);
                if idx.iter().all(|&i| self.grid.wavenumber(i).abs() <= kmax) {
                    Complex64::new(re, im)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        self.inverse(spectrum)
    }

    /// Factor turning `sum |hat w|^2` into `h^{2n} sum |w|^2`.
    pub fn parseval_scale(&self) -> f64 {
        self.grid.cell_volume() / self.grid.len() as f64
    }
}
