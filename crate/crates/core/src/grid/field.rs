use num_complex::Complex64;
use rayon::prelude::*;

use super::{chunked_sum, GridSpec};
use crate::error::{Error, Result};

/// Complex samples on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if samples.par_iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, samples })
    }

    /// Wraps samples known to be finite and correctly sized.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, Complex64::default())
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every node. Fails if `f` produces a non-finite value.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        Self::new(grid, grid.map_points(f))
    }

    pub fn from_real_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `h^{2n} sum |w|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * chunked_sum(&self.samples, |_, v| v.norm_sqr())
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `h^{2n} sum a conj(b)`.
    pub fn inner(&self, other: &ScalarField) -> Result<Complex64> {
        self.check_grid(other)?;
        let b = &other.samples;
        let re = chunked_sum(&self.samples, |k, a| (a * b[k].conj()).re);
        let im = chunked_sum(&self.samples, |k, a| (a * b[k].conj()).im);
        Ok(self.grid.cell_volume() * Complex64::new(re, im))
    }

    /// `h^{2n} sum weight |w|^2`, using the real part of `weight`.
    pub fn weighted_norm_sq(&self, weight: &ScalarField) -> Result<f64> {
        self.check_grid(weight)?;
        if let Some((index, value)) = weight
            .samples
            .iter()
            .enumerate()
            .find(|(_, v)| v.re < 0.0)
            .map(|(i, v)| (i, v.re))
        {
            return Err(Error::NegativeWeight { index, value });
        }
        let w = &weight.samples;
        Ok(self.grid.cell_volume() * chunked_sum(&self.samples, |k, v| w[k].re * v.norm_sqr()))
    }

    /// `h^{2n} sum_{mask} |w|^2`.
    pub fn masked_norm_sq(&self, mask: &[bool]) -> Result<f64> {
        if mask.len() != self.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                got: mask.len(),
            });
        }
        Ok(self.grid.cell_volume()
            * chunked_sum(&self.samples, |k, v| if mask[k] { v.norm_sqr() } else { 0.0 }))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples
            .par_iter()
            .map(|v| v.norm())
            .reduce(|| 0.0, f64::max)
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> Complex64 {
        let re = chunked_sum(&self.samples, |_, v| v.re);
        let im = chunked_sum(&self.samples, |_, v| v.im);
        Complex64::new(re, im) / self.samples.len() as f64
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Self::from_raw(self.grid, self.samples.par_iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with<F>(&self, other: &ScalarField, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        self.check_grid(other)?;
        Ok(Self::from_raw(
            self.grid,
            self.samples
                .par_iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }
}

/// All strictly increasing `q`-subsets of `{0, ..., n-1}` in lexicographic
/// order.
pub fn multi_indices(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if q <= n {
        rec(0, n, q, &mut Vec::with_capacity(q), &mut out);
    }
    out
}

/// A (0,q)-form `sum_J w_J dzbar_J`, one scalar field per strictly
/// increasing multi-index `J`.
///
/// Keys are 0-based (`[0]` is `dzbar_1`); the dump format and reports use
/// 1-based labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    grid: GridSpec,
    degree: usize,
    keys: Vec<Vec<usize>>,
    components: Vec<ScalarField>,
}

impl FormField {
    pub fn zeros(grid: GridSpec, degree: usize) -> Result<Self> {
        let keys = Self::keys_for(&grid, degree, "zeros")?;
        let components = keys.iter().map(|_| ScalarField::zeros(grid)).collect();
        Ok(Self {
            grid,
            degree,
            keys,
            components,
        })
    }

    /// Builds a form from components listed in lexicographic key order.
    pub fn from_components(
        grid: GridSpec,
        degree: usize,
        components: Vec<ScalarField>,
    ) -> Result<Self> {
        let keys = Self::keys_for(&grid, degree, "from_components")?;
        if components.len() != keys.len() {
            return Err(Error::DimensionMismatch {
                expected: keys.len(),
                got: components.len(),
            });
        }
        if components.iter().any(|c| c.grid != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            degree,
            keys,
            components,
        })
    }

    pub fn from_scalar(field: ScalarField) -> Self {
        Self {
            grid: field.grid,
            degree: 0,
            keys: vec![Vec::new()],
            components: vec![field],
        }
    }

    fn keys_for(grid: &GridSpec, degree: usize, op: &'static str) -> Result<Vec<Vec<usize>>> {
        if degree > grid.complex_dim {
            return Err(Error::Degree {
                degree,
                n: grid.complex_dim,
                op,
            });
        }
        Ok(multi_indices(grid.complex_dim, degree))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn keys(&self) -> &[Vec<usize>] {
        &self.keys
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn index_of(&self, key: &[usize]) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    pub fn component(&self, key: &[usize]) -> Option<&ScalarField> {
        self.index_of(key).map(|i| &self.components[i])
    }

    pub fn component_mut(&mut self, key: &[usize]) -> Option<&mut ScalarField> {
        self.index_of(key).map(move |i| &mut self.components[i])
    }

    /// The single component of a degree-0 form.
    pub fn into_scalar(self) -> Result<ScalarField> {
        if self.degree != 0 {
            return Err(Error::Degree {
                degree: self.degree,
                n: self.grid.complex_dim,
                op: "into_scalar",
            });
        }
        Ok(self.components.into_iter().next().expect("one component"))
    }

    fn check_compatible(&self, other: &FormField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::Degree {
                degree: other.degree,
                n: self.grid.complex_dim,
                op: "binary form operation",
            });
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(ScalarField::norm_sq).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inner(&self, other: &FormField) -> Result<Complex64> {
        self.check_compatible(other)?;
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn weighted_norm_sq(&self, weight: &ScalarField) -> Result<f64> {
        self.components
            .iter()
            .map(|c| c.weighted_norm_sq(weight))
            .sum()
    }

    pub fn masked_norm_sq(&self, mask: &[bool]) -> Result<f64> {
        self.components.iter().map(|c| c.masked_norm_sq(mask)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(ScalarField::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn map_components<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ScalarField) -> Result<ScalarField>,
    {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::from_components(self.grid, self.degree, components)
    }

    pub fn add(&self, other: &FormField) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(self.grid, self.degree, comps)
    }

    pub fn sub(&self, other: &FormField) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(self.grid, self.degree, comps)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            degree: self.degree,
            keys: self.keys.clone(),
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// 1-based label of a key, e.g. `[0, 1]` becomes `"12"`, with `"0"` for
    /// the empty key. Digits are comma-separated once `n` exceeds 9.
    pub fn key_label(key: &[usize]) -> String {
        if key.is_empty() {
            return "0".into();
        }
        let wide = key.iter().any(|&k| k >= 9);
        let parts: Vec<String> = key.iter().map(|k| (k + 1).to_string()).collect();
        parts.join(if wide { "," } else { "" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts_and_order() {
        assert_eq!(multi_indices(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(
            multi_indices(3, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(multi_indices(4, 2).len(), 6);
        assert!(multi_indices(2, 3).is_empty());
    }

    #[test]
    fn unit_field_norm_is_box_volume() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        let one = ScalarField::constant(g, Complex64::new(1.0, 0.0));
        assert!((one.norm_sq() - 4.0).abs() < 1e-14);
        assert_eq!(ScalarField::zeros(g).norm_sq(), 0.0);
    }

    #[test]
    fn gaussian_norm_matches_closed_form() {
        let g = GridSpec::new(2, 32, 8.0).unwrap();
        let gauss =
            ScalarField::from_real_fn(g, |x| (-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp())
                .unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((gauss.norm_sq() - pi2).abs() < 1e-10 * pi2);
    }

    #[test]
    fn rejects_nonfinite_and_negative_weights() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        assert!(ScalarField::from_real_fn(g, |x| 1.0 / x[0]).is_err());
        let w = ScalarField::from_real_fn(g, |x| x[0]).unwrap();
        let f = ScalarField::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(
            f.weighted_norm_sq(&w),
            Err(Error::NegativeWeight { .. })
        ));
        let other = GridSpec::new(1, 16, 1.0).unwrap();
        assert!(matches!(
            f.inner(&ScalarField::zeros(other)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn form_structure() {
        let g = GridSpec::new(3, 8, 1.0).unwrap();
        let w = FormField::zeros(g, 2).unwrap();
        assert_eq!(w.components().len(), 3);
        assert!(w.component(&[0, 2]).is_some());
        assert!(w.component(&[2, 0]).is_none());
        assert!(FormField::zeros(g, 4).is_err());
        assert_eq!(FormField::key_label(&[0, 2]), "13");
        assert_eq!(FormField::key_label(&[]), "0");
    }
}
