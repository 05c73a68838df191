//! Field dumps: a raw little-endian `complex128` array (real, imaginary
//! interleaved, row-major, last axis fastest) in `<stem>.bin` next to a JSON
//! sidecar `<stem>.json` describing the grid and the form component.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FormField, GridSpec, ScalarField};
use crate::error::{Error, Result};

/// Metadata stored next to every dumped array. `component_key` lists the
/// 1-based indices of `dzbar_J`; it is empty for functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub complex_dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
    pub degree: usize,
    pub component_key: Vec<usize>,
}

impl FieldSidecar {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.complex_dim, self.points_per_axis, self.half_width)
    }
}

/// Writes one component; `key` is 0-based. Returns the two paths written.
pub fn write_field(
    dir: &Path,
    stem: &str,
    field: &ScalarField,
    degree: usize,
    key: &[usize],
) -> Result<Vec<PathBuf>> {
    let g = field.grid();
    let sidecar = FieldSidecar {
        complex_dim: g.complex_dim,
        points_per_axis: g.points_per_axis,
        half_width: g.half_width,
        degree,
        component_key: key.iter().map(|k| k + 1).collect(),
    };
    let mut bytes = Vec::with_capacity(16 * field.samples().len());
    for v in field.samples() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&bin, bytes)?;
    fs::write(&json, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(vec![bin, json])
}

/// Writes every component of a form as `<stem>_<label>`.
pub fn write_form(dir: &Path, stem: &str, form: &FormField) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (key, comp) in form.keys().iter().zip(form.components()) {
        let name = if form.degree() == 0 {
            stem.to_string()
        } else {
            format!("{stem}_{}", FormField::key_label(key))
        };
        paths.extend(write_field(dir, &name, comp, form.degree(), key)?);
    }
    Ok(paths)
}

/// Reads `<stem>.bin` and its sidecar, given the path of either file.
pub fn read_field(path: &Path) -> Result<(FieldSidecar, ScalarField)> {
    let sidecar: FieldSidecar = serde_json::from_slice(&fs::read(path.with_extension("json"))?)?;
    let grid = sidecar.grid()?;
    let bytes = fs::read(path.with_extension("bin"))?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::DimensionMismatch {
            expected: 16 * grid.len(),
            got: bytes.len(),
        });
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((sidecar, ScalarField::new(grid, samples)?))
}
