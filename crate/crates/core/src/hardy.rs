//! Hardy inequalities `(m-2)^2/4 * int phi^2 / d_H^2 <= int |grad phi|^2` for
//! affine subspaces `H` of codimension `m >= 3`, checked on grid samples,
//! plus pointwise checks of the subharmonic witness `psi = -d_H^{2-m}`.
//!
//! The singular integral is a grid sum over nodes at distance at least `h`
//! from `H`. When `H` is spanned by coordinate axes and passes through grid
//! nodes, that sum has a known lattice bias; the corrected value subtracts
//! the two leading terms of its expansion
//!
//! `T ~ I + h^{m-2} Z_m(2) int_H phi^2 + h^m Z_m(0) / (2m) int_H Lap_T phi^2`
//!
//! where `Z_m` is the Epstein zeta function of `Z^m` and `Lap_T` is the
//! Laplacian across `H`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineSubspace;
use crate::grid::{chunked_sum, GridSpec, Operators, ScalarField};

/// `(m-2)^2 / 4`, the best constant for codimension `m >= 3`.
pub fn hardy_constant(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::Codimension { m, required: 3 });
    }
    let k = (m - 2) as f64;
    Ok(k * k / 4.0)
}

/// `sum' |k|^{-2}` over `Z^m` (analytically continued), for the codimensions
/// where it is tabulated.
fn lattice_zeta_at_two(m: usize) -> Option<f64> {
    match m {
        3 => Some(-8.913_632_917_585),
        4 => Some(-4.0 * 4.0f64.ln()),
        _ => None,
    }
}

/// The Epstein zeta function at 0 is -1 in every dimension.
const LATTICE_ZETA_AT_ZERO: f64 = -1.0;

/// Nodes excluded from the singular quadrature: those closer than `h` to `H`.
pub fn exclusion_mask(grid: &GridSpec, subspace: &AffineSubspace) -> Vec<bool> {
    let cut = grid.spacing() * (1.0 - 1e-9);
    grid.map_points(|x| subspace.distance(x) < cut)
}

/// `d_H^{-2}` on a grid with the excluded nodes zeroed, prepared once per
/// subspace.
pub struct SingularWeight {
    subspace: AffineSubspace,
    grid: GridSpec,
    weight: Vec<f64>,
    excluded_nodes: usize,
    /// Transverse axes and the nodes lying on `H`, when the lattice
    /// correction applies.
    lattice: Option<(Vec<usize>, Vec<usize>)>,
}

impl SingularWeight {
    pub fn new(grid: &GridSpec, subspace: &AffineSubspace) -> Result<Self> {
        if subspace.ambient_dim() != grid.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.real_dim(),
                got: subspace.ambient_dim(),
            });
        }
        let excluded = exclusion_mask(grid, subspace);
        let mut weight = Self::with_exclusion(grid, subspace, &excluded);
        weight.lattice = axis_aligned_layout(grid, subspace).map(|transverse| {
            let h = grid.spacing();
            let on_h = grid.map_points(|x| subspace.distance(x) < 1e-9 * h);
            let nodes = (0..on_h.len()).filter(|&k| on_h[k]).collect();
            (transverse, nodes)
        });
        Ok(weight)
    }

    /// Uses a caller-supplied exclusion mask. No lattice correction is
    /// applied to such weights.
    pub fn with_exclusion(grid: &GridSpec, subspace: &AffineSubspace, excluded: &[bool]) -> Self {
        let weight = grid.map_indices(|k, idx| {
            if excluded[k] {
                return 0.0;
            }
            let mut x = [0.0f64; 16];
            for (a, &i) in idx.iter().enumerate() {
                x[a] = grid.coord(i);
            }
            let d = subspace.distance(&x[..idx.len()]);
            1.0 / (d * d)
        });
        Self {
            subspace: subspace.clone(),
            grid: *grid,
            weight,
            excluded_nodes: excluded.iter().filter(|&&e| e).count(),
            lattice: None,
        }
    }

    pub fn subspace(&self) -> &AffineSubspace {
        &self.subspace
    }

    /// `h^N sum_{not excluded} |phi|^2 / d_H^2`.
    pub fn integral(&self, phi: &ScalarField) -> f64 {
        self.grid.cell_volume() * chunked_sum(phi.samples(), |k, v| self.weight[k] * v.norm_sqr())
    }
}

/// Transverse axes and base-node indices when `H` is spanned by coordinate
/// axes through grid nodes.
fn axis_aligned_layout(grid: &GridSpec, subspace: &AffineSubspace) -> Option<Vec<usize>> {
    let d = grid.real_dim();
    let mut along = vec![false; d];
    for dir in subspace.directions() {
        let hits: Vec<usize> = (0..d).filter(|&a| dir[a].abs() > 1e-12).collect();
        if hits.len() != 1 || (dir[hits[0]].abs() - 1.0).abs() > 1e-12 {
            return None;
        }
        along[hits[0]] = true;
    }
    let transverse: Vec<usize> = (0..d).filter(|&a| !along[a]).collect();
    for &a in &transverse {
        grid.node_index(subspace.base_point()[a], 1e-9)?;
    }
    Some(transverse)
}

/// Sixth-order second-difference weights at offsets `-3..=3`.
const SECOND_DIFF_6: [f64; 7] = [
    1.0 / 90.0,
    -3.0 / 20.0,
    3.0 / 2.0,
    -49.0 / 18.0,
    3.0 / 2.0,
    -3.0 / 20.0,
    1.0 / 90.0,
];

/// Correction `h^{m-2} Z(2) S0 + h^m Z(0) S2 / (2m)` to subtract from the
/// raw singular sum, or `None` when it does not apply.
fn lattice_correction(phi: &ScalarField, weight: &SingularWeight) -> Option<f64> {
    let grid = *phi.grid();
    let subspace = &weight.subspace;
    let m = subspace.codim();
    let z2 = lattice_zeta_at_two(m)?;
    let (transverse, on_h) = weight.lattice.as_ref()?;
    let h = grid.spacing();
    let p = grid.points_per_axis as isize;
    let samples = phi.samples();
    let mut idx = vec![0usize; grid.real_dim()];
    let mut s0 = 0.0;
    let mut s2 = 0.0;
    for &k in on_h {
        s0 += samples[k].norm_sqr();
        grid.axis_indices(k, &mut idx);
        let mut lap = 0.0;
        for &a in transverse {
            let s = grid.stride(a) as isize;
            let i = idx[a] as isize;
            for (o, c) in (-3isize..=3).zip(SECOND_DIFF_6) {
                let j = (i + o).rem_euclid(p);
                let kk = (k as isize + (j - i) * s) as usize;
                lap += c * samples[kk].norm_sqr();
            }
        }
        s2 += lap / (h * h);
    }
    let slice = h.powi((grid.real_dim() - m) as i32);
    let mf = m as f64;
    Some(h.powi(m as i32 - 2) * z2 * s0 * slice + h.powi(m as i32) * LATTICE_ZETA_AT_ZERO * s2 * slice / (2.0 * mf))
}

/// Both sides of the Hardy inequality for one test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighQuotient {
    /// `int |grad phi|^2`.
    pub numerator: f64,
    /// Singular integral used for `quotient`: corrected when available.
    pub denominator: f64,
    /// Plain grid sum over nodes at distance `>= h` from `H`.
    pub denominator_raw: f64,
    pub quotient: f64,
    pub quotient_raw: f64,
    pub corrected: bool,
    pub excluded_nodes: usize,
    pub excluded_volume: f64,
}

/// `int |grad phi|^2 / int phi^2 / d_H^2` with a spectral gradient.
pub fn rayleigh_quotient(phi: &ScalarField, subspace: &AffineSubspace) -> Result<RayleighQuotient> {
    let ops = Operators::spectral(*phi.grid());
    let weight = SingularWeight::new(phi.grid(), subspace)?;
    rayleigh_quotient_with(&ops, &weight, phi)
}

/// As [`rayleigh_quotient`], reusing prepared operators and weight.
pub fn rayleigh_quotient_with(
    ops: &Operators,
    weight: &SingularWeight,
    phi: &ScalarField,
) -> Result<RayleighQuotient> {
    let grid = *phi.grid();
    if grid != weight.grid {
        return Err(Error::GridMismatch);
    }
    let scale = phi.max_abs();
    if scale == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let imag = phi
        .samples()
        .iter()
        .map(|v| v.im.abs())
        .fold(0.0, f64::max);
    if imag > 1e-14 * scale {
        return Err(Error::InvalidFunction(format!(
            "test function must be real-valued (max imaginary part {imag:.3e})"
        )));
    }
    let raw = weight.integral(phi);
    if !(raw >= 1e-300) {
        return Err(Error::DegenerateDenominator(raw));
    }
    let numerator = ops.gradient_norm_sq(phi)?;
    let correction = lattice_correction(phi, weight);
    let denominator = correction.map_or(raw, |c| raw - c);
    if !(denominator >= 1e-300) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    Ok(RayleighQuotient {
        numerator,
        denominator,
        denominator_raw: raw,
        quotient: numerator / denominator,
        quotient_raw: numerator / raw,
        corrected: correction.is_some(),
        excluded_nodes: weight.excluded_nodes,
        excluded_volume: weight.excluded_nodes as f64 * grid.cell_volume(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `a exp(-|x - c|^2 / (2 w^2))`.
    Gaussian,
    /// `a exp(1 - 1 / (1 - |x - c|^2 / w^2))` inside the ball of radius `w`.
    Bump,
    /// `a (1 + (d_H / s)^2)^{-beta} exp(-|x - c|^2 / (2 w^2))` with `c` on `H`.
    RadialProfile,
}

/// A seeded family of smooth real test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub kind: FamilyKind,
    pub count: usize,
    pub seed: u64,
    /// Centers are uniform in `[-center_spread, center_spread]^N`.
    pub center_spread: f64,
    pub width_range: [f64; 2],
    /// Range of the profile scale `s` of radial profiles.
    #[serde(default)]
    pub profile_scale_range: Option<[f64; 2]>,
    #[serde(default = "unit_range")]
    pub amplitude_range: [f64; 2],
}

fn unit_range() -> [f64; 2] {
    [0.5, 2.0]
}

impl TestFunctionFamily {
    /// Parameters that keep every member well resolved and away from the
    /// periodic seam on a grid of half-width `half_width`.
    pub fn standard(kind: FamilyKind, count: usize, seed: u64, half_width: f64) -> Self {
        let l = half_width;
        let (center_spread, width_range, profile_scale_range) = match kind {
            FamilyKind::Gaussian => (0.25 * l, [0.075 * l, 0.09 * l], None),
            FamilyKind::Bump => (0.1 * l, [0.2 * l, 0.38 * l], None),
            FamilyKind::RadialProfile => (0.2 * l, [0.09 * l, 0.09 * l], Some([0.05 * l, 0.15 * l])),
        };
        Self {
            kind,
            count,
            seed,
            center_spread,
            width_range,
            profile_scale_range,
            amplitude_range: unit_range(),
        }
    }

    /// Draws the members. Centers of radial profiles are projected onto `H`.
    pub fn members(&self, grid: &GridSpec, subspace: &AffineSubspace) -> Result<Vec<TestFunction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = grid.real_dim();
        let [w0, w1] = self.width_range;
        let [a0, a1] = self.amplitude_range;
        if !(w0 > 0.0 && w0 <= w1 && a0 <= a1 && self.center_spread >= 0.0) {
            return Err(Error::InvalidFunction(format!("bad family ranges: {self:?}")));
        }
        if self.kind == FamilyKind::RadialProfile
            && !matches!(self.profile_scale_range, Some([s0, s1]) if s0 > 0.0 && s0 <= s1)
        {
            return Err(Error::InvalidFunction(
                "radial profiles need a positive profile_scale_range".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.count);
        for index in 0..self.count {
            let mut center: Vec<f64> = (0..d)
                .map(|_| self.center_spread * rng.gen_range(-1.0..=1.0))
                .collect();
            let width = rng.gen_range(w0..=w1);
            let amplitude = rng.gen_range(a0..=a1);
            let exponent = rng.gen_range(0.25..=1.5);
            let profile_scale = match self.profile_scale_range {
                Some([s0, s1]) if self.kind == FamilyKind::RadialProfile => rng.gen_range(s0..=s1),
                _ => 0.0,
            };
            if self.kind == FamilyKind::RadialProfile {
                let mut off = vec![0.0; d];
                subspace.normal_component(&center, &mut off);
                center.iter_mut().zip(&off).for_each(|(c, o)| *c -= o);
            }
            let member = TestFunction {
                kind: self.kind,
                index,
                center,
                width,
                amplitude,
                profile_scale,
                exponent,
            };
            member.check_support(grid)?;
            out.push(member);
        }
        Ok(out)
    }
}

/// One member of a [`TestFunctionFamily`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: FamilyKind,
    pub index: usize,
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
    /// Profile scale `s` of radial profiles.
    pub profile_scale: f64,
    /// Decay exponent `beta` of radial profiles.
    pub exponent: f64,
}

impl TestFunction {
    pub fn gaussian(center: Vec<f64>, width: f64) -> Self {
        Self {
            kind: FamilyKind::Gaussian,
            index: 0,
            center,
            width,
            amplitude: 1.0,
            profile_scale: 0.0,
            exponent: 0.0,
        }
    }

    fn check_support(&self, grid: &GridSpec) -> Result<()> {
        let l = grid.half_width;
        let reach = self.center.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let ok = match self.kind {
            FamilyKind::Bump => reach + self.width <= 0.5 * l,
            // exp(-32.3) < 1e-14
            FamilyKind::Gaussian | FamilyKind::RadialProfile => {
                (l - reach).powi(2) / (2.0 * self.width * self.width) > 32.3
            }
        };
        if !ok {
            return Err(Error::InvalidFunction(format!(
                "member {} is not negligible at the box boundary: {self:?}",
                self.index
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], subspace: &AffineSubspace) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let w2 = self.width * self.width;
        self.amplitude
            * match self.kind {
                FamilyKind::Gaussian => (-r2 / (2.0 * w2)).exp(),
                FamilyKind::Bump => {
                    if r2 < w2 {
                        (1.0 - 1.0 / (1.0 - r2 / w2)).exp()
                    } else {
                        0.0
                    }
                }
                FamilyKind::RadialProfile => {
                    let d = subspace.distance(x) / self.profile_scale;
                    (1.0 + d * d).powf(-self.exponent) * (-r2 / (2.0 * w2)).exp()
                }
            }
    }

    pub fn sample(&self, grid: &GridSpec, subspace: &AffineSubspace) -> Result<ScalarField> {
        ScalarField::from_fn(*grid, |x| Complex64::new(self.eval(x, subspace), 0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyRecord {
    pub member: TestFunction,
    pub quotient: RayleighQuotient,
    /// `quotient - (m-2)^2/4`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub codim: usize,
    pub constant: f64,
    /// Quotients must be at least `constant * (1 - slack)`.
    pub slack: f64,
    pub grid: GridSpec,
    pub family: TestFunctionFamily,
    pub records: Vec<HardyRecord>,
    pub min_quotient: f64,
    pub min_index: usize,
    /// JSON description of the member attaining the minimum.
    pub min_configuration: String,
    pub passed: bool,
}

/// Default quadrature slack on the inequality.
pub const HARDY_SLACK: f64 = 1e-2;

/// Evaluates every member of a family and records the outcome without
/// failing on violations.
pub fn evaluate_family(
    family: &TestFunctionFamily,
    grid: &GridSpec,
    subspace: &AffineSubspace,
) -> Result<HardyReport> {
    let m = subspace.codim();
    let constant = hardy_constant(m)?;
    let ops = Operators::spectral(*grid);
    let weight = SingularWeight::new(grid, subspace)?;
    let bound = constant * (1.0 - HARDY_SLACK);
    let mut records = Vec::with_capacity(family.count);
    for member in family.members(grid, subspace)? {
        let phi = member.sample(grid, subspace)?;
        let quotient = rayleigh_quotient_with(&ops, &weight, &phi)?;
        records.push(HardyRecord {
            margin: quotient.quotient - constant,
            passed: quotient.quotient >= bound,
            member,
            quotient,
        });
    }
    let (min_index, min_quotient) = records
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.quotient.quotient))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let min_configuration = records
        .get(min_index)
        .map(|r| serde_json::to_string(&r.member))
        .transpose()?
        .unwrap_or_default();
    Ok(HardyReport {
        codim: m,
        constant,
        slack: HARDY_SLACK,
        grid: *grid,
        family: family.clone(),
        passed: records.iter().all(|r| r.passed),
        records,
        min_quotient,
        min_index,
        min_configuration,
    })
}

/// Like [`evaluate_family`], but a violating member is an error carrying
/// its configuration.
pub fn verify_hardy(
    family: &TestFunctionFamily,
    grid: &GridSpec,
    subspace: &AffineSubspace,
) -> Result<HardyReport> {
    let report = evaluate_family(family, grid, subspace)?;
    if let Some(bad) = report.records.iter().find(|r| !r.passed) {
        return Err(Error::HardyViolation {
            index: bad.member.index,
            quotient: bad.quotient.quotient,
            bound: report.constant * (1.0 - report.slack),
            config: serde_json::to_string(&bad.member)?,
        });
    }
    Ok(report)
}

/// `psi(x) = -d_H(x)^{2-m}`.
pub fn witness(subspace: &AffineSubspace, x: &[f64]) -> f64 {
    let m = subspace.codim() as i32;
    -subspace.distance(x).powi(2 - m)
}

/// `count` seeded points uniform in `[-half_width, half_width]^N` at
/// distance at least `min_distance` from `H`.
pub fn off_subspace_points(
    subspace: &AffineSubspace,
    count: usize,
    min_distance: f64,
    half_width: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = subspace.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(Error::Config(format!(
                "no room for points at distance {min_distance} from H inside the box"
            )));
        }
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-half_width..half_width)).collect();
        if subspace.distance(&p) >= min_distance {
            out.push(p);
        }
    }
    Ok(out)
}

fn check_points(subspace: &AffineSubspace, points: &[Vec<f64>], min_distance: f64) -> Result<()> {
    hardy_constant(subspace.codim())?;
    for p in points {
        let d = subspace.distance_checked(p)?;
        if !(d >= min_distance && d > 0.0) {
            return Err(Error::TooCloseToSubspace {
                distance: d,
                required: min_distance,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub codim: usize,
    pub points: usize,
    /// Largest `| |grad psi|^2 / psi^2 - (m-2)^2 / d_H^2 | / ((m-2)^2 / d_H^2)`.
    pub max_relative_error: f64,
}

/// Compares `|grad psi|^2 / psi^2` (central differences with step
/// `1e-5 d_H`) against `(m-2)^2 / d_H^2` at every point.
pub fn witness_identity_check(
    subspace: &AffineSubspace,
    points: &[Vec<f64>],
    min_distance: f64,
) -> Result<WitnessReport> {
    check_points(subspace, points, min_distance)?;
    let m = subspace.codim();
    let k2 = ((m - 2) * (m - 2)) as f64;
    let mut worst: f64 = 0.0;
    for p in points {
        let d = subspace.distance(p);
        let step = 1e-5 * d;
        let psi = witness(subspace, p);
        let mut grad2 = 0.0;
        let mut y = p.clone();
        for a in 0..p.len() {
            y[a] = p[a] + step;
            let plus = witness(subspace, &y);
            y[a] = p[a] - step;
            let minus = witness(subspace, &y);
            y[a] = p[a];
            grad2 += ((plus - minus) / (2.0 * step)).powi(2);
        }
        let want = k2 / (d * d);
        worst = worst.max((grad2 / (psi * psi) - want).abs() / want);
    }
    Ok(WitnessReport {
        codim: m,
        points: points.len(),
        max_relative_error: worst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicityReport {
    pub codim: usize,
    pub points: usize,
    pub min_laplacian: f64,
    pub max_abs_laplacian: f64,
    /// `max |Lap psi| * d_H^m`, which is scale free.
    pub max_scaled_laplacian: f64,
}

/// Sixth-order finite-difference Laplacian of `psi` with step `0.01 d_H`.
pub fn subharmonicity_check(
    subspace: &AffineSubspace,
    points: &[Vec<f64>],
    min_distance: f64,
) -> Result<SubharmonicityReport> {
    check_points(subspace, points, min_distance)?;
    let m = subspace.codim();
    let mut min_lap = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut max_scaled: f64 = 0.0;
    for p in points {
        let d = subspace.distance(p);
        let step = 0.01 * d;
        let mut lap = 0.0;
        let mut y = p.clone();
        for a in 0..p.len() {
            let mut acc = 0.0;
            for (o, c) in (-3i32..=3).zip(SECOND_DIFF_6) {
                y[a] = p[a] + o as f64 * step;
                acc += c * witness(subspace, &y);
            }
            y[a] = p[a];
            lap += acc / (step * step);
        }
        min_lap = min_lap.min(lap);
        max_abs = max_abs.max(lap.abs());
        max_scaled = max_scaled.max(lap.abs() * d.powi(m as i32));
    }
    Ok(SubharmonicityReport {
        codim: m,
        points: points.len(),
        min_laplacian: if points.is_empty() { 0.0 } else { min_lap },
        max_abs_laplacian: max_abs,
        max_scaled_laplacian: max_scaled,
    })
}
