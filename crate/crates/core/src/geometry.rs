//! Geometric data of an extension problem: the domain `Omega`, the obstacle
//! `E` (a finite union of closed balls), the affine subspace `H` whose tube
//! contains `E`, distance functions, the cutoff profile, and checks of the
//! three hypotheses (fattening, tube, connectivity).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Affine subspace `base_point + span(directions)` of real codimension
/// `ambient_dim - directions.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSubspace")]
pub struct AffineSubspace {
    base_point: Vec<f64>,
    directions: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawSubspace {
    base_point: Vec<f64>,
    #[serde(default)]
    directions: Vec<Vec<f64>>,
}

impl TryFrom<RawSubspace> for AffineSubspace {
    type Error = Error;

    fn try_from(raw: RawSubspace) -> Result<Self> {
        AffineSubspace::new(raw.base_point, raw.directions)
    }
}

impl AffineSubspace {
    /// Requires pairwise orthonormal directions (to 1e-12) and codimension
    /// at least 1.
    pub fn new(base_point: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        let d = base_point.len();
        if d == 0 {
            return Err(Error::InvalidSubspace("empty base point".into()));
        }
        if base_point.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSubspace("non-finite base point".into()));
        }
        if directions.len() >= d {
            return Err(Error::InvalidSubspace(format!(
                "{} directions leave no codimension in R^{d}",
                directions.len()
            )));
        }
        for (i, a) in directions.iter().enumerate() {
            check_dim(d, a.len())?;
            for (j, b) in directions.iter().enumerate().skip(i) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if !((dot - want).abs() <= 1e-12) {
                    return Err(Error::InvalidSubspace(format!(
                        "directions {i} and {j} have inner product {dot}, expected {want}"
                    )));
                }
            }
        }
        Ok(Self {
            base_point,
            directions,
        })
    }

    /// The subspace `{x : x_a = base_a for a not in axes}` spanned by the
    /// given coordinate axes (0-based) through `base_point`.
    pub fn coordinate(base_point: Vec<f64>, axes: &[usize]) -> Result<Self> {
        let d = base_point.len();
        let dirs = axes
            .iter()
            .map(|&a| {
                if a >= d {
                    return Err(Error::InvalidSubspace(format!("axis {a} out of range")));
                }
                let mut e = vec![0.0; d];
                e[a] = 1.0;
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base_point, dirs)
    }

    /// A single point, codimension equal to the ambient dimension.
    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::new(p, Vec::new())
    }

    pub fn ambient_dim(&self) -> usize {
        self.base_point.len()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.directions.len()
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Component of `x - base_point` orthogonal to the directions. Panics
    /// on dimension mismatch; see [`AffineSubspace::distance_checked`].
    pub fn normal_component(&self, x: &[f64], out: &mut [f64]) {
        for (o, (a, b)) in out.iter_mut().zip(x.iter().zip(&self.base_point)) {
            *o = a - b;
        }
        for dir in &self.directions {
            let t: f64 = out.iter().zip(dir).map(|(a, b)| a * b).sum();
            for (o, e) in out.iter_mut().zip(dir) {
                *o -= t * e;
            }
        }
    }

    /// Euclidean distance `d_H(x)`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut y = [0.0f64; 16];
        let d = self.ambient_dim();
        self.normal_component(&x[..d], &mut y[..d]);
        norm(&y[..d])
    }

    pub fn distance_checked(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.ambient_dim(), x.len())?;
        Ok(self.distance(x))
    }

    /// Whether `x` lies in the open tube `H_R`.
    pub fn in_tube(&self, x: &[f64], radius: f64) -> bool {
        self.distance(x) < radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// The closed set `E`: a nonempty finite union of closed balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObstacle")]
pub struct ObstacleSet {
    balls: Vec<Ball>,
}

#[derive(Deserialize)]
struct RawObstacle {
    balls: Vec<Ball>,
}

impl TryFrom<RawObstacle> for ObstacleSet {
    type Error = Error;

    fn try_from(raw: RawObstacle) -> Result<Self> {
        ObstacleSet::new(raw.balls)
    }
}

impl ObstacleSet {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        let first = balls
            .first()
            .ok_or_else(|| Error::InvalidGeometry("obstacle needs at least one ball".into()))?;
        let d = first.center.len();
        for b in &balls {
            check_dim(d, b.center.len())?;
            if !(b.radius.is_finite() && b.radius > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "ball radius must be positive, got {}",
                    b.radius
                )));
            }
            if b.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidGeometry("non-finite ball center".into()));
            }
        }
        Ok(Self { balls })
    }

    pub fn single(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(vec![Ball { center, radius }])
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn ambient_dim(&self) -> usize {
        self.balls[0].center.len()
    }

    /// `d_E(x) = min_i max(|x - c_i| - rho_i, 0)`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.balls
            .iter()
            .map(|b| (dist(x, &b.center) - b.radius).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn distance_checked(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.ambient_dim(), x.len())?;
        Ok(self.distance(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.balls
            .iter()
            .any(|b| dist(x, &b.center) <= b.radius)
    }

    /// Largest sup-norm coordinate reached by the `r`-fattening `E_r`.
    pub fn fattened_extent(&self, r: f64) -> f64 {
        self.balls
            .iter()
            .map(|b| b.center.iter().map(|c| c.abs()).fold(0.0, f64::max) + b.radius + r)
            .fold(0.0, f64::max)
    }
}

/// The domain `Omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { center: Vec<f64>, half_widths: Vec<f64> },
}

impl DomainSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DomainSpec::Ball { center, radius } => {
                check_dim(dim, center.len())?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "domain radius must be positive, got {radius}"
                    )));
                }
            }
            DomainSpec::Box {
                center,
                half_widths,
            } => {
                check_dim(dim, center.len())?;
                check_dim(dim, half_widths.len())?;
                if half_widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidGeometry("box half-widths must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> &[f64] {
        match self {
            DomainSpec::Ball { center, .. } | DomainSpec::Box { center, .. } => center,
        }
    }

    /// Distance from `x` to the complement of `Omega` (0 outside).
    pub fn inner_margin(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => (radius - dist(x, center)).max(0.0),
            DomainSpec::Box {
                center,
                half_widths,
            } => x
                .iter()
                .zip(center)
                .zip(half_widths)
                .map(|((xi, ci), wi)| wi - (xi - ci).abs())
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Ball { center, radius } => dist(x, center) < *radius,
            DomainSpec::Box {
                center,
                half_widths,
            } => x
                .iter()
                .zip(center)
                .zip(half_widths)
                .all(|((xi, ci), wi)| (xi - ci).abs() < *wi),
        }
    }

    /// Largest sup-norm coordinate of the closure.
    pub fn extent(&self) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => {
                center.iter().map(|c| c.abs()).fold(0.0, f64::max) + radius
            }
            DomainSpec::Box {
                center,
                half_widths,
            } => center
                .iter()
                .zip(half_widths)
                .map(|(c, w)| c.abs() + w)
                .fold(0.0, f64::max),
        }
    }
}

/// Monotone cutoff vanishing on `(-inf, 1/2]` and equal to 1 on `[1, inf)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `6s^5 - 15s^4 + 10s^3` with `s = clamp(2t - 1, 0, 1)`; C^2.
    #[default]
    Quintic,
}

impl CutoffProfile {
    pub const LOWER: f64 = 0.5;
    pub const UPPER: f64 = 1.0;

    pub fn eval(&self, t: f64) -> f64 {
        let s = (2.0 * t - 1.0).clamp(0.0, 1.0);
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= Self::LOWER || t >= Self::UPPER {
            return 0.0;
        }
        let s = 2.0 * t - 1.0;
        // d/ds = 30 s^2 (1 - s)^2, ds/dt = 2
        60.0 * s * s * (1.0 - s) * (1.0 - s)
    }

    /// `sup |chi'|`, attained at `t = 3/4`.
    pub fn sup_derivative(&self) -> f64 {
        3.75
    }
}

/// Everything needed to run the extension construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionConfig {
    pub grid: GridSpec,
    pub omega: DomainSpec,
    pub obstacle: ObstacleSet,
    pub subspace: AffineSubspace,
    /// Fattening radius `r`.
    #[serde(rename = "r")]
    pub fattening_radius: f64,
    /// Tube radius `R`.
    #[serde(rename = "R")]
    pub tube_radius: f64,
    #[serde(default)]
    pub chi: CutoffProfile,
}

impl ExtensionConfig {
    /// Structural validation: positive radii and matching dimensions.
    pub fn validate(&self) -> Result<()> {
        let d = self.grid.real_dim();
        self.omega.validate(d)?;
        check_dim(d, self.obstacle.ambient_dim())?;
        check_dim(d, self.subspace.ambient_dim())?;
        for (name, v) in [("r", self.fattening_radius), ("R", self.tube_radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn codim(&self) -> usize {
        self.subspace.codim()
    }

    /// Cutoff value `chi(d_E(x) / r)`.
    pub fn cutoff_at(&self, x: &[f64]) -> f64 {
        self.chi.eval(self.obstacle.distance(x) / self.fattening_radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityCheck {
    pub name: String,
    pub passed: bool,
    pub components: usize,
    pub nodes: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub complex_dim: usize,
    pub codim: usize,
    pub fattening: HypothesisCheck,
    pub tube: HypothesisCheck,
    pub connectivity: ConnectivityCheck,
    /// `L - extent(E_r)` in the sup norm: room between the fattened obstacle
    /// and the periodic seam.
    pub support_margin: f64,
    /// Whether the closure of `Omega` lies in the inner half-box.
    pub omega_in_inner_half: bool,
    /// Whether `Omega` reaches past the grid box (it is then clipped).
    pub omega_clipped: bool,
    pub passed: bool,
    pub failed: Vec<String>,
}

/// Checks the fattening, tube and connectivity hypotheses.
///
/// Fattening and tube use closed-form distances; connectivity flood-fills
/// the grid nodes of `(Omega cap box) \ E` over axis neighbours without
/// periodic wrap.
pub fn check_hypotheses(cfg: &ExtensionConfig) -> Result<HypothesisReport> {
    cfg.validate()?;
    let n = cfg.grid.complex_dim;
    if n < 2 {
        return Err(Error::TooFewComplexDims(n));
    }
    let m = cfg.codim();
    if m < 3 {
        return Err(Error::Codimension { m, required: 3 });
    }
    let r = cfg.fattening_radius;

    let (fat_margin, fat_worst) = cfg
        .obstacle
        .balls()
        .iter()
        .enumerate()
        .map(|(i, b)| (cfg.omega.inner_margin(&b.center) - b.radius - r, i))
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
    let fattening = HypothesisCheck {
        name: "fattening".into(),
        passed: fat_margin > 0.0,
        margin: fat_margin,
        detail: format!("E_r inside Omega; tightest ball {fat_worst}"),
    };

    let (tube_reach, tube_worst) = cfg
        .obstacle
        .balls()
        .iter()
        .enumerate()
        .map(|(i, b)| (cfg.subspace.distance(&b.center) + b.radius, i))
        .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let tube_margin = cfg.tube_radius - tube_reach;
    let tube = HypothesisCheck {
        name: "tube".into(),
        passed: tube_margin > 0.0,
        margin: tube_margin,
        detail: format!("E inside the R-tube of H (codim {m}); tightest ball {tube_worst}"),
    };

    let (components, nodes) = count_components(&cfg.grid, |x| {
        cfg.omega.contains(x) && !cfg.obstacle.contains(x)
    });
    let connectivity = ConnectivityCheck {
        name: "connectivity".into(),
        passed: components == 1,
        components,
        nodes,
        points_per_axis: cfg.grid.points_per_axis,
        spacing: cfg.grid.spacing(),
    };

    let l = cfg.grid.half_width;
    let extent = cfg.omega.extent();
    let mut failed = Vec::new();
    for (ok, name) in [
        (fattening.passed, "fattening"),
        (tube.passed, "tube"),
        (connectivity.passed, "connectivity"),
    ] {
        if !ok {
            failed.push(name.to_string());
        }
    }
    Ok(HypothesisReport {
        complex_dim: n,
        codim: m,
        support_margin: l - cfg.obstacle.fattened_extent(r),
        omega_in_inner_half: extent <= 0.5 * l,
        omega_clipped: extent >= l,
        passed: failed.is_empty(),
        failed,
        fattening,
        tube,
        connectivity,
    })
}

/// Number of axis-connected components of the grid nodes where `inside`
/// holds (no periodic wrap), and the number of such nodes.
pub fn count_components<F>(grid: &GridSpec, inside: F) -> (usize, usize)
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let mask = grid.map_points(&inside);
    let d = grid.real_dim();
    let p = grid.points_per_axis;
    let mut seen = vec![false; mask.len()];
    let mut idx = vec![0usize; d];
    let mut queue = VecDeque::new();
    let mut components = 0;
    let nodes = mask.iter().filter(|&&b| b).count();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            grid.axis_indices(k, &mut idx);
            for a in 0..d {
                let s = grid.stride(a);
                if idx[a] > 0 && mask[k - s] && !seen[k - s] {
                    seen[k - s] = true;
                    queue.push_back(k - s);
                }
                if idx[a] + 1 < p && mask[k + s] && !seen[k + s] {
                    seen[k + s] = true;
                    queue.push_back(k + s);
                }
            }
        }
    }
    (components, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ExtensionConfig {
        ExtensionConfig {
            grid: GridSpec::new(2, 16, 2.0).unwrap(),
            omega: DomainSpec::Ball {
                center: vec![0.0; 4],
                radius: 4.0,
            },
            obstacle: ObstacleSet::single(vec![0.0; 4], 0.5).unwrap(),
            subspace: AffineSubspace::point(vec![0.0; 4]).unwrap(),
            fattening_radius: 0.25,
            tube_radius: 1.0,
            chi: CutoffProfile::Quintic,
        }
    }

    #[test]
    fn subspace_distance_examples() {
        let h = AffineSubspace::coordinate(vec![0.0; 4], &[3]).unwrap();
        assert_eq!(h.codim(), 3);
        assert!((h.distance(&[3.0, 4.0, 0.0, 7.0]) - 5.0).abs() < 1e-15);
        assert_eq!(h.distance(h.base_point()), 0.0);
        assert!(h.distance_checked(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_non_orthonormal_directions() {
        assert!(AffineSubspace::new(vec![0.0; 4], vec![vec![1.0, 1.0, 0.0, 0.0]]).is_err());
        assert!(AffineSubspace::new(
            vec![0.0; 4],
            vec![vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]]
        )
        .is_err());
        let s = 0.5f64.sqrt();
        assert!(AffineSubspace::new(vec![0.0; 4], vec![vec![s, s, 0.0, 0.0], vec![s, -s, 0.0, 0.0]]).is_ok());
    }

    #[test]
    fn obstacle_distance_examples() {
        let e = ObstacleSet::single(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(e.distance(&[0.2, 0.0, 0.1, 0.0]), 0.0);
        assert!((e.distance(&[3.0, 0.0, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!(ObstacleSet::new(vec![]).is_err());
        assert!(ObstacleSet::single(vec![0.0; 4], 0.0).is_err());
    }

    #[test]
    fn cutoff_values() {
        let chi = CutoffProfile::Quintic;
        assert_eq!(chi.eval(0.3), 0.0);
        assert_eq!(chi.eval(1.2), 1.0);
        assert!((chi.eval(0.75) - 0.5).abs() < 1e-15);
        assert!((chi.derivative(0.75) - 3.75).abs() < 1e-14);
        let sampled = (0..=100_000)
            .map(|i| chi.derivative(i as f64 / 100_000.0))
            .fold(0.0, f64::max);
        assert!((sampled - chi.sup_derivative()).abs() < 1e-9);
    }

    #[test]
    fn reference_hypotheses_pass() {
        let rep = check_hypotheses(&reference()).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!((rep.fattening.margin - 3.25).abs() < 1e-12);
        assert!((rep.tube.margin - 0.5).abs() < 1e-12);
        assert!(rep.omega_clipped);
    }

    #[test]
    fn fattening_fails_for_tight_domain() {
        let mut cfg = reference();
        cfg.omega = DomainSpec::Ball {
            center: vec![0.0; 4],
            radius: 0.6,
        };
        let rep = check_hypotheses(&cfg).unwrap();
        assert!(!rep.fattening.passed);
        assert_eq!(rep.failed[0], "fattening");
    }

    #[test]
    fn dimension_and_codimension_errors() {
        let mut cfg = reference();
        cfg.subspace = AffineSubspace::coordinate(vec![0.0; 4], &[0, 1]).unwrap();
        assert!(matches!(check_hypotheses(&cfg), Err(Error::Codimension { m: 2, .. })));
        let one = ExtensionConfig {
            grid: GridSpec::new(1, 16, 2.0).unwrap(),
            omega: DomainSpec::Ball {
                center: vec![0.0; 2],
                radius: 1.5,
            },
            obstacle: ObstacleSet::single(vec![0.0; 2], 0.5).unwrap(),
            subspace: AffineSubspace::point(vec![0.0; 2]).unwrap(),
            fattening_radius: 0.25,
            tube_radius: 1.0,
            chi: CutoffProfile::Quintic,
        };
        assert!(matches!(check_hypotheses(&one), Err(Error::TooFewComplexDims(1))));
    }

    #[test]
    fn slab_disconnects_domain() {
        let mut cfg = reference();
        cfg.grid = GridSpec::new(2, 16, 2.0).unwrap();
        cfg.omega = DomainSpec::Box {
            center: vec![0.0; 4],
            half_widths: vec![1.5, 0.3, 0.3, 0.3],
        };
        cfg.obstacle = ObstacleSet::single(vec![0.0; 4], 0.6).unwrap();
        let rep = check_hypotheses(&cfg).unwrap();
        assert!(!rep.connectivity.passed);
        assert_eq!(rep.connectivity.components, 2);
    }
}
