//! The extension construction: cut `f` off near `E`, solve for the
//! correction, and check that `F = chi(d_E/r) f - u` is the holomorphic
//! extension of `f` across `E`.
//!
//! The pipeline differentiates with a central-difference scheme so that
//! polynomials are discretely holomorphic. `v` is evaluated by applying the
//! stencil to `chi f` at unwrapped points, which never samples `f` on `E`
//! and never crosses the periodic seam. On the torus the minimal-norm
//! correction carries a component in the kernel of `dbar` (the constants on
//! each parity class of nodes); it is removed by fitting it on the far field
//! outside the inner half-box.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    check_hypotheses, AffineSubspace, CutoffProfile, DomainSpec, ExtensionConfig, HypothesisReport,
    ObstacleSet,
};
use crate::grid::{
    chunked_sum, CentralStencil, DerivativeScheme, FormField, GridSpec, Operators, ScalarField,
};
use crate::hardy::hardy_constant;
use crate::report::{all_passed, Check};
use crate::solver::{
    certify_estimates, check_closed, solve_least_squares, solve_minimal, zero_mode_fraction,
    SolveReport, CLOSEDNESS_GATE, INEQUALITY_SLACK,
};

/// `coeff * prod_j z_j^{powers_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: Complex64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn constant(c: Complex64, n: usize) -> Self {
        Self {
            terms: vec![Monomial {
                coeff: c,
                powers: vec![0; n],
            }],
        }
    }

    pub fn monomial(coeff: Complex64, powers: Vec<u32>) -> Self {
        Self {
            terms: vec![Monomial { coeff, powers }],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            if t.powers.len() != n {
                return Err(Error::InvalidFunction(format!(
                    "monomial has {} exponents, expected {n}",
                    t.powers.len()
                )));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidFunction("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.powers
                    .iter()
                    .zip(z)
                    .fold(t.coeff, |acc, (&p, zj)| acc * zj.powu(p))
            })
            .sum()
    }
}

/// Holomorphic input `f`, in the coordinates `z_j = x_{2j} + i x_{2j+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum InputFunction {
    Polynomial(Polynomial),
    Rational {
        numerator: Polynomial,
        denominator: Polynomial,
    },
    /// `coeff * exp(sum_j linear_j z_j)`.
    Exponential {
        coeff: Complex64,
        linear: Vec<Complex64>,
    },
}

/// Smallest admissible `|denominator|` on `Omega`.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

impl InputFunction {
    pub fn constant(c: Complex64, n: usize) -> Self {
        Self::Polynomial(Polynomial::constant(c, n))
    }

    /// `1 / (z_j - a)`.
    pub fn simple_pole(j: usize, a: Complex64, n: usize) -> Self {
        let mut powers = vec![0; n];
        powers[j] = 1;
        Self::Rational {
            numerator: Polynomial::constant(Complex64::new(1.0, 0.0), n),
            denominator: Polynomial {
                terms: vec![
                    Monomial {
                        coeff: Complex64::new(1.0, 0.0),
                        powers,
                    },
                    Monomial {
                        coeff: -a,
                        powers: vec![0; n],
                    },
                ],
            },
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            InputFunction::Polynomial(p) => p.validate(n),
            InputFunction::Rational {
                numerator,
                denominator,
            } => {
                numerator.validate(n)?;
                denominator.validate(n)
            }
            InputFunction::Exponential { coeff, linear } => {
                if linear.len() != n {
                    return Err(Error::InvalidFunction(format!(
                        "exponential needs {n} linear coefficients, got {}",
                        linear.len()
                    )));
                }
                if !linear
                    .iter()
                    .chain(std::iter::once(coeff))
                    .all(|c| c.re.is_finite() && c.im.is_finite())
                {
                    return Err(Error::InvalidFunction("non-finite coefficient".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        match self {
            InputFunction::Polynomial(p) => p.eval(z),
            InputFunction::Rational {
                numerator,
                denominator,
            } => numerator.eval(z) / denominator.eval(z),
            InputFunction::Exponential { coeff, linear } => {
                coeff * linear.iter().zip(z).map(|(a, zj)| a * zj).sum::<Complex64>().exp()
            }
        }
    }

    /// `f` at a real point of `R^{2n}`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut z = [Complex64::default(); 8];
        let n = x.len() / 2;
        for j in 0..n {
            z[j] = Complex64::new(x[2 * j], x[2 * j + 1]);
        }
        self.eval_complex(&z[..n])
    }

    /// `|denominator(x)|`, or `None` for entire inputs.
    pub fn denominator_modulus(&self, x: &[f64]) -> Option<f64> {
        match self {
            InputFunction::Rational { denominator, .. } => {
                let n = x.len() / 2;
                let z: Vec<Complex64> = (0..n)
                    .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
                    .collect();
                Some(denominator.eval(&z).norm())
            }
            _ => None,
        }
    }
}

/// The standard scenario on `[-2, 2)^4`: `Omega = ball(0, 4)`,
/// `E = ball(0, 1/2)`, `H = {0}`, `r = 1/4`, `R = 1`.
pub fn reference_config(points_per_axis: usize) -> Result<ExtensionConfig> {
    Ok(ExtensionConfig {
        grid: GridSpec::new(2, points_per_axis, 2.0)?,
        omega: DomainSpec::Ball {
            center: vec![0.0; 4],
            radius: 4.0,
        },
        obstacle: ObstacleSet::single(vec![0.0; 4], 0.5)?,
        subspace: AffineSubspace::point(vec![0.0; 4])?,
        fattening_radius: 0.25,
        tube_radius: 1.0,
        chi: CutoffProfile::Quintic,
    })
}

/// Tunables of the pipeline. Defaults are the reference tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Order of the central-difference scheme (2, 4, 6 or 8).
    pub stencil_order: usize,
    /// Reject non-closed data and data with kernel content before solving.
    pub enforce_gates: bool,
    pub agreement_tol: f64,
    pub interior_tol: f64,
    pub holomorphy_tol: f64,
    pub far_field_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            stencil_order: 8,
            enforce_gates: true,
            agreement_tol: 1e-3,
            interior_tol: 1e-3,
            holomorphy_tol: 1e-3,
            far_field_tol: 1e-2,
        }
    }
}

impl PipelineOptions {
    pub fn operators(&self, grid: GridSpec) -> Result<Operators> {
        Operators::new(
            grid,
            DerivativeScheme::CentralDifference {
                order: self.stencil_order,
            },
        )
    }
}

/// Where `v` is nonzero, against the allowed shell `r/2 <= d_E <= r` and
/// tube `d_H <= R + r`, each widened by the stencil reach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub nodes: usize,
    pub smear: f64,
    pub min_obstacle_distance: f64,
    pub max_obstacle_distance: f64,
    pub max_subspace_distance: f64,
    pub inner_bound: f64,
    pub outer_bound: f64,
    pub tube_bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub chi_derivative_sup: f64,
    /// `||f||^2` over `(Omega cap box) \ E`.
    pub f_norm_sq: f64,
    pub v_norm_sq: f64,
    /// `int |v|^2 d_H^2`.
    pub v_dist_weighted: f64,
    pub closedness: f64,
    pub zero_mode: f64,
    pub support: SupportReport,
    pub checks: Vec<Check>,
}

/// `v = dbar(chi f)` together with the sampled `chi f`.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub v: FormField,
    pub cutoff_f: ScalarField,
    pub report: RhsReport,
}

fn norm_sq_where(grid: &GridSpec, values: &[Complex64], mask: &[bool]) -> f64 {
    grid.cell_volume() * chunked_sum(values, |i, z| if mask[i] { z.norm_sqr() } else { 0.0 })
}

/// Samples of `chi(d_E/r) f` on `Omega`, zero elsewhere. `f` is only
/// evaluated where the cutoff is positive, which excludes `E`.
fn cutoff_product<'a>(f: &'a InputFunction, cfg: &'a ExtensionConfig) -> impl Fn(&[f64]) -> Complex64 + Sync + 'a {
    move |x: &[f64]| {
        if !cfg.omega.contains(x) {
            return Complex64::default();
        }
        let c = cfg.cutoff_at(x);
        if c == 0.0 {
            Complex64::default()
        } else {
            c * f.eval(x)
        }
    }
}

/// Builds `v = dbar(chi(d_E/r) f)` with the options' stencil, checking the
/// hypotheses, the support of `v`, closedness and the two norm bounds on `v`.
pub fn build_rhs(f: &InputFunction, cfg: &ExtensionConfig, opts: &PipelineOptions) -> Result<Rhs> {
    let hyp = check_hypotheses(cfg)?;
    if !hyp.passed {
        return Err(Error::HypothesisFailed(hyp.failed.join(", ")));
    }
    let ops = opts.operators(cfg.grid)?;
    build_rhs_with(f, cfg, opts, &ops)
}

fn build_rhs_with(
    f: &InputFunction,
    cfg: &ExtensionConfig,
    opts: &PipelineOptions,
    ops: &Operators,
) -> Result<Rhs> {
    let grid = cfg.grid;
    let n = grid.complex_dim;
    f.validate(n)?;
    let h = grid.spacing();
    let r = cfg.fattening_radius;
    let stencil = CentralStencil::new(opts.stencil_order, h)?;
    let smear = stencil.reach() as f64 * h;
    let reach_limit = r + smear + 1e-12 * h;
    let g = cutoff_product(f, cfg);

    // E_r widened by the stencil must not wrap across the periodic seam, or
    // the pointwise stencil stops agreeing with the periodic multiplier.
    let seam = grid.half_width - cfg.obstacle.fattened_extent(r);
    if seam < smear {
        return Err(Error::SupportLeak(format!(
            "stencil reach {smear:.3e} exceeds the margin {seam:.3e} between E_r and the periodic seam"
        )));
    }
    // Stencil points of every active node must stay inside Omega.
    let tight = grid
        .map_points(|x| {
            if cfg.obstacle.distance(x) <= reach_limit {
                cfg.omega.inner_margin(x)
            } else {
                f64::INFINITY
            }
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if tight < smear {
        return Err(Error::SupportLeak(format!(
            "stencil reach {smear:.3e} exceeds the margin {tight:.3e} between E_r and the boundary of Omega"
        )));
    }

    let comps = (0..n)
        .map(|j| {
            let samples = grid.map_points(|x| {
                if cfg.obstacle.distance(x) <= reach_limit {
                    stencil.dbar_at(&g, x, j)
                } else {
                    Complex64::default()
                }
            });
            ScalarField::new(grid, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let v = FormField::from_components(grid, 1, comps)?;
    let cutoff_f = ScalarField::new(grid, grid.map_points(&g))?;

    let f_samples = grid.map_points(|x| {
        if cfg.omega.contains(x) && !cfg.obstacle.contains(x) {
            f.eval(x)
        } else {
            Complex64::default()
        }
    });
    if f_samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("f on Omega \\ E"));
    }
    let f_norm_sq = grid.cell_volume() * chunked_sum(&f_samples, |_, z| z.norm_sqr());

    let support = support_report(cfg, &v, smear);
    if !support.passed {
        return Err(Error::SupportLeak(format!(
            "d_E in [{:.4}, {:.4}] (allowed [{:.4}, {:.4}]), d_H up to {:.4} (allowed {:.4})",
            support.min_obstacle_distance,
            support.max_obstacle_distance,
            support.inner_bound,
            support.outer_bound,
            support.max_subspace_distance,
            support.tube_bound
        )));
    }

    let closedness = check_closed(ops, &v)?;
    if opts.enforce_gates && !(closedness <= CLOSEDNESS_GATE) {
        return Err(Error::NotClosed {
            closedness,
            gate: CLOSEDNESS_GATE,
        });
    }
    let zero_mode = zero_mode_fraction(ops, &v)?;
    let dist_sq = ScalarField::from_real_fn(grid, |x| cfg.subspace.distance(x).powi(2))?;
    let v_norm_sq = v.norm_sq();
    let v_dist_weighted = v.weighted_norm_sq(&dist_sq)?;
    let chi_sup = cfg.chi.sup_derivative();
    let slack = 1.0 + INEQUALITY_SLACK;
    let big_r = cfg.tube_radius;
    let checks = vec![
        Check::at_most("closedness", closedness, CLOSEDNESS_GATE),
        Check::at_most(
            "rhs_norm_bound",
            v_norm_sq,
            chi_sup * chi_sup / (r * r) * f_norm_sq * slack,
        ),
        Check::at_most(
            "rhs_distance_bound",
            v_dist_weighted,
            (big_r + r).powi(2) / (r * r) * chi_sup * chi_sup * f_norm_sq * slack,
        ),
    ];
    Ok(Rhs {
        v,
        cutoff_f,
        report: RhsReport {
            chi_derivative_sup: chi_sup,
            f_norm_sq,
            v_norm_sq,
            v_dist_weighted,
            closedness,
            zero_mode,
            support,
            checks,
        },
    })
}

fn support_report(cfg: &ExtensionConfig, v: &FormField, smear: f64) -> SupportReport {
    let grid = v.grid();
    let r = cfg.fattening_radius;
    let slack = 1e-12 * grid.spacing();
    let stats = grid.map_indices(|flat, idx| {
        if v.components().iter().all(|c| c.samples()[flat] == Complex64::default()) {
            return None;
        }
        let x: Vec<f64> = idx.iter().map(|&i| grid.coord(i)).collect();
        Some((cfg.obstacle.distance(&x), cfg.subspace.distance(&x)))
    });
    let mut rep = SupportReport {
        nodes: 0,
        smear,
        min_obstacle_distance: f64::INFINITY,
        max_obstacle_distance: 0.0,
        max_subspace_distance: 0.0,
        inner_bound: CutoffProfile::LOWER * r - smear,
        outer_bound: r + smear,
        tube_bound: cfg.tube_radius + r + smear,
        passed: true,
    };
    for (de, dh) in stats.into_iter().flatten() {
        rep.nodes += 1;
        rep.min_obstacle_distance = rep.min_obstacle_distance.min(de);
        rep.max_obstacle_distance = rep.max_obstacle_distance.max(de);
        rep.max_subspace_distance = rep.max_subspace_distance.max(dh);
    }
    rep.passed = rep.nodes == 0
        || (rep.min_obstacle_distance >= rep.inner_bound - slack
            && rep.max_obstacle_distance <= rep.outer_bound + slack
            && rep.max_subspace_distance <= rep.tube_bound + slack);
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    pub probe_nodes: usize,
    pub probe_max: f64,
    pub global_max: f64,
    /// `probe_max / global_max` (0 when `u` vanishes).
    pub ratio: f64,
}

/// Far-field region `{d_E >= 3r, d_H >= R + 2r}`.
fn far_mask(cfg: &ExtensionConfig) -> Vec<bool> {
    let r = cfg.fattening_radius;
    let rr = cfg.tube_radius + 2.0 * r;
    cfg.grid
        .map_points(|x| cfg.obstacle.distance(x) >= 3.0 * r && cfg.subspace.distance(x) >= rr)
}

/// Largest `|u|` on the probe region (far field inside the inner half-box)
/// relative to the largest `|u|` anywhere.
pub fn farfield_vanishing_check(u: &ScalarField, cfg: &ExtensionConfig) -> Result<FarFieldReport> {
    let grid = cfg.grid;
    if *u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let far = far_mask(cfg);
    let inner = grid.map_points(|x| grid.in_inner_half(x));
    let mut probe_nodes = 0;
    let mut probe_max: f64 = 0.0;
    for (i, z) in u.samples().iter().enumerate() {
        if far[i] && inner[i] {
            probe_nodes += 1;
            probe_max = probe_max.max(z.norm());
        }
    }
    if probe_nodes == 0 {
        return Err(Error::EmptyProbeRegion);
    }
    let global_max = u.max_abs();
    Ok(FarFieldReport {
        probe_nodes,
        probe_max,
        global_max,
        ratio: if global_max == 0.0 { 0.0 } else { probe_max / global_max },
    })
}

/// Parity class of a node: bit `a` is the parity of the index along axis `a`.
fn parity_class(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| (acc << 1) | (i & 1))
}

/// Subtracts the `dbar`-kernel element (one constant per parity class)
/// fitted on the far field outside the inner half-box. Returns the fitted
/// constants and the number of fit nodes.
fn remove_far_kernel(u: &mut ScalarField, cfg: &ExtensionConfig) -> (Vec<Complex64>, usize) {
    let grid = cfg.grid;
    let classes = 1usize << grid.real_dim();
    let far = far_mask(cfg);
    let tags = grid.map_indices(|flat, idx| {
        let mut x = [0.0f64; 16];
        for (a, &i) in idx.iter().enumerate() {
            x[a] = grid.coord(i);
        }
        if far[flat] && !grid.in_inner_half(&x[..idx.len()]) {
            Some(parity_class(idx))
        } else {
            None
        }
    });
    let mut sums = vec![Complex64::default(); classes];
    let mut counts = vec![0usize; classes];
    for (z, t) in u.samples().iter().zip(&tags) {
        if let Some(c) = t {
            sums[*c] += z;
            counts[*c] += 1;
        }
    }
    let fit_nodes = counts.iter().sum();
    let kernel: Vec<Complex64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { Complex64::default() } else { s / c as f64 })
        .collect();
    let parity = grid.map_indices(|_, idx| parity_class(idx));
    for (z, p) in u.samples_mut().iter_mut().zip(parity) {
        *z -= kernel[p];
    }
    (kernel, fit_nodes)
}

/// `||dbar F||` over nodes at least `2h` inside `Omega` whose stencil does
/// not cross the periodic seam, relative to `||F||_{L^2(Omega)}`.
pub fn holomorphy_check(ops: &Operators, extended: &ScalarField, cfg: &ExtensionConfig) -> Result<f64> {
    let grid = cfg.grid;
    if *ops.grid() != grid || *extended.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let reach = match ops.scheme() {
        DerivativeScheme::CentralDifference { order } => order / 2,
        DerivativeScheme::Spectral => 0,
    };
    let p = grid.points_per_axis;
    let h = grid.spacing();
    let inside = grid.map_indices(|_, idx| {
        let mut x = [0.0f64; 16];
        for (a, &i) in idx.iter().enumerate() {
            x[a] = grid.coord(i);
        }
        idx.iter().all(|&i| i >= reach && i + reach < p)
            && cfg.omega.inner_margin(&x[..idx.len()]) >= 2.0 * h
    });
    let omega = grid.map_points(|x| cfg.omega.contains(x));
    let df = ops.dbar_function(extended)?;
    let num: f64 = df
        .components()
        .iter()
        .map(|c| norm_sq_where(&grid, c.samples(), &inside))
        .sum();
    let den = norm_sq_where(&grid, extended.samples(), &omega);
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalBound {
    /// `||F||^2` over `Omega`.
    pub extended_norm_sq: f64,
    /// `||chi f||^2` over `Omega`.
    pub cutoff_f_norm_sq: f64,
    pub correction_norm_sq: f64,
    /// `2 ||chi f||^2 + 2 ||u||^2`.
    pub bound: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub input: InputFunction,
    pub grid: GridSpec,
    pub stencil_order: usize,
    pub hypotheses: HypothesisReport,
    /// Smallest `|denominator|` over `Omega` for rational inputs.
    pub denominator_margin: Option<f64>,
    pub rhs: RhsReport,
    /// Certificate of the far-field-normalized correction used in `F`.
    pub solve: SolveReport,
    /// Certificate of the minimal-norm correction.
    pub minimal_solve: SolveReport,
    pub kernel_constants: Vec<Complex64>,
    pub kernel_fit_nodes: usize,
    pub far_field: FarFieldReport,
    /// `||F - f||` over `Omega \ E_{2r}`, relative to `||f||_{Omega \ E}`.
    pub agreement_error: f64,
    /// `||F - f||` over `Omega \ E`, relative to `||f||_{Omega \ E}`.
    pub agreement_error_full: f64,
    /// `||F - f||_E / ||f||_E` against the known continuation.
    pub interior_error: Option<f64>,
    pub interior_nodes: usize,
    pub holomorphy_residual: f64,
    pub final_bound: FinalBound,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Result of [`extend`]: the extension `F`, the correction `u` and the report.
#[derive(Clone, Debug)]
pub struct Extension {
    pub extended: ScalarField,
    pub correction: ScalarField,
    pub report: ExtensionReport,
}

fn denominator_margin(f: &InputFunction, cfg: &ExtensionConfig) -> Result<Option<f64>> {
    if !matches!(f, InputFunction::Rational { .. }) {
        return Ok(None);
    }
    let grid = cfg.grid;
    let h = grid.spacing();
    let margin = grid
        .map_points(|x| {
            if cfg.omega.contains(x) || cfg.omega.inner_margin(x) > -h {
                f.denominator_modulus(x).unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            }
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(margin >= DENOMINATOR_FLOOR) {
        return Err(Error::InvalidFunction(format!(
            "denominator comes within {margin:.3e} of zero on Omega (floor {DENOMINATOR_FLOOR:.0e})"
        )));
    }
    Ok(Some(margin))
}

/// Runs the full construction `F = chi(d_E/r) f - u`.
pub fn extend(f: &InputFunction, cfg: &ExtensionConfig, opts: &PipelineOptions) -> Result<Extension> {
    let hypotheses = check_hypotheses(cfg)?;
    if !hypotheses.passed {
        return Err(Error::HypothesisFailed(hypotheses.failed.join(", ")));
    }
    f.validate(cfg.grid.complex_dim)?;
    let denominator_margin = denominator_margin(f, cfg)?;
    let grid = cfg.grid;
    let ops = opts.operators(grid)?;
    let rhs = build_rhs_with(f, cfg, opts, &ops)?;

    let minimal = if opts.enforce_gates {
        solve_minimal(&ops, &rhs.v)?
    } else {
        solve_least_squares(&ops, &rhs.v)?
    };
    let m = cfg.codim();
    // omega = (m-2)^2/4 d_H^{-2}
    let c = hardy_constant(m)?;
    let inv_omega = ScalarField::from_real_fn(grid, |x| cfg.subspace.distance(x).powi(2) / c)?;
    let minimal_solve = certify_estimates(&ops, &minimal, &rhs.v, &cfg.subspace, Some(&inv_omega))?;

    let mut correction = minimal.into_scalar()?;
    let (kernel_constants, kernel_fit_nodes) = remove_far_kernel(&mut correction, cfg);
    let u_form = FormField::from_scalar(correction.clone());
    let solve = certify_estimates(&ops, &u_form, &rhs.v, &cfg.subspace, Some(&inv_omega))?;
    let extended = rhs.cutoff_f.sub(&correction)?;

    let far_field = farfield_vanishing_check(&correction, cfg)?;
    let holomorphy_residual = holomorphy_check(&ops, &extended, cfg)?;

    let r = cfg.fattening_radius;
    let regions = grid.map_points(|x| {
        let in_omega = cfg.omega.contains(x);
        let de = cfg.obstacle.distance(x);
        let in_e = cfg.obstacle.contains(x);
        (in_omega, in_e, de > 2.0 * r)
    });
    let f_truth = grid.map_points(|x| f.eval(x));
    let diff: Vec<Complex64> = extended
        .samples()
        .iter()
        .zip(&f_truth)
        .map(|(a, b)| a - b)
        .collect();
    let omega_mask: Vec<bool> = regions.iter().map(|t| t.0).collect();
    let outside_e: Vec<bool> = regions.iter().map(|t| t.0 && !t.1).collect();
    let outside_e2r: Vec<bool> = regions.iter().map(|t| t.0 && t.2).collect();
    let in_e: Vec<bool> = regions.iter().map(|t| t.1).collect();
    let f_outside = norm_sq_where(&grid, &f_truth, &outside_e).sqrt();
    let relative = |num: f64, den: f64| if den == 0.0 { num } else { num / den };
    let agreement_error = relative(norm_sq_where(&grid, &diff, &outside_e2r).sqrt(), f_outside);
    let agreement_error_full = relative(norm_sq_where(&grid, &diff, &outside_e).sqrt(), f_outside);
    let interior_nodes = in_e.iter().filter(|&&b| b).count();
    let continuation_known = f_truth
        .iter()
        .zip(&in_e)
        .all(|(z, &e)| !e || (z.re.is_finite() && z.im.is_finite()));
    let interior_error = (interior_nodes > 0 && continuation_known).then(|| {
        relative(
            norm_sq_where(&grid, &diff, &in_e).sqrt(),
            norm_sq_where(&grid, &f_truth, &in_e).sqrt(),
        )
    });

    let extended_norm_sq = norm_sq_where(&grid, extended.samples(), &omega_mask);
    let cutoff_f_norm_sq = norm_sq_where(&grid, rhs.cutoff_f.samples(), &omega_mask);
    let correction_norm_sq = correction.norm_sq();
    let bound = 2.0 * cutoff_f_norm_sq + 2.0 * correction_norm_sq;
    let final_bound = FinalBound {
        extended_norm_sq,
        cutoff_f_norm_sq,
        correction_norm_sq,
        bound,
        margin: bound - extended_norm_sq,
    };

    let mut checks = rhs.report.checks.clone();
    checks.extend(solve.checks.iter().filter(|c| c.name != "closedness").cloned());
    checks.push(Check::at_most("agreement", agreement_error, opts.agreement_tol));
    if let Some(e) = interior_error {
        checks.push(Check::at_most("interior_recovery", e, opts.interior_tol));
    }
    checks.push(Check::at_most("holomorphy", holomorphy_residual, opts.holomorphy_tol));
    checks.push(Check::at_most("far_field", far_field.ratio, opts.far_field_tol));
    checks.push(Check::at_most(
        "final_bound",
        extended_norm_sq,
        bound * (1.0 + INEQUALITY_SLACK),
    ));
    let passed = all_passed(&checks);
    let report = ExtensionReport {
        input: f.clone(),
        grid,
        stencil_order: opts.stencil_order,
        hypotheses,
        denominator_margin,
        rhs: rhs.report,
        solve,
        minimal_solve,
        kernel_constants,
        kernel_fit_nodes,
        far_field,
        agreement_error,
        agreement_error_full,
        interior_error,
        interior_nodes,
        holomorphy_residual,
        final_bound,
        checks,
        passed,
    };
    Ok(Extension {
        extended,
        correction,
        report,
    })
}
