//! Minimal-norm solutions of `dbar u = v` on the periodic grid and
//! certification of the weighted L^2 estimates they satisfy.
//!
//! For a closed (0,q)-form `v` with no content on the kernel modes of the
//! box operator, `u = theta box^{-1} v` solves `dbar u = v` and is orthogonal
//! to `ker dbar`, hence has least norm. Every operator involved is a Fourier
//! multiplier, so the solve is one forward transform per component, a
//! per-mode linear combination, and one inverse transform.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineSubspace;
use crate::grid::{chunked_sum, FormField, Operators, ScalarField};
use crate::hardy::hardy_constant;
use crate::report::{all_passed, Check};

/// Largest admissible `||dbar v|| / ||v||`.
pub const CLOSEDNESS_GATE: f64 = 1e-8;
/// Largest admissible relative weight of `v` on kernel modes.
pub const ZERO_MODE_GATE: f64 = 1e-10;
/// Largest accepted `||dbar u - v|| / ||v||`.
pub const RESIDUAL_GATE: f64 = 1e-10;
/// Relative slack on the certified inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-6;

/// `||dbar v|| / max(||v||, tiny)`; zero for top-degree forms.
pub fn check_closed(ops: &Operators, v: &FormField) -> Result<f64> {
    if v.degree() >= ops.grid().complex_dim {
        return Ok(0.0);
    }
    let dv = ops.dbar(v)?;
    Ok(dv.norm_l2() / v.norm_l2().max(f64::MIN_POSITIVE))
}

/// Relative L^2 weight of `v` on modes where the box symbol vanishes.
pub fn zero_mode_fraction(ops: &Operators, v: &FormField) -> Result<f64> {
    let mut kernel = 0.0;
    let mut total = 0.0;
    let sym = ops.symbol();
    for c in v.components() {
        let hat = ops.forward(c)?;
        let k = ops
            .grid()
            .map_indices(|i, idx| if sym.is_kernel_mode(idx) { hat[i].norm_sqr() } else { 0.0 });
        kernel += chunked_sum(&k, |_, x| *x);
        total += chunked_sum(&hat, |_, x| x.norm_sqr());
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((kernel / total).sqrt())
}

/// The least-squares minimal-norm solution `theta box^{-1} v`, without
/// checking solvability. Kernel modes are dropped.
pub fn solve_least_squares(ops: &Operators, v: &FormField) -> Result<FormField> {
    let q = v.degree();
    if q == 0 {
        return Err(Error::Degree {
            degree: 0,
            n: ops.grid().complex_dim,
            op: "solve",
        });
    }
    if *v.grid() != *ops.grid() {
        return Err(Error::GridMismatch);
    }
    let sym = ops.symbol();
    let hat: Vec<Vec<Complex64>> = v
        .components()
        .iter()
        .map(|c| {
            let h = ops.forward(c)?;
            Ok(ops.apply_multiplier(&h, |idx| {
                let b = sym.box_symbol(idx);
                if b == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(1.0 / b, 0.0)
                }
            }))
        })
        .collect::<Result<_>>()?;
    let comps = ops
        .adjoint_hat(&hat, q)
        .into_iter()
        .map(|s| ops.inverse(s))
        .collect();
    FormField::from_components(*ops.grid(), q - 1, comps)
}

/// Minimal-norm solution of `dbar u = v`, after checking that `v` is closed
/// and has no kernel content.
pub fn solve_minimal(ops: &Operators, v: &FormField) -> Result<FormField> {
    if v.degree() == 0 {
        return Err(Error::Degree {
            degree: 0,
            n: ops.grid().complex_dim,
            op: "solve",
        });
    }
    if v.norm_l2() == 0.0 {
        return FormField::zeros(*ops.grid(), v.degree() - 1);
    }
    let closedness = check_closed(ops, v)?;
    if !(closedness <= CLOSEDNESS_GATE) {
        return Err(Error::NotClosed {
            closedness,
            gate: CLOSEDNESS_GATE,
        });
    }
    let relative = zero_mode_fraction(ops, v)?;
    if !(relative <= ZERO_MODE_GATE) {
        return Err(Error::IncompatibleZeroMode {
            relative,
            gate: ZERO_MODE_GATE,
        });
    }
    solve_least_squares(ops, v)
}

/// `||dbar u - v|| / ||v||` (0 when both vanish).
pub fn residual(ops: &Operators, u: &FormField, v: &FormField) -> Result<f64> {
    let diff = ops.dbar(u)?.sub(v)?.norm_l2();
    let nv = v.norm_l2();
    Ok(if nv == 0.0 { diff } else { diff / nv })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveNorms {
    pub u_sq: f64,
    pub v_sq: f64,
    /// `int |v|^2 d_H^2`.
    pub v_dist_weighted: f64,
    /// `int |v|^2 / omega`, when a reciprocal weight is supplied.
    pub v_over_omega: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateMargins {
    /// `4 int |v|^2 / omega - ||u||^2`.
    pub weighted: Option<f64>,
    /// `16/(m-2)^2 int |v|^2 d_H^2 - ||u||^2`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub degree: usize,
    pub residual_rel: f64,
    pub closedness_rel: f64,
    pub zero_mode_rel: f64,
    pub codim: usize,
    /// `16 / (m-2)^2`.
    pub distance_constant: f64,
    pub norms: SolveNorms,
    pub margins: EstimateMargins,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Residual, closedness and the two weighted L^2 bounds for a solution `u`
/// of `dbar u = v`:
///
/// * `||u||^2 <= 16/(m-2)^2 int |v|^2 d_H^2`
/// * `||u||^2 <= 4 int |v|^2 / omega` when `inv_omega = 1/omega` is given.
pub fn certify_estimates(
    ops: &Operators,
    u: &FormField,
    v: &FormField,
    subspace: &AffineSubspace,
    inv_omega: Option<&ScalarField>,
) -> Result<SolveReport> {
    let grid = *ops.grid();
    if *u.grid() != grid || *v.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if subspace.ambient_dim() != grid.real_dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.real_dim(),
            got: subspace.ambient_dim(),
        });
    }
    let m = subspace.codim();
    let distance_constant = 4.0 / hardy_constant(m)?;
    let residual_rel = residual(ops, u, v)?;
    let closedness_rel = check_closed(ops, v)?;
    let zero_mode_rel = zero_mode_fraction(ops, v)?;
    let dist_sq = ScalarField::from_real_fn(grid, |x| subspace.distance(x).powi(2))?;
    let u_sq = u.norm_sq();
    let v_sq = v.norm_sq();
    let v_dist_weighted = v.weighted_norm_sq(&dist_sq)?;
    let v_over_omega = inv_omega.map(|w| v.weighted_norm_sq(w)).transpose()?;

    let slack = 1.0 + INEQUALITY_SLACK;
    let mut checks = vec![
        Check::at_most("residual", residual_rel, RESIDUAL_GATE),
        Check::at_most("closedness", closedness_rel, CLOSEDNESS_GATE),
        Check::at_most("zero_mode", zero_mode_rel, ZERO_MODE_GATE),
        Check::at_most(
            "distance_estimate",
            u_sq,
            distance_constant * v_dist_weighted * slack,
        ),
    ];
    if let Some(w) = v_over_omega {
        checks.push(Check::at_most("weighted_estimate", u_sq, 4.0 * w * slack));
    }
    Ok(SolveReport {
        degree: v.degree(),
        residual_rel,
        closedness_rel,
        zero_mode_rel,
        codim: m,
        distance_constant,
        margins: EstimateMargins {
            weighted: v_over_omega.map(|w| 4.0 * w - u_sq),
            distance: distance_constant * v_dist_weighted - u_sq,
        },
        norms: SolveNorms {
            u_sq,
            v_sq,
            v_dist_weighted,
            v_over_omega,
        },
        passed: all_passed(&checks),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub codim: usize,
    /// `int |u|^2 omega` with `omega = (m-2)^2/4 d_H^{-2}` on `d_H >= gap`.
    pub weighted_norm_sq: f64,
    pub dbar_norm_sq: f64,
    pub adjoint_norm_sq: f64,
    /// `4 (||dbar u||^2 + ||theta u||^2)`.
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    /// Smallest `d_H` over nodes where `u` is nonzero.
    pub support_distance: f64,
}

/// Checks `int |u|^2 omega <= 4 (||dbar u||^2 + ||theta u||^2)` for a form
/// supported at distance at least `gap` from `H`, with
/// `omega = (m-2)^2/4 d_H^{-2}` restricted to `d_H >= gap`.
pub fn apriori_inequality_check(
    ops: &Operators,
    u: &FormField,
    subspace: &AffineSubspace,
    gap: f64,
) -> Result<AprioriReport> {
    let grid = *ops.grid();
    if *u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let m = subspace.codim();
    let c = hardy_constant(m)?;
    let dist = grid.map_points(|x| subspace.distance(x));
    let mut support_distance = f64::INFINITY;
    for comp in u.components() {
        for (v, d) in comp.samples().iter().zip(&dist) {
            if *v != Complex64::default() {
                support_distance = support_distance.min(*d);
            }
        }
    }
    if support_distance < gap {
        return Err(Error::TooCloseToSubspace {
            distance: support_distance,
            required: gap,
        });
    }
    let omega = ScalarField::new(
        grid,
        dist.iter()
            .map(|&d| Complex64::new(if d >= gap { c / (d * d) } else { 0.0 }, 0.0))
            .collect(),
    )?;
    let lhs = u.weighted_norm_sq(&omega)?;
    let dbar_norm_sq = if u.degree() < grid.complex_dim {
        ops.dbar(u)?.norm_sq()
    } else {
        0.0
    };
    let adjoint_norm_sq = if u.degree() > 0 {
        ops.dbar_adjoint(u)?.norm_sq()
    } else {
        0.0
    };
    let bound = 4.0 * (dbar_norm_sq + adjoint_norm_sq);
    Ok(AprioriReport {
        codim: m,
        weighted_norm_sq: lhs,
        dbar_norm_sq,
        adjoint_norm_sq,
        bound,
        margin: bound - lhs,
        passed: lhs <= bound * (1.0 + INEQUALITY_SLACK),
        support_distance,
    })
}
