//! The four subcommands. Each returns a serializable report and whether
//! every asserted check passed; I/O and exit codes live in `main`.

use hartogs_core::extension::{extend, Extension};
use hartogs_core::geometry::{check_hypotheses, HypothesisReport};
use hartogs_core::hardy::{
    evaluate_family, hardy_constant, off_subspace_points, rayleigh_quotient, subharmonicity_check,
    witness_identity_check, HardyReport, RayleighQuotient, SubharmonicityReport, TestFunction,
    TestFunctionFamily, WitnessReport,
};
use hartogs_core::report::{all_passed, Check};
use hartogs_core::solver::{certify_estimates, solve_minimal, SolveReport};
use hartogs_core::{FormField, Operators, Result, ScalarField};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Datum, ExperimentConfig};
use crate::manifest::Recorder;

/// Largest accepted error of the witness identity.
pub const WITNESS_TOL: f64 = 1e-6;
/// Largest accepted `|Lap psi| d_H^m` at the witness points.
pub const HARMONIC_TOL: f64 = 1e-6;
/// Accepted distance of the centered Gaussian's quotient from its closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-3;

/// A named field to dump when `--dump-fields` is set.
pub enum Dump {
    Scalar(String, ScalarField),
    Form(String, FormField),
}

pub struct Outcome<R> {
    pub report: R,
    pub passed: bool,
    pub dumps: Vec<Dump>,
}

pub fn check_assumptions(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Outcome<HypothesisReport>> {
    let ext = cfg.extension_config()?;
    rec.stage("hypotheses");
    let report = check_hypotheses(&ext)?;
    Ok(Outcome {
        passed: report.passed,
        report,
        dumps: Vec::new(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormCheck {
    pub width: f64,
    pub expected: f64,
    pub quotient: RayleighQuotient,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyRun {
    pub codim: usize,
    pub constant: f64,
    pub families: Vec<HardyReport>,
    pub closed_form: Option<ClosedFormCheck>,
    pub witness: WitnessReport,
    pub harmonicity: SubharmonicityReport,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn hardy(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Outcome<HardyRun>> {
    let sec = cfg.hardy_section()?;
    let h = &sec.subspace;
    let grid = cfg.grid;
    let m = h.codim();
    let constant = hardy_constant(m)?;
    if h.ambient_dim() != grid.real_dim() {
        return Err(hartogs_core::Error::DimensionMismatch {
            expected: grid.real_dim(),
            got: h.ambient_dim(),
        });
    }
    let mut checks = Vec::new();
    let mut families = Vec::new();
    for (i, spec) in sec.families.iter().enumerate() {
        rec.stage(&format!("family_{i}"));
        let seed = spec.seed.unwrap_or(cfg.run.seed + i as u64);
        let fam = TestFunctionFamily::standard(spec.kind, spec.count, seed, grid.half_width);
        let rep = evaluate_family(&fam, &grid, h)?;
        checks.push(Check::at_least(
            format!("family_{i}_min_quotient"),
            rep.min_quotient,
            rep.constant * (1.0 - rep.slack),
        ));
        families.push(rep);
    }
    let closed_form = if sec.closed_form {
        rec.stage("closed_form");
        // Gaussian centered on H: quotient N (m - 2) / 4 for every width
        let width = grid.half_width / 8.0;
        let phi = TestFunction::gaussian(h.base_point().to_vec(), width).sample(&grid, h)?;
        let quotient = rayleigh_quotient(&phi, h)?;
        let expected = (grid.real_dim() * (m - 2)) as f64 / 4.0;
        let error = (quotient.quotient - expected).abs();
        checks.push(Check::at_most("closed_form", error, CLOSED_FORM_TOL));
        Some(ClosedFormCheck {
            width,
            expected,
            quotient,
            error,
        })
    } else {
        None
    };
    rec.stage("witness");
    let points = off_subspace_points(
        h,
        sec.witness_points,
        sec.witness_min_distance,
        grid.half_width,
        cfg.run.seed,
    )?;
    let witness = witness_identity_check(h, &points, sec.witness_min_distance)?;
    let harmonicity = subharmonicity_check(h, &points, sec.witness_min_distance)?;
    checks.push(Check::at_most("witness_identity", witness.max_relative_error, WITNESS_TOL));
    checks.push(Check::at_most(
        "witness_harmonic",
        harmonicity.max_scaled_laplacian,
        HARMONIC_TOL,
    ));
    let passed = all_passed(&checks);
    Ok(Outcome {
        report: HardyRun {
            codim: m,
            constant,
            families,
            closed_form,
            witness,
            harmonicity,
            checks,
            passed,
        },
        passed,
        dumps: Vec::new(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveRun {
    pub datum: Datum,
    pub report: SolveReport,
    /// `||u - (g - P g)|| / ||g - P g||` where `P` projects onto the kernel
    /// of `dbar`, when `v = dbar g`.
    pub exact_error: Option<f64>,
    pub passed: bool,
}

fn bump(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let r2 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (radius * radius);
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

pub fn solve(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Outcome<SolveRun>> {
    let sec = cfg.solve_section()?;
    let grid = cfg.grid;
    let ops = Operators::new(grid, sec.scheme)?;
    let c = hardy_constant(sec.subspace.codim())?;
    rec.stage("datum");
    let check_center = |center: &[f64]| {
        if center.len() != grid.real_dim() {
            Err(hartogs_core::Error::DimensionMismatch {
                expected: grid.real_dim(),
                got: center.len(),
            })
        } else {
            Ok(())
        }
    };
    let (v, g) = match &sec.datum {
        Datum::DbarBump { center, radius } => {
            check_center(center)?;
            let g = ScalarField::from_real_fn(grid, |x| bump(x, center, *radius))?;
            (ops.dbar_function(&g)?, Some(g))
        }
        Datum::DbarBandLimited { max_wavenumber } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
            let g = ops.random_band_limited(*max_wavenumber, &mut rng);
            (ops.dbar_function(&g)?, Some(g))
        }
        Datum::Bump {
            center,
            radius,
            component,
        } => {
            check_center(center)?;
            let mut v = FormField::zeros(grid, 1)?;
            let slot = v.components_mut().get_mut(*component).ok_or_else(|| {
                hartogs_core::Error::Config(format!("component {component} out of range"))
            })?;
            *slot = ScalarField::from_real_fn(grid, |x| bump(x, center, *radius))?;
            (v, None)
        }
    };
    rec.stage("solve");
    let u = solve_minimal(&ops, &v)?;
    rec.stage("certify");
    let inv_omega = ScalarField::from_real_fn(grid, |x| sec.subspace.distance(x).powi(2) / c)?;
    let report = certify_estimates(&ops, &u, &v, &sec.subspace, Some(&inv_omega))?;
    let exact_error = match g {
        Some(g) => {
            // g minus its kernel part is the minimal solution
            let spec = ops.forward(&g)?;
            let sym = ops.symbol();
            let projected = ops.inverse(ops.apply_multiplier(&spec, |idx| {
                if sym.is_kernel_mode(idx) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }));
            let us = u.components()[0].sub(&projected)?;
            let den = projected.norm_l2();
            Some(if den == 0.0 { us.norm_l2() } else { us.norm_l2() / den })
        }
        None => None,
    };
    let passed = report.passed;
    let dumps = vec![Dump::Form("v".into(), v), Dump::Form("u".into(), u)];
    Ok(Outcome {
        report: SolveRun {
            datum: sec.datum.clone(),
            report,
            exact_error,
            passed,
        },
        passed,
        dumps,
    })
}

pub fn extend_cmd(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Outcome<hartogs_core::extension::ExtensionReport>> {
    let ext_cfg = cfg.extension_config()?;
    let f = cfg.input_function()?;
    rec.stage("extend");
    let Extension {
        extended,
        correction,
        report,
    } = extend(f, &ext_cfg, &cfg.pipeline)?;
    Ok(Outcome {
        passed: report.passed,
        report,
        dumps: vec![
            Dump::Scalar("extended".into(), extended),
            Dump::Scalar("correction".into(), correction),
        ],
    })
}
