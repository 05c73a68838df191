use hartogs_core::extension::{
    build_rhs, extend, farfield_vanishing_check, holomorphy_check, reference_config, InputFunction,
    Monomial, PipelineOptions, Polynomial,
};
use hartogs_core::geometry::{AffineSubspace, DomainSpec, ExtensionConfig, ObstacleSet};
use hartogs_core::{Error, GridSpec, ScalarField};
use num_complex::Complex64;
use proptest::prelude::*;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn z1z2() -> InputFunction {
    InputFunction::Polynomial(Polynomial::monomial(cx(1.0, 0.0), vec![1, 1]))
}

fn poly(terms: &[(Complex64, [u32; 2])]) -> InputFunction {
    InputFunction::Polynomial(Polynomial {
        terms: terms
            .iter()
            .map(|(c, p)| Monomial {
                coeff: *c,
                powers: p.to_vec(),
            })
            .collect(),
    })
}

#[test]
fn reference_scenario_recovers_z1z2_inside_e() {
    let cfg = reference_config(32).unwrap();
    let ext = extend(&z1z2(), &cfg, &PipelineOptions::default()).unwrap();
    let rep = &ext.report;
    assert!(rep.passed, "{:?}", rep.checks);
    assert!(rep.interior_error.unwrap() <= 1e-3);
    assert!(rep.agreement_error <= 1e-3);
    assert!(rep.holomorphy_residual <= 1e-3);
    assert!(rep.far_field.ratio <= 1e-2);
    assert!(rep.solve.residual_rel <= 1e-10);
    assert!(rep.solve.passed && rep.minimal_solve.passed);
    assert!(rep.final_bound.margin >= 0.0);
    assert!(rep.interior_nodes > 1000);
    for v in [
        rep.rhs.f_norm_sq,
        rep.rhs.v_norm_sq,
        rep.rhs.v_dist_weighted,
        rep.final_bound.extended_norm_sq,
        rep.final_bound.correction_norm_sq,
    ] {
        assert!(v >= 0.0);
    }
    // the far-field correction adds a kernel element to the minimal one
    assert!(rep.minimal_solve.norms.u_sq <= rep.solve.norms.u_sq * (1.0 + 1e-12));
    assert_eq!(rep.kernel_constants.len(), 16);
}

#[test]
fn constant_input_is_reproduced_to_solver_floor() {
    let cfg = reference_config(24).unwrap();
    let c = cx(1.5, -0.5);
    let ext = extend(&InputFunction::constant(c, 2), &cfg, &PipelineOptions::default()).unwrap();
    assert!(ext.report.passed);
    assert!(ext.report.holomorphy_residual <= 1e-8);
    let omega = cfg.grid.map_points(|x| cfg.omega.contains(x));
    let worst = ext
        .extended
        .samples()
        .iter()
        .zip(&omega)
        .filter(|(_, &inside)| inside)
        .map(|(z, _)| (z - c).norm())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3 * c.norm(), "{worst}");
}

#[test]
fn rational_input_reproduces_the_hartogs_phenomenon() {
    let cfg = reference_config(32).unwrap();
    let f = InputFunction::simple_pole(0, cx(5.0, 0.0), 2);
    let ext = extend(&f, &cfg, &PipelineOptions::default()).unwrap();
    assert!(ext.report.passed, "{:?}", ext.report.checks);
    assert!(ext.report.interior_error.unwrap() <= 1e-3);
    assert!(ext.report.denominator_margin.unwrap() >= 2.9);
}

#[test]
fn v_lives_in_the_cutoff_shell() {
    // the second-order stencil smears by one cell
    let cfg = reference_config(32).unwrap();
    let opts = PipelineOptions {
        stencil_order: 2,
        ..PipelineOptions::default()
    };
    let rhs = build_rhs(&InputFunction::constant(cx(1.0, 0.0), 2), &cfg, &opts).unwrap();
    let h = cfg.grid.spacing();
    let r = cfg.fattening_radius;
    assert!(rhs.v.norm_sq() > 0.0);
    let d_e = cfg.grid.map_points(|x| cfg.obstacle.distance(x));
    for c in rhs.v.components() {
        for (z, d) in c.samples().iter().zip(&d_e) {
            if *d < r / 2.0 - h || *d > r + h {
                assert_eq!(*z, Complex64::default());
            }
        }
    }
    assert!(rhs.report.support.passed);
    assert!(rhs.report.support.min_obstacle_distance >= 0.125 - h - 1e-12);
    assert!(rhs.report.support.max_obstacle_distance <= 0.25 + h + 1e-12);
    // order 8 smears by the stencil reach
    let rhs8 = build_rhs(&z1z2(), &cfg, &PipelineOptions::default()).unwrap();
    assert!(rhs8.report.support.max_obstacle_distance <= r + 4.0 * h + 1e-12);
    assert!(rhs8.report.support.max_subspace_distance <= cfg.tube_radius + r + 4.0 * h);
}

#[test]
fn rhs_bounds_hold_with_margin() {
    let cfg = reference_config(24).unwrap();
    let f = poly(&[(cx(1.0, 0.0), [0, 0]), (cx(0.0, 2.0), [2, 1])]);
    let rhs = build_rhs(&f, &cfg, &PipelineOptions::default()).unwrap();
    for c in &rhs.report.checks {
        assert!(c.passed, "{c:?}");
        assert!(c.margin > 0.0);
    }
    assert_eq!(rhs.report.chi_derivative_sup, 3.75);
}

#[test]
fn zero_input_gives_zero_everything() {
    let cfg = reference_config(16).unwrap();
    let f = InputFunction::constant(Complex64::default(), 2);
    let ext = extend(&f, &cfg, &PipelineOptions::default()).unwrap();
    assert_eq!(ext.report.rhs.v_norm_sq, 0.0);
    assert_eq!(ext.correction.max_abs(), 0.0);
    assert_eq!(ext.extended.max_abs(), 0.0);
    assert_eq!(ext.report.far_field.ratio, 0.0);
    let far = farfield_vanishing_check(&ext.correction, &cfg).unwrap();
    assert!(far.probe_nodes > 0);
}

#[test]
fn pipeline_is_linear_in_f() {
    let cfg = reference_config(16).unwrap();
    let opts = PipelineOptions::default();
    let (a, b) = (cx(0.3, -1.1), cx(2.0, 0.5));
    let f1 = [(cx(1.0, 0.0), [1, 1])];
    let f2 = [(cx(1.0, 0.0), [0, 0]), (cx(-0.5, 0.25), [2, 0])];
    let combo: Vec<(Complex64, [u32; 2])> = f1
        .iter()
        .map(|(c, p)| (a * c, *p))
        .chain(f2.iter().map(|(c, p)| (b * c, *p)))
        .collect();
    let e1 = extend(&poly(&f1), &cfg, &opts).unwrap().extended;
    let e2 = extend(&poly(&f2), &cfg, &opts).unwrap().extended;
    let e = extend(&poly(&combo), &cfg, &opts).unwrap().extended;
    let expect = e1.scale(a).add(&e2.scale(b)).unwrap();
    let err = e.sub(&expect).unwrap().norm_l2() / expect.norm_l2();
    assert!(err <= 1e-9, "{err}");
}

#[test]
fn corrupted_extension_fails_holomorphy() {
    let cfg = reference_config(24).unwrap();
    let opts = PipelineOptions::default();
    let ext = extend(&z1z2(), &cfg, &opts).unwrap();
    let ops = opts.operators(cfg.grid).unwrap();
    let clean = holomorphy_check(&ops, &ext.extended, &cfg).unwrap();
    let bump = ScalarField::from_real_fn(cfg.grid, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
    let bad = holomorphy_check(&ops, &ext.extended.add(&bump).unwrap(), &cfg).unwrap();
    assert!(bad >= 1e3 * clean.max(1e-16), "{clean} -> {bad}");
    assert!(bad > 1e2 * opts.holomorphy_tol, "{bad}");
}

#[test]
fn single_variable_is_rejected() {
    let cfg = ExtensionConfig {
        grid: GridSpec::new(1, 16, 2.0).unwrap(),
        omega: DomainSpec::Ball {
            center: vec![0.0; 2],
            radius: 4.0,
        },
        obstacle: ObstacleSet::single(vec![0.0; 2], 0.5).unwrap(),
        subspace: AffineSubspace::point(vec![0.0; 2]).unwrap(),
        fattening_radius: 0.25,
        tube_radius: 1.0,
        chi: Default::default(),
    };
    let f = InputFunction::constant(cx(1.0, 0.0), 1);
    assert!(matches!(
        extend(&f, &cfg, &PipelineOptions::default()),
        Err(Error::TooFewComplexDims(1))
    ));
}

#[test]
fn broken_hypotheses_fail_before_solving() {
    let mut cfg = reference_config(16).unwrap();
    cfg.fattening_radius = 3.6;
    match extend(&z1z2(), &cfg, &PipelineOptions::default()) {
        Err(Error::HypothesisFailed(s)) => assert!(s.contains("fattening")),
        other => panic!("{other:?}"),
    }
    let mut cfg = reference_config(16).unwrap();
    cfg.tube_radius = 0.4;
    match build_rhs(&z1z2(), &cfg, &PipelineOptions::default()) {
        Err(Error::HypothesisFailed(s)) => assert!(s.contains("tube")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn pole_inside_omega_is_rejected() {
    let cfg = reference_config(16).unwrap();
    let f = InputFunction::simple_pole(1, cx(1.0, 0.0), 2);
    assert!(matches!(
        extend(&f, &cfg, &PipelineOptions::default()),
        Err(Error::InvalidFunction(_))
    ));
}

#[test]
fn coarse_grid_leaks_out_of_omega() {
    let mut cfg = reference_config(16).unwrap();
    cfg.omega = DomainSpec::Ball {
        center: vec![0.0; 4],
        radius: 1.5,
    };
    assert!(matches!(
        build_rhs(&z1z2(), &cfg, &PipelineOptions::default()),
        Err(Error::SupportLeak(_))
    ));
}

#[test]
fn stencil_across_the_seam_is_rejected() {
    let mut cfg = reference_config(16).unwrap();
    cfg.obstacle = ObstacleSet::single(vec![0.3, 0.0, 0.0, 0.0], 0.6).unwrap();
    match build_rhs(&z1z2(), &cfg, &PipelineOptions::default()) {
        Err(Error::SupportLeak(s)) => assert!(s.contains("seam")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wide_tube_leaves_no_probe_region() {
    let mut cfg = reference_config(16).unwrap();
    cfg.tube_radius = 2.5;
    assert!(matches!(
        extend(&z1z2(), &cfg, &PipelineOptions::default()),
        Err(Error::EmptyProbeRegion)
    ));
}

#[test]
fn input_function_round_trips_through_json() {
    let text = r#"{"kind": "rational", "params": {
        "numerator": {"terms": [{"coeff": [1, 0], "powers": [0, 0]}]},
        "denominator": {"terms": [{"coeff": [1, 0], "powers": [1, 0]}, {"coeff": [-5, 0], "powers": [0, 0]}]}
    }}"#;
    let f: InputFunction = serde_json::from_str(text).unwrap();
    assert_eq!(f, InputFunction::simple_pole(0, cx(5.0, 0.0), 2));
    let x = [0.3, -0.2, 1.0, 0.5];
    let expect = 1.0 / (cx(0.3, -0.2) - 5.0);
    assert!((f.eval(&x) - expect).norm() < 1e-15);
    let back: InputFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_polynomials_extend_across_random_balls(
        c in prop::collection::vec(-1.0f64..1.0, 6),
        shift in prop::collection::vec(-0.15f64..0.15, 4),
        rad in 0.35f64..0.55,
    ) {
        let mut cfg = reference_config(16).unwrap();
        cfg.obstacle = ObstacleSet::single(shift, rad).unwrap();
        let f = poly(&[
            (cx(c[0], c[1]), [0, 0]),
            (cx(c[2], c[3]), [1, 0]),
            (cx(c[4], c[5]), [1, 2]),
        ]);
        let ext = extend(&f, &cfg, &PipelineOptions::default()).unwrap();
        let rep = &ext.report;
        prop_assert!(rep.rhs.support.passed);
        prop_assert!(rep.final_bound.margin >= 0.0);
        prop_assert!(rep.agreement_error <= 1e-3);
        prop_assert!(rep.interior_error.unwrap() <= 1e-3);
        prop_assert!(rep.solve.norms.u_sq >= 0.0 && rep.rhs.v_norm_sq >= 0.0);
    }
}
