use hartogs_core::geometry::AffineSubspace;
use hartogs_core::hardy::{
    evaluate_family, exclusion_mask, hardy_constant, rayleigh_quotient, subharmonicity_check,
    verify_hardy, witness_identity_check, FamilyKind, SingularWeight, TestFunction,
    TestFunctionFamily,
};
use hartogs_core::{Error, GridSpec, ScalarField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point_h() -> AffineSubspace {
    AffineSubspace::point(vec![0.0; 4]).unwrap()
}

fn line_h() -> AffineSubspace {
    AffineSubspace::coordinate(vec![0.0; 4], &[3]).unwrap()
}

fn gaussian(grid: &GridSpec, center: Vec<f64>, width: f64) -> ScalarField {
    TestFunction::gaussian(center, width).sample(grid, &point_h()).unwrap()
}

#[test]
fn gaussian_at_origin_matches_closed_form() {
    // numerator 2 pi^2; denominators pi^2 (m = 4) and 2 pi^2 (m = 3)
    let g = GridSpec::new(2, 32, 8.0).unwrap();
    let phi = gaussian(&g, vec![0.0; 4], 1.0);
    let q4 = rayleigh_quotient(&phi, &point_h()).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((q4.numerator - 2.0 * pi2).abs() < 1e-10 * pi2);
    assert!(q4.corrected);
    assert!((q4.quotient - 2.0).abs() < 1e-3, "{q4:?}");
    assert!((q4.denominator - pi2).abs() < 1e-3 * pi2);
    assert_eq!(q4.excluded_nodes, 1);
    let q3 = rayleigh_quotient(&phi, &line_h()).unwrap();
    assert!((q3.quotient - 1.0).abs() < 1e-3, "{q3:?}");
    assert_eq!(q3.excluded_nodes, 32);
}

#[test]
fn quotient_is_scale_invariant() {
    let g = GridSpec::new(2, 16, 8.0).unwrap();
    let phi = gaussian(&g, vec![0.5, 0.0, -1.0, 0.0], 1.3);
    let a = rayleigh_quotient(&phi, &line_h()).unwrap();
    for c in [-3.0, 1e-3, 250.0] {
        let b = rayleigh_quotient(&phi.scale(Complex64::new(c, 0.0)), &line_h()).unwrap();
        assert!((a.quotient - b.quotient).abs() <= 1e-12 * a.quotient);
        assert!((a.quotient_raw - b.quotient_raw).abs() <= 1e-12 * a.quotient_raw);
    }
}

#[test]
fn quotient_is_invariant_under_translation_along_h() {
    let g = GridSpec::new(2, 24, 8.0).unwrap();
    let h = g.spacing();
    let q = |shift: f64| {
        rayleigh_quotient(&gaussian(&g, vec![0.5, 0.0, -1.0, shift], 0.9), &line_h())
            .unwrap()
            .quotient
    };
    let a = q(0.0);
    // lattice shifts differ only by the periodic tail
    assert!((a - q(2.0 * h)).abs() <= 1e-9 * a);
    assert!((a - q(0.37)).abs() <= 1e-3 * a);
}

#[test]
fn inequality_holds_across_seeds() {
    let g = GridSpec::new(2, 24, 8.0).unwrap();
    for h in [line_h(), point_h()] {
        let bound = hardy_constant(h.codim()).unwrap() * 0.99;
        for seed in [1u64, 2, 3] {
            for kind in [FamilyKind::Bump, FamilyKind::Gaussian] {
                let fam = TestFunctionFamily::standard(kind, 12, seed, 8.0);
                let rep = verify_hardy(&fam, &g, &h).unwrap();
                assert!(rep.passed);
                assert!(rep.min_quotient >= bound);
                assert_eq!(rep.records.len(), 12);
                assert!(rep.records.iter().all(|r| r.quotient.numerator >= 0.0 && r.quotient.denominator >= 0.0));
            }
        }
    }
}

#[test]
fn radial_profiles_stay_above_the_constant() {
    let g = GridSpec::new(2, 24, 8.0).unwrap();
    for h in [line_h(), point_h()] {
        let fam = TestFunctionFamily::standard(FamilyKind::RadialProfile, 8, 5, 8.0);
        let rep = evaluate_family(&fam, &g, &h).unwrap();
        assert!(rep.passed, "min {}", rep.min_quotient);
        for r in &rep.records {
            assert!(h.distance(&r.member.center) < 1e-12);
        }
    }
}

#[test]
fn families_are_deterministic() {
    let g = GridSpec::new(2, 16, 8.0).unwrap();
    let fam = TestFunctionFamily::standard(FamilyKind::Gaussian, 4, 9, 8.0);
    let a = evaluate_family(&fam, &g, &point_h()).unwrap();
    let b = evaluate_family(&fam, &g, &point_h()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn family_members_respect_support_rules() {
    let g = GridSpec::new(2, 16, 8.0).unwrap();
    let mut fam = TestFunctionFamily::standard(FamilyKind::Bump, 4, 1, 8.0);
    fam.width_range = [3.9, 4.5];
    assert!(matches!(fam.members(&g, &point_h()), Err(Error::InvalidFunction(_))));
    let mut fam = TestFunctionFamily::standard(FamilyKind::Gaussian, 4, 1, 8.0);
    fam.width_range = [2.0, 2.0];
    assert!(fam.members(&g, &point_h()).is_err());
}

#[test]
fn codimension_two_is_rejected() {
    let g = GridSpec::new(2, 16, 8.0).unwrap();
    let h2 = AffineSubspace::coordinate(vec![0.0; 4], &[2, 3]).unwrap();
    let fam = TestFunctionFamily::standard(FamilyKind::Gaussian, 2, 1, 8.0);
    assert!(matches!(
        evaluate_family(&fam, &g, &h2),
        Err(Error::Codimension { m: 2, .. })
    ));
}

fn random_subspace(rng: &mut ChaCha8Rng, m: usize) -> AffineSubspace {
    // rotate the coordinate subspace spanned by the last 4 - m axes
    let theta: f64 = rng.gen_range(0.0..6.0);
    let (s, c) = theta.sin_cos();
    let base: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dirs = match m {
        4 => vec![],
        3 => vec![vec![0.0, s, 0.0, c]],
        _ => unreachable!(),
    };
    AffineSubspace::new(base, dirs).unwrap()
}

fn off_h_points(rng: &mut ChaCha8Rng, h: &AffineSubspace, count: usize, dmin: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    while pts.len() < count {
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-6.0..6.0)).collect();
        if h.distance(&p) >= dmin {
            pts.push(p);
        }
    }
    pts
}

#[test]
fn witness_identity_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in [3, 4] {
        let h = random_subspace(&mut rng, m);
        let pts = off_h_points(&mut rng, &h, 100, 0.5);
        let rep = witness_identity_check(&h, &pts, 0.5).unwrap();
        assert!(rep.max_relative_error <= 1e-6, "m={m}: {}", rep.max_relative_error);
    }
}

#[test]
fn witness_identity_examples() {
    let h3 = line_h();
    for d in [1.0, 10.0] {
        let rep = witness_identity_check(&h3, &[vec![d, 0.0, 0.0, 3.0]], 0.1).unwrap();
        assert!(rep.max_relative_error <= 1e-6);
    }
    let rep = witness_identity_check(&point_h(), &[vec![0.0, 0.0, 2.0, 0.0]], 0.1).unwrap();
    assert!(rep.max_relative_error <= 1e-6);
    assert!(matches!(
        witness_identity_check(&h3, &[vec![0.1, 0.0, 0.0, 0.0]], 0.5),
        Err(Error::TooCloseToSubspace { .. })
    ));
}

#[test]
fn witness_is_harmonic_off_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [3, 4] {
        let h = random_subspace(&mut rng, m);
        let pts = off_h_points(&mut rng, &h, 100, 0.5);
        let rep = subharmonicity_check(&h, &pts, 0.5).unwrap();
        assert!(rep.min_laplacian >= -1e-8, "m={m}: {rep:?}");
        assert!(rep.max_abs_laplacian <= 1e-6, "m={m}: {rep:?}");
    }
    assert!(subharmonicity_check(&point_h(), &[vec![0.0; 4]], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nested_subspaces_order_the_quotients(
        cx in -2.0f64..2.0, cy in -2.0f64..2.0, cz in -2.0f64..2.0, w in 0.8f64..1.2,
    ) {
        // H4 = {0} lies inside H3 = span(e4), so d_H4 >= d_H3 pointwise.
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let phi = gaussian(&g, vec![cx, cy, cz, 0.3], w);
        let h3 = line_h();
        let h4 = point_h();
        let m3 = exclusion_mask(&g, &h3);
        let m4 = exclusion_mask(&g, &h4);
        let both: Vec<bool> = m3.iter().zip(&m4).map(|(a, b)| *a || *b).collect();
        let i3 = SingularWeight::with_exclusion(&g, &h3, &both).integral(&phi);
        let i4 = SingularWeight::with_exclusion(&g, &h4, &both).integral(&phi);
        prop_assert!(i4 <= i3);
    }
}
