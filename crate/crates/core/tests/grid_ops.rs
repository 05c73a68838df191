use hartogs_core::grid::{multi_indices, FormField, GridSpec, Operators, ScalarField};
use hartogs_core::DerivativeScheme;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_form(ops: &Operators, degree: usize, kmax: usize, rng: &mut ChaCha8Rng) -> FormField {
    let g = *ops.grid();
    let comps = multi_indices(g.complex_dim, degree)
        .iter()
        .map(|_| ops.random_band_limited(kmax, rng))
        .collect();
    FormField::from_components(g, degree, comps).unwrap()
}

fn schemes() -> [DerivativeScheme; 3] {
    [
        DerivativeScheme::Spectral,
        DerivativeScheme::CentralDifference { order: 8 },
        DerivativeScheme::CentralDifference { order: 2 },
    ]
}

#[test]
fn adjointness_on_random_band_limited_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, p) in [(2usize, 8usize), (3, 8)] {
        let g = GridSpec::new(n, p, 1.7).unwrap();
        for scheme in schemes() {
            let ops = Operators::new(g, scheme).unwrap();
            for q in 0..n {
                let a = random_form(&ops, q, 3, &mut rng);
                let b = random_form(&ops, q + 1, 3, &mut rng);
                let lhs = ops.dbar(&a).unwrap().inner(&b).unwrap();
                let rhs = a.inner(&ops.dbar_adjoint(&b).unwrap()).unwrap();
                let tol = 1e-12 * (a.norm_l2() * b.norm_l2() + 1.0);
                assert!((lhs - rhs).norm() <= tol, "n={n} q={q} {scheme:?}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn dbar_squared_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = GridSpec::new(3, 8, 1.0).unwrap();
    for scheme in schemes() {
        let ops = Operators::new(g, scheme).unwrap();
        for q in 0..2 {
            let w = random_form(&ops, q, 3, &mut rng);
            let dw = ops.dbar(&w).unwrap();
            let ddw = ops.dbar(&dw).unwrap();
            assert!(ddw.norm_l2() <= 1e-12 * dw.norm_l2().max(w.norm_l2()));
            let t = random_form(&ops, q + 2, 3, &mut rng);
            let tt = ops.dbar_adjoint(&ops.dbar_adjoint(&t).unwrap()).unwrap();
            // second derivatives at |k| <= 3 scale the input by up to ~100
            assert!(tt.norm_l2() <= 1e-10 * t.norm_l2());
        }
    }
}

#[test]
fn flat_weitzenbock_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = GridSpec::new(2, 8, 2.0).unwrap();
    let ops = Operators::spectral(g);
    for q in 0..=2 {
        let w = random_form(&ops, q, 3, &mut rng);
        let bw = ops.box_laplacian(&w).unwrap();
        for (b, c) in bw.components().iter().zip(w.components()) {
            let lap = ops.laplacian(c).unwrap().scale(Complex64::new(0.25, 0.0));
            let err = b.add(&lap).unwrap().norm_l2();
            assert!(err <= 1e-10 * c.norm_l2(), "q={q}: {err}");
        }
    }
}

#[test]
fn parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = GridSpec::new(2, 8, 1.3).unwrap();
    let ops = Operators::spectral(g);
    let w = ScalarField::new(
        g,
        (0..g.len())
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.5).cos()))
            .collect(),
    )
    .unwrap();
    let a = w.norm_sq();
    let b = ops.spectral_norm_sq(&w).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);
    let r = ops.random_band_limited(2, &mut rng);
    assert!((r.norm_sq() - ops.spectral_norm_sq(&r).unwrap()).abs() <= 1e-12 * r.norm_sq());
}

#[test]
fn gradient_norm_matches_sample_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = GridSpec::new(2, 8, 1.0).unwrap();
    let ops = Operators::spectral(g);
    let w = ops.random_band_limited(3, &mut rng);
    let direct: f64 = ops.gradient(&w).unwrap().iter().map(|c| c.norm_sq()).sum();
    let spec = ops.gradient_norm_sq(&w).unwrap();
    assert!((direct - spec).abs() <= 1e-12 * direct);
}

#[test]
fn box_kills_constant_functions() {
    // Periodic dbar-closed functions on the torus are constants.
    let g = GridSpec::new(2, 8, 1.0).unwrap();
    let ops = Operators::spectral(g);
    let c = FormField::from_scalar(ScalarField::constant(g, Complex64::new(3.0, 1.0)));
    assert!(ops.box_laplacian(&c).unwrap().max_abs() < 1e-13);
}

#[test]
fn zero_inputs() {
    let g = GridSpec::new(2, 8, 1.0).unwrap();
    let ops = Operators::spectral(g);
    let z = FormField::zeros(g, 1).unwrap();
    assert_eq!(ops.dbar_adjoint(&z).unwrap().max_abs(), 0.0);
    assert_eq!(ops.box_laplacian(&z).unwrap().max_abs(), 0.0);
    assert_eq!(z.norm_l2(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adjointness_holds_for_any_seed(seed in any::<u64>(), kmax in 1usize..4, half in 0.5f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(2, 8, half).unwrap();
        let ops = Operators::spectral(g);
        let a = random_form(&ops, 1, kmax, &mut rng);
        let b = random_form(&ops, 2, kmax, &mut rng);
        let lhs = ops.dbar(&a).unwrap().inner(&b).unwrap();
        let rhs = a.inner(&ops.dbar_adjoint(&b).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (a.norm_l2() * b.norm_l2() + 1.0));
    }

    #[test]
    fn dbar_is_linear(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let ops = Operators::spectral(g);
        let a = ops.random_band_limited(3, &mut rng);
        let b = ops.random_band_limited(3, &mut rng);
        let c = Complex64::new(re, im);
        let lhs = ops.dbar_function(&a.add(&b.scale(c)).unwrap()).unwrap();
        let rhs = ops.dbar_function(&a).unwrap().add(&ops.dbar_function(&b).unwrap().scale(c)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_l2() <= 1e-12 * (1.0 + lhs.norm_l2()));
    }
}
