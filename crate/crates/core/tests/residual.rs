mod common;

use common::{all_schemes, scheme, test_meshes};
use frrd::correction::Backend;
use frrd::mesh::generators;
use frrd::physics::Law;
use frrd::residual::{self, BoundaryData, Profile, Scheme, SchemeOptions, Variant};
use frrd::verify::{decomposition_defect, random_state, CONSERVATION_VARIANTS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn linear_steady_state_has_zero_residual() {
    let boundary = BoundaryData::uniform(Profile::Linear { c0: 0.0, cx: 0.0, cy: 1.0 });
    for (name, m) in test_meshes() {
        // Rational Wachspress integrands are integrated inexactly.
        let tol = if name == "hexagons" { 1e-10 } else { 1e-13 };
        let s = Scheme::new(m, Law::linear_advection([1.0, 0.0]), boundary.clone(), SchemeOptions::default()).unwrap();
        let u = s.interpolate(|x| x.y);
        for v in [Variant::Dg, Variant::DgInterp, Variant::Fr, Variant::FrStrong, Variant::Cs] {
            let r = s.global_residual(&u, v).unwrap();
            assert!(max_abs(&r.values) < tol, "{name} {v}: {:e}", max_abs(&r.values));
        }
    }
}

#[test]
fn burgers_linear_characteristic_solution_is_steady_for_dg() {
    // u = 2 + x − y is constant along the characteristic direction (1, 1).
    let boundary = BoundaryData::uniform(Profile::Linear { c0: 2.0, cx: 1.0, cy: -1.0 });
    for k in [1, 2] {
        let s = Scheme::new(generators::unit_square_triangles(3), Law::burgers_2d(), boundary.clone(), SchemeOptions { degree: k, ..Default::default() })
            .unwrap();
        let u = s.interpolate(|x| 2.0 + x.x - x.y);
        let r = s.global_residual(&u, Variant::Dg).unwrap();
        assert!(max_abs(&r.values) < 1e-13, "k={k}: {:e}", max_abs(&r.values));
    }
}

#[test]
fn dg_interp_matches_dg_for_linear_flux() {
    let m = generators::perturb_interior(&generators::unit_square_quads(3), 0.1, 5);
    let s = scheme(&m, &Law::linear_advection([0.3, -0.8]), 2);
    let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(1), 1.0, 0);
    for e in 0..s.n_elements() {
        let a = s.element_residual(&u, e, Variant::Dg).unwrap().phi;
        let b = s.element_residual(&u, e, Variant::DgInterp).unwrap().phi;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

#[test]
fn numerical_flux_traces_are_antisymmetric() {
    for (name, s) in all_schemes() {
        let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(2), 2.0, 0);
        let traces: Vec<_> = (0..s.n_elements()).map(|e| s.traces(&u, e)).collect();
        for edge in &s.mesh.edges {
            let (Some(re), Some(rl)) = (edge.right_element, edge.right_local) else { continue };
            let (tl, tr) = (&traces[edge.left_element], &traces[re]);
            let n = tl.start[edge.left_local + 1] - tl.start[edge.left_local];
            for q in 0..n {
                let a = tl.fhat[tl.start[edge.left_local] + q];
                let b = tr.fhat[tr.start[rl] + q];
                assert_eq!(a, -b, "{name}");
            }
        }
    }
}

fn check_conservation(s: &Scheme, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 0..2 {
        let u = random_state(s, &mut rng, 2.0, draw);
        for e in 0..s.n_elements() {
            let tr = s.traces(&u, e);
            for v in CONSERVATION_VARIANTS {
                let phi = s.element_residual_with(&u, e, v, &tr).unwrap().phi;
                let d = residual::conservation_defect(s, e, &phi, &tr);
                assert!(d.within(1e-10), "{v} element {e}: {:e}", d.relative());
            }
            for i in 0..s.spaces[e].edges.len() {
                if let Some(d) = residual::boundary_conservation_defect(s, e, i, &tr) {
                    assert!(d.within(1e-11), "boundary {e}/{i}: {:e}", d.relative());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn conservation_holds_for_every_variant(seed in any::<u64>()) {
        for (_, s) in all_schemes() {
            check_conservation(&s, seed);
        }
    }

    #[test]
    fn fr_splits_into_dg_interp_plus_r(seed in any::<u64>()) {
        for (name, s) in all_schemes() {
            let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(seed), 2.0, seed as usize);
            for e in 0..s.n_elements() {
                let d = decomposition_defect(&s, &u, e).unwrap();
                prop_assert!(d <= 1e-11, "{} element {}: {:e}", name, e, d);
            }
        }
    }

    #[test]
    fn global_identity_holds(seed in any::<u64>()) {
        for (name, s) in all_schemes() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_state(&s, &mut rng, 2.0, 0);
            let test = random_state(&s, &mut rng, 1.0, 1);
            for v in CONSERVATION_VARIANTS {
                let id = residual::global_identity(&s, &u, &test, v).unwrap();
                prop_assert!(id.defect.within(1e-9), "{} {}: {} vs {}", name, v, id.lhs, id.rhs);
            }
        }
    }
}

#[test]
fn unit_test_field_gives_global_telescoping() {
    // With v ≡ 1 the identity reduces to Σ R = ∮_{∂Ω} f̂(u^h, u_b).
    for (name, s) in all_schemes() {
        let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(3), 2.0, 0);
        let ones = frrd::approximation::FieldCoeffs::constant(&s.spaces, 1.0);
        let id = residual::global_identity(&s, &u, &ones, Variant::Fr).unwrap();
        assert!(id.defect.within(1e-12), "{name}");
    }
}

#[test]
fn strong_and_gauss_forms_agree_with_exact_quadrature() {
    let m = generators::perturb_interior(&generators::unit_square_triangles(3), 0.15, 4);
    for law in [Law::linear_advection([1.0, 0.5]), Law::burgers_2d()] {
        for k in [1, 2, 3] {
            let s = common::scheme_with(&m, &law, SchemeOptions { degree: k, backend: Backend::Rt, ..Default::default() });
            let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(k as u64), 2.0, 0);
            for e in 0..s.n_elements() {
                let a = s.element_residual(&u, e, Variant::FrStrong).unwrap().phi;
                let b = s.element_residual(&u, e, Variant::Fr).unwrap().phi;
                let scale = max_abs(&b).max(1.0);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-9 * scale, "{} k={k}: {x} vs {y}", law.name());
                }
            }
        }
    }
}

#[test]
fn boundary_residual_vanishes_for_matching_data() {
    let p = Profile::Linear { c0: 1.0, cx: 0.5, cy: -0.25 };
    for (name, m) in test_meshes() {
        for law in common::laws() {
            let s = Scheme::new(m.clone(), law, BoundaryData::uniform(p), SchemeOptions::default()).unwrap();
            let u = s.interpolate(|x| p.eval(x));
            for e in 0..s.n_elements() {
                let tr = s.traces(&u, e);
                for (i, t) in s.spaces[e].edges.iter().enumerate() {
                    match s.boundary_residual(e, i, &tr) {
                        Some(phi) => assert!(max_abs(&phi) < 1e-13, "{name} {}: {:e}", law.name(), max_abs(&phi)),
                        None => assert!(!t.is_boundary()),
                    }
                }
            }
        }
    }
}

#[test]
fn boundary_residual_sums_to_flux_jump() {
    let s = Scheme::new(
        generators::unit_square_triangles(2),
        Law::burgers_2d(),
        BoundaryData::uniform(Profile::Sine { amplitude: 0.5, kx: 1.0, ky: 2.0, phase: 0.3, offset: 1.0 }),
        SchemeOptions { degree: 2, ..Default::default() },
    )
    .unwrap();
    let u = random_state(&s, &mut ChaCha8Rng::seed_from_u64(8), 2.0, 0);
    let mut checked = 0;
    for e in 0..s.n_elements() {
        let tr = s.traces(&u, e);
        for i in 0..s.spaces[e].edges.len() {
            if let Some(d) = residual::boundary_conservation_defect(&s, e, i, &tr) {
                assert!(d.within(1e-11));
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 8);
}

#[test]
fn lipschitz_constant_is_mesh_independent() {
    let law = Law::burgers_2d();
    let mut constants = Vec::new();
    for n in [2, 4, 8] {
        let s = scheme(&generators::unit_square_triangles(n), &law, 1);
        // An interior element near the centre.
        let e = (0..s.n_elements())
            .min_by(|&a, &b| {
                let d = |e: usize| (frrd::geometry::centroid(&s.spaces[e].vertices) - frrd::geometry::vec2(0.5, 0.5)).norm();
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let est = residual::lipschitz_probe(&s, e, Variant::Fr, 1.0, 4000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(est.constant_state_residual <= 1e-12, "{:e}", est.constant_state_residual);
        assert!(est.constant.is_finite() && est.constant > 0.0);
        constants.push(est.constant);
    }
    for w in constants.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.8..=1.2).contains(&ratio), "{constants:?}");
    }
}
