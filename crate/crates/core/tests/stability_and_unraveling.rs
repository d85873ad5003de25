use lindblad_core::bench::{random_density_with, random_model, random_pure_state, sample_rng};
use lindblad_core::schemes::step_unnormalized;
use lindblad_core::stability::{
    analytic_region_contains, bloch_e_matrix, closed_form_e, empirical_verdict, g_polynomial, region_scan, Axis,
};
use lindblad_core::unraveling::{kraus_decompose, monte_carlo_density};
use lindblad_core::SchemeId;
use num_complex::Complex64;
use rand::Rng;

const SP: [SchemeId; 3] = [SchemeId::Sp1, SchemeId::Sp2Tr, SchemeId::Sp2Mp];

#[test]
fn closed_form_matches_numeric_bloch_map() {
    let mut rng = sample_rng(31, 0);
    for _ in 0..500 {
        let z = Complex64::new(rng.random_range(0.01..4.0), rng.random_range(-4.0..4.0));
        for scheme in SP {
            let (a, b) = bloch_e_matrix(scheme, z).unwrap();
            let (ca, cb) = closed_form_e(scheme, z).unwrap();
            assert!((a - ca).abs() < 1e-12 && (b - cb).abs() < 1e-12, "{scheme} at {z}");
        }
    }
}

#[test]
fn midpoint_radius_below_one_iff_g_positive() {
    let roots = [Complex64::new(8.0, 0.0), Complex64::new(4.0, 2.0), Complex64::new(4.0, -2.0)];
    let mut rng = sample_rng(32, 0);
    for _ in 0..2000 {
        let z = Complex64::new(rng.random_range(0.01..12.0), rng.random_range(-6.0..6.0));
        if roots.iter().any(|r| (z - r).norm() < 1e-2) {
            continue;
        }
        let (a, b) = bloch_e_matrix(SchemeId::Sp2Mp, z).unwrap();
        let contracting = a * a + b * b < 1.0;
        assert_eq!(contracting, g_polynomial(z) > 0.0, "at {z}");
        assert!(analytic_region_contains(SchemeId::Sp2Mp, z).unwrap());
    }
}

#[test]
fn real_axis_radius_is_fixed() {
    // for real z the coherence factor is real, so β vanishes
    for x in [0.1, 0.5, 1.0, 2.0, 3.5] {
        for scheme in SP {
            let (_, b) = bloch_e_matrix(scheme, Complex64::new(x, 0.0)).unwrap();
            assert!(b.abs() < 1e-14, "{scheme} at {x}");
        }
    }
}

#[test]
fn empirical_iteration_agrees_with_spectral_radius() {
    let axis_re = Axis::new(0.25, 3.0, 0.25).unwrap();
    let axis_im = Axis::new(-3.0, 3.0, 0.5).unwrap();
    for scheme in SP {
        for p in region_scan(scheme, &axis_re, &axis_im, true).unwrap() {
            let e = p.empirical.unwrap();
            assert!(
                e.consistent_with(p.spectral_radius_sq, lindblad_core::stability::EMPIRICAL_STEPS),
                "{scheme} at {}",
                p.z()
            );
        }
    }
}

#[test]
fn left_half_plane_is_rejected() {
    assert!(bloch_e_matrix(SchemeId::Sp1, Complex64::new(-0.1, 0.0)).is_err());
    assert!(empirical_verdict(SchemeId::Sp1, Complex64::new(0.0, 1.0), 10).is_err());
}

#[test]
fn kraus_operators_reproduce_the_step() {
    for k in 0..100 {
        let mut rng = sample_rng(33, k);
        let d = rng.random_range(1..=5);
        let jumps = rng.random_range(0..=3);
        let model = random_model(d, jumps, rng.random_range(0.1..2.0), &mut rng).unwrap();
        let rho = random_density_with(d, &mut rng).into_matrix();
        let dt = rng.random_range(0.01..0.5);
        for scheme in SP {
            let dec = kraus_decompose(scheme, &model, dt).unwrap();
            let direct = step_unnormalized(scheme, &model, dt, &rho).unwrap();
            let via_kraus = dec.apply(&rho).unwrap();
            assert!((&direct - &via_kraus).max_abs() <= 1e-13 * direct.max_abs().max(1.0), "{scheme} case {k}");
        }
    }
}

#[test]
fn unraveling_is_deterministic_per_seed() {
    let mut rng = sample_rng(34, 0);
    let model = random_model(3, 2, 1.0, &mut rng).unwrap();
    let psi = random_pure_state(3, &mut rng);
    let dec = kraus_decompose(SchemeId::Sp2Mp, &model, 0.1).unwrap();
    let a = monte_carlo_density(&dec, &psi, 10, 500, 7).unwrap();
    let b = monte_carlo_density(&dec, &psi, 10, 500, 7).unwrap();
    let c = monte_carlo_density(&dec, &psi, 10, 500, 8).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.std_err, b.std_err);
    assert_ne!(a.mean, c.mean);
}

#[test]
fn unraveling_rejects_bad_input() {
    let mut rng = sample_rng(35, 0);
    let model = random_model(2, 1, 1.0, &mut rng).unwrap();
    let dec = kraus_decompose(SchemeId::Sp1, &model, 0.1).unwrap();
    let psi = random_pure_state(3, &mut rng);
    assert!(monte_carlo_density(&dec, &psi, 1, 100, 0).is_err());
    assert!(kraus_decompose(SchemeId::Rk(2), &model, 0.1).is_err());
    assert!(kraus_decompose(SchemeId::Sp1, &model, 0.0).is_err());
}
