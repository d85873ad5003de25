use lindblad_core::bench::{random_density_with, random_unitary, sample_rng};
use lindblad_core::eigen::hermitian_eigs;
use lindblad_core::matrix::{expm, kraus_apply, min_eigenvalue, operator_norm, trace_norm, truncated_exp_poly};
use lindblad_core::{Complex, Matrix};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn ginibre(d: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(d, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_norm_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..9) {
        let mut rng = sample_rng(seed, 0);
        let a = ginibre(d, &mut rng);
        let u = random_unitary(d, &mut rng);
        let v = random_unitary(d, &mut rng);
        let rotated = u.matmul(&a).matmul(&v);
        prop_assert!((trace_norm(&rotated) - trace_norm(&a)).abs() <= 1e-10 * trace_norm(&a).max(1.0));
    }

    #[test]
    fn hermitian_eigenvalues_sum_to_trace(seed in any::<u64>(), d in 1usize..24) {
        let g = ginibre(d, &mut sample_rng(seed, 1));
        let h = (&g + &g.adjoint()).scale_re(0.5);
        let eigs = hermitian_eigs(&h).unwrap();
        let sum: f64 = eigs.iter().sum();
        prop_assert!((sum - h.trace().re).abs() <= 1e-10 * d as f64 * h.max_abs());
        prop_assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn truncated_exponential_remainder(seed in any::<u64>(), d in 1usize..6, alpha in 0usize..8, tau in 0.01f64..1.0) {
        let j = ginibre(d, &mut sample_rng(seed, 2)).scale_re(0.5);
        let exact = expm(&j.scale_re(tau), 1e-15);
        let approx = truncated_exp_poly(&j, tau, alpha);
        let norm = operator_norm(&j);
        let bound = (norm * tau).powi(alpha as i32 + 1) / factorial(alpha + 1) * (norm * tau).exp();
        prop_assert!(operator_norm(&(&exact - &approx)) <= bound + 1e-13);
    }
}

#[test]
fn kraus_maps_preserve_positivity() {
    for k in 0..1000u64 {
        let mut rng = sample_rng(11, k);
        let d = rng.random_range(1..=8);
        let a = ginibre(d, &mut rng);
        let rho = random_density_with(d, &mut rng).into_matrix();
        let out = kraus_apply(&a, &rho).unwrap();
        assert!(min_eigenvalue(&out).unwrap() >= -1e-10 * trace_norm(&rho), "case {k}");
    }
}

#[test]
fn eigendecomposition_residual_at_largest_dimension() {
    let g = ginibre(128, &mut sample_rng(5, 0));
    let h = (&g + &g.adjoint()).scale_re(0.5);
    let eig = lindblad_core::eigen::eigh(&h).unwrap();
    let rebuilt = eig.vectors.matmul(&Matrix::real_diag(&eig.values)).matmul_adj(&eig.vectors);
    assert!((&rebuilt - &h).max_abs() <= 1e-10 * h.max_abs());
}
