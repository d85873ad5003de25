use lindblad_core::bench::{random_density_with, random_model, random_pure_state, sample_rng};
use lindblad_core::matrix::min_eigenvalue;
use lindblad_core::{Complex, Matrix, Model};
use rand::Rng;
use rand_distr::StandardNormal;

fn random_hermitian(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = Matrix::from_fn(d, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + &g.adjoint()).scale_re(0.5)
}

fn model_and_rng(seed: u64, k: u64) -> (Model, rand_chacha::ChaCha8Rng) {
    let mut rng = sample_rng(seed, k);
    let d = rng.random_range(1..=6);
    let jumps = rng.random_range(0..=3);
    let scale = rng.random_range(0.1..2.0);
    (random_model(d, jumps, scale, &mut rng).unwrap(), rng)
}

#[test]
fn lindbladian_is_trace_free() {
    for k in 0..100 {
        let (model, mut rng) = model_and_rng(1, k);
        let rho = random_hermitian(model.dim(), &mut rng);
        let out = model.lindbladian_apply(&rho).unwrap();
        let scale = model.lj_apply(&rho).unwrap().max_abs() + model.ll_apply(&rho).unwrap().max_abs();
        assert!(
            out.trace().norm() <= 1e-12 * model.dim() as f64 * scale,
            "case {k}: {} vs {scale}",
            out.trace().norm()
        );
    }
}

#[test]
fn both_splittings_reproduce_the_generator() {
    for k in 0..100 {
        let (model, mut rng) = model_and_rng(2, k);
        let rho = random_hermitian(model.dim(), &mut rng);
        let full = model.lindbladian_apply(&rho).unwrap();
        let hd = &model.hamiltonian_part(&rho).unwrap() + &model.dissipator_part(&rho).unwrap();
        let jl = &model.lj_apply(&rho).unwrap() + &model.ll_apply(&rho).unwrap();
        let scale = full.max_abs().max(1.0);
        assert!((&full - &hd).max_abs() <= 1e-12 * scale, "case {k}");
        assert!((&full - &jl).max_abs() <= 1e-12 * scale, "case {k}");
    }
}

#[test]
fn generators_preserve_hermiticity() {
    for k in 0..100 {
        let (model, mut rng) = model_and_rng(3, k);
        let rho = random_hermitian(model.dim(), &mut rng);
        for out in [
            model.lindbladian_apply(&rho).unwrap(),
            model.hamiltonian_part(&rho).unwrap(),
            model.dissipator_part(&rho).unwrap(),
            model.lj_apply(&rho).unwrap(),
            model.ll_apply(&rho).unwrap(),
        ] {
            assert!(out.hermitian_asymmetry() <= 1e-12 * out.max_abs().max(1.0), "case {k}");
        }
    }
}

#[test]
fn completely_positive_pieces_keep_states_positive() {
    for k in 0..1000 {
        let (model, mut rng) = model_and_rng(4, k);
        let d = model.dim();
        let rho = random_density_with(d, &mut rng).into_matrix();
        let dt = rng.random_range(0.01..1.0);
        let alpha = rng.random_range(0..=3);
        let m = rng.random_range(1..=3);
        let mut times: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..dt)).collect();
        times.sort_by(f64::total_cmp);
        let outputs = [
            model.ll_apply(&rho).unwrap(),
            model.truncated_propagator_apply(alpha, dt, 0.0, &rho).unwrap(),
            model.f_operator_apply(3, &times, dt, &rho).unwrap(),
        ];
        for out in outputs {
            let scale = out.max_abs().max(1.0);
            assert!(min_eigenvalue(&out).unwrap() >= -1e-10 * scale, "case {k}");
        }
    }
}

#[test]
fn dissipator_norm_is_attained_on_pure_states() {
    for k in 0..5 {
        let (model, mut rng) = model_and_rng(5, k);
        let norm = model.effective_generator().ll_norm;
        let mut best: f64 = 0.0;
        for _ in 0..10_000 {
            let psi = random_pure_state(model.dim(), &mut rng);
            best = best.max(model.ll_apply(&Matrix::outer(&psi)).unwrap().trace().re);
        }
        assert!(best <= norm * (1.0 + 1e-12), "case {k}: sampled {best} above {norm}");
        if model.dim() <= 2 {
            assert!(best >= norm * (1.0 - 1e-2), "case {k}: sampled {best} far below {norm}");
        }
        // the maximizing eigenvector attains the value exactly
        let eig = lindblad_core::eigen::eigh(model.dissipation()).unwrap();
        let d = model.dim();
        let top: Vec<Complex> = (0..d).map(|i| eig.vectors[(i, d - 1)]).collect();
        let attained = model.ll_apply(&Matrix::outer(&top)).unwrap().trace().re;
        assert!((attained - norm).abs() <= 1e-6 * norm.max(1e-300), "case {k}");
    }
}

#[test]
fn no_jump_model_is_von_neumann() {
    let h = Matrix::sigma_x().scale_re(0.7);
    let model = Model::unitary(h.clone()).unwrap();
    let rho = Matrix::bloch(0.1, 0.2, 0.3);
    let expected = h.commutator(&rho).scale(Complex::new(0.0, -1.0));
    assert!((&model.lindbladian_apply(&rho).unwrap() - &expected).max_abs() < 1e-15);
    assert_eq!(model.effective_generator().ll_norm, 0.0);
}
