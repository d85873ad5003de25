use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::models::ModelSpec;
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::matrix::CMatrix;
use crate::model::LindbladModel;

type M = CMatrix<f64>;

/// Independent random stream `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> M {
    M::from_fn(d, |_, _| complex_normal(rng))
}

/// `G G† / Tr(G G†)` with `G` a complex Ginibre matrix.
pub fn random_density_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix<f64> {
    let g = ginibre(d, rng);
    if d == 1 {
        return DensityMatrix::maximally_mixed(1);
    }
    let w = g.matmul_adj(&g).hermitize();
    let tr = w.trace().re;
    DensityMatrix::new(w.scale_re(1.0 / tr)).expect("Ginibre construction yields a density matrix")
}

pub fn random_density(d: usize, seed: u64) -> DensityMatrix<f64> {
    random_density_with(d, &mut sample_rng(seed, 0))
}

/// `ρ_atom ⊗ ρ_field`, each factor Ginibre.
pub fn random_product_density(d_atom: usize, d_field: usize, seed: u64) -> DensityMatrix<f64> {
    let mut rng = sample_rng(seed, 0);
    product_density_with(d_atom, d_field, &mut rng)
}

fn product_density_with<R: Rng + ?Sized>(d_atom: usize, d_field: usize, rng: &mut R) -> DensityMatrix<f64> {
    let a = random_density_with(d_atom, rng);
    let f = random_density_with(d_field, rng);
    let prod = a.kron(&f).hermitize();
    let tr = prod.trace().re;
    DensityMatrix::new(prod.scale_re(1.0 / tr)).expect("product of density matrices")
}

/// Initial state number `index` of an experiment: product form for
/// composite models, plain Ginibre otherwise.
pub fn initial_state_for(spec: &ModelSpec, seed: u64, index: u64) -> DensityMatrix<f64> {
    let mut rng = sample_rng(seed, index);
    match spec.factors() {
        Some((da, df)) => product_density_with(da, df, &mut rng),
        None => random_density_with(spec.dim(), &mut rng),
    }
}

/// Unit vector with i.i.d. complex normal components.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| complex_normal(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-distributed unitary from Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> M {
    let g = ginibre(d, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v: Vec<Complex64> = (0..d).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    M::from_fn(d, |i, j| cols[j][i])
}

/// Random model with Hermitian `H` and `n_jumps` Ginibre jump operators,
/// each entry scaled by `scale / √d`.
pub fn random_model<R: Rng + ?Sized>(d: usize, n_jumps: usize, scale: f64, rng: &mut R) -> Result<LindbladModel<f64>> {
    let s = scale / (d as f64).sqrt();
    let g = ginibre(d, rng);
    let h = (&g + &g.adjoint()).scale_re(0.5 * s);
    let ls = (0..n_jumps).map(|_| ginibre(d, rng).scale_re(s)).collect();
    LindbladModel::new(h, ls)
}
