//! Quantum-jump realization of the first- and second-order Kraus schemes.
//!
//! Each step picks one Kraus operator `A_j` with probability proportional to
//! `‖A_j ψ̂‖²` and tracks the total `Σ_k ‖A_k ψ̂‖²` in a log-weight, so that
//! `weight · |ψ̂⟩⟨ψ̂|` is an unbiased estimate of the unnormalized scheme.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{truncated_exp_poly, CMatrix};
use crate::model::LindbladModel;
use crate::scalar::tol;
use crate::schemes::SchemeId;

type M = CMatrix<f64>;

#[derive(Clone, Debug)]
pub struct KrausDecomposition {
    pub operators: Vec<M>,
    pub source_scheme: SchemeId,
    pub dt: f64,
}

impl KrausDecomposition {
    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, M::dim)
    }

    /// `Σ_j A_j ρ A_j†`
    pub fn apply(&self, rho: &M) -> Result<M> {
        rho.check_dim(self.dim())?;
        let mut out = M::zeros(rho.dim());
        for a in &self.operators {
            out += &a.matmul(rho).matmul_adj(a);
        }
        Ok(out)
    }
}

/// Kraus operators of the unnormalized step of `scheme`.
pub fn kraus_decompose(scheme: SchemeId, model: &LindbladModel<f64>, dt: f64) -> Result<KrausDecomposition> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStepSize(dt));
    }
    let j = model.j_matrix();
    let ls = model.lindblads();
    let mut ops = Vec::new();
    match scheme {
        SchemeId::Sp1 => {
            ops.push(truncated_exp_poly(&j, dt, 1));
            ops.extend(ls.iter().map(|l| l.scale_re(dt.sqrt())));
        }
        SchemeId::Sp2Tr => {
            let p1 = truncated_exp_poly(&j, dt, 1);
            ops.push(truncated_exp_poly(&j, dt, 2));
            let s = (dt / 2.0).sqrt();
            ops.extend(ls.iter().map(|l| p1.matmul(l).scale_re(s)));
            ops.extend(ls.iter().map(|l| l.matmul(&p1).scale_re(s)));
            push_pairs(&mut ops, ls, dt);
        }
        SchemeId::Sp2Mp => {
            let mid = truncated_exp_poly(&j, dt / 2.0, 1);
            ops.push(truncated_exp_poly(&j, dt, 2));
            ops.extend(ls.iter().map(|l| mid.matmul(l).matmul(&mid).scale_re(dt.sqrt())));
            push_pairs(&mut ops, ls, dt);
        }
        s => return Err(Error::UnsupportedScheme { scheme: s.to_string(), operation: "kraus_decompose" }),
    }
    Ok(KrausDecomposition { operators: ops, source_scheme: scheme, dt })
}

// (Δt/√2) L_j L_k for every ordered pair
fn push_pairs(ops: &mut Vec<M>, ls: &[M], dt: f64) {
    let s = dt / 2f64.sqrt();
    for lj in ls {
        for lk in ls {
            ops.push(lj.matmul(lk).scale_re(s));
        }
    }
}

/// One stochastic wave function with its accumulated weight.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Unit-normalized state.
    pub psi: Vec<Complex64>,
    /// `log Π_steps Σ_k ‖A_k ψ̂‖²`
    pub log_weight: f64,
    pub index: usize,
    rng: ChaCha8Rng,
}

impl Trajectory {
    /// Starts trajectory `index` of a run seeded with `seed`; the random stream
    /// depends only on `(seed, index)`.
    pub fn new(psi0: &[Complex64], seed: u64, index: usize) -> Result<Self> {
        let norm = norm_sq(psi0).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateState { trajectory: index });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        Ok(Self { psi: psi0.iter().map(|z| z / norm).collect(), log_weight: 0.0, index, rng })
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    /// `weight · |ψ̂⟩⟨ψ̂|`
    pub fn estimate(&self) -> M {
        M::outer(&self.psi).scale_re(self.weight())
    }
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Jump probabilities `p_j = ‖A_j ψ̂‖² / Σ_k ‖A_k ψ̂‖²` and the images `A_j ψ̂`.
pub fn jump_probabilities(dec: &KrausDecomposition, psi: &[Complex64]) -> (Vec<f64>, Vec<Vec<Complex64>>, f64) {
    let images: Vec<Vec<Complex64>> = dec.operators.iter().map(|a| a.matvec(psi)).collect();
    let norms: Vec<f64> = images.iter().map(|v| norm_sq(v)).collect();
    let total: f64 = norms.iter().sum();
    (norms.iter().map(|n| n / total).collect(), images, total)
}

/// Advances `traj` by one Kraus step.
pub fn jump_step(dec: &KrausDecomposition, traj: &mut Trajectory) -> Result<()> {
    if traj.psi.len() != dec.dim() {
        return Err(Error::DimMismatch { expected: dec.dim(), found: traj.psi.len() });
    }
    let (probs, mut images, total) = jump_probabilities(dec, &traj.psi);
    if !(total >= tol::TRACE_FLOOR) || !total.is_finite() {
        return Err(Error::DegenerateState { trajectory: traj.index });
    }
    let u: f64 = traj.rng.random();
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = k;
            break;
        }
    }
    // guard against landing on a zero-probability tail through rounding
    while probs[chosen] == 0.0 && chosen > 0 {
        chosen -= 1;
    }
    let image = std::mem::take(&mut images[chosen]);
    let n = norm_sq(&image).sqrt();
    traj.psi = image.into_iter().map(|z| z / n).collect();
    traj.log_weight += total.ln();
    Ok(())
}

/// Sample mean of `weight · |ψ⟩⟨ψ|` over trajectories with entrywise standard errors.
#[derive(Clone, Debug)]
pub struct MonteCarloEstimate {
    pub mean: M,
    /// Row-major `d × d`; `√((Var Re + Var Im) / n)` per entry.
    pub std_err: Vec<f64>,
    pub n_traj: usize,
}

impl MonteCarloEstimate {
    pub fn std_err_at(&self, i: usize, j: usize) -> f64 {
        self.std_err[i * self.mean.dim() + j]
    }

    /// Largest `|mean - reference| / std_err` over entries. An entry with zero
    /// sample variance scores 0 if it is within `slack` of the reference and
    /// infinity otherwise.
    pub fn max_z_score(&self, reference: &M, slack: f64) -> f64 {
        let d = self.mean.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let diff = (self.mean[(i, j)] - reference[(i, j)]).norm();
                let se = self.std_err_at(i, j);
                let z = if se > 0.0 {
                    diff / se
                } else if diff <= slack {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Runs `n_traj` trajectories for `n_steps` steps each.
///
/// Trajectories run in parallel; their estimates are reduced in index order,
/// so the result is bit-identical for a given seed.
pub fn monte_carlo_density(
    dec: &KrausDecomposition,
    psi0: &[Complex64],
    n_steps: usize,
    n_traj: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n_traj < 2 {
        return Err(Error::BadParameter(format!("need at least 2 trajectories, got {n_traj}")));
    }
    if psi0.len() != dec.dim() {
        return Err(Error::DimMismatch { expected: dec.dim(), found: psi0.len() });
    }
    let samples: Vec<M> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let mut traj = Trajectory::new(psi0, seed, k)?;
            for _ in 0..n_steps {
                jump_step(dec, &mut traj)?;
            }
            Ok(traj.estimate())
        })
        .collect::<Result<_>>()?;
    let d = dec.dim();
    let n = n_traj as f64;
    // Accumulate around the first sample so identical samples give an exact
    // mean and exactly zero variance.
    let pivot = &samples[0];
    let mut shift = M::zeros(d);
    for s in &samples {
        shift += &(s - pivot);
    }
    let shift = shift.scale_re(1.0 / n);
    let mean = pivot + &shift;
    let mut var = vec![0.0; d * d];
    for s in &samples {
        let dev = &(s - pivot) - &shift;
        for (v, x) in var.iter_mut().zip(dev.as_slice()) {
            *v += x.norm_sqr();
        }
    }
    let std_err = var.into_iter().map(|v| (v / (n - 1.0) / n).sqrt()).collect();
    Ok(MonteCarloEstimate { mean, std_err, n_traj })
}
