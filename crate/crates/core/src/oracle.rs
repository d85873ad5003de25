//! Reference propagators computed from matrix exponentials.
//!
//! Superoperators are represented on column-stacked vectors,
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, so `vec(ρ)[i + d j] = ρ[i, j]`.

use crate::error::{Error, Result};
use crate::matrix::{expm, kraus_apply, CMatrix};
use crate::model::LindbladModel;
use crate::scalar::{neg_i, tol, Cx, Real};

/// Largest Hilbert-space dimension the dense superoperator oracle accepts.
pub const MAX_ORACLE_DIM: usize = 128;

/// `ℒ` as a `d² × d²` matrix acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct VectorizedGenerator<T: Real> {
    pub dim: usize,
    pub matrix: CMatrix<T>,
}

pub fn vec_col<T: Real>(rho: &CMatrix<T>) -> Vec<Cx<T>> {
    let d = rho.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(rho[(i, j)]);
        }
    }
    v
}

pub fn unvec_col<T: Real>(v: &[Cx<T>], d: usize) -> CMatrix<T> {
    CMatrix::from_fn(d, |i, j| v[i + d * j])
}

impl<T: Real> VectorizedGenerator<T> {
    pub fn apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim)?;
        Ok(unvec_col(&self.matrix.matvec(&vec_col(rho)), self.dim))
    }
}

fn check_oracle_dim(d: usize) -> Result<()> {
    if d > MAX_ORACLE_DIM {
        return Err(Error::BadParameter(format!("reference oracle supports d <= {MAX_ORACLE_DIM}, got {d}")));
    }
    Ok(())
}

/// `Σ_k L̄_k ⊗ L_k`, the jump part alone.
fn vectorized_jumps<T: Real>(model: &LindbladModel<T>) -> CMatrix<T> {
    let d = model.dim();
    let mut out = CMatrix::zeros(d * d);
    for l in model.lindblads() {
        out += &l.conj().kron(l);
    }
    out
}

/// `-i(I⊗H - Hᵀ⊗I) + Σ_k [L̄_k⊗L_k - ½ I⊗L_k†L_k - ½ (L_k†L_k)ᵀ⊗I]`
pub fn vectorize<T: Real>(model: &LindbladModel<T>) -> VectorizedGenerator<T> {
    let d = model.dim();
    let id = CMatrix::identity(d);
    let h = model.hamiltonian();
    let k = model.dissipation();
    let mut m = (&id.kron(h) - &h.transpose().kron(&id)).scale(neg_i());
    m += &vectorized_jumps(model);
    let half = -T::lit(0.5);
    m.axpy(half, &id.kron(k));
    m.axpy(half, &k.transpose().kron(&id));
    VectorizedGenerator { dim: d, matrix: m }
}

/// `e^{ℒt}` for a fixed `t`, computed once and applied to many states.
#[derive(Clone, Debug)]
pub struct ExactPropagator<T: Real> {
    dim: usize,
    t: T,
    matrix: CMatrix<T>,
}

impl<T: Real> ExactPropagator<T> {
    pub fn new(model: &LindbladModel<T>, t: T, tolerance: T) -> Result<Self> {
        check_oracle_dim(model.dim())?;
        if !(t >= T::zero()) {
            return Err(Error::BadParameter(format!("propagation time must be nonnegative, got {t}")));
        }
        let gen = vectorize(model);
        Ok(Self { dim: model.dim(), t, matrix: expm(&gen.matrix.scale_re(t), tolerance) })
    }

    pub fn time(&self) -> T {
        self.t
    }

    /// `e^{ℒt}(ρ)`, re-Hermitized.
    ///
    /// # Panics
    /// If the trace drifts from `Tr ρ` by more than `1e-10`; that would mean
    /// the exponential itself is wrong.
    pub fn apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim)?;
        let out = unvec_col(&self.matrix.matvec(&vec_col(rho)), self.dim).hermitize();
        let drift = (out.trace() - rho.trace()).norm();
        assert!(
            drift <= T::tol(tol::ORACLE_TRACE) * rho.trace().norm().max(T::one()),
            "reference propagator lost trace: drift {drift:e}"
        );
        Ok(out)
    }
}

/// `e^{ℒt}(ρ)` with the default exponential tolerance.
pub fn exact_propagate<T: Real>(model: &LindbladModel<T>, t: T, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    exact_propagate_tol(model, t, rho, T::tol(tol::EXPM))
}

pub fn exact_propagate_tol<T: Real>(
    model: &LindbladModel<T>,
    t: T,
    rho: &CMatrix<T>,
    tolerance: T,
) -> Result<CMatrix<T>> {
    ExactPropagator::new(model, t, tolerance)?.apply(rho)
}

/// `e^{ℒ_J t}(ρ) = e^{Jt} ρ e^{J†t}`
pub fn lj_exact<T: Real>(model: &LindbladModel<T>, t: T, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !(t >= T::zero()) {
        return Err(Error::BadParameter(format!("propagation time must be nonnegative, got {t}")));
    }
    let u = expm(&model.j_matrix().scale_re(t), T::tol(tol::EXPM));
    Ok(kraus_apply(&u, rho)?.hermitize())
}

/// `e^{ℒ_L t}(ρ)` for either sign of `t`.
pub fn ll_exact<T: Real>(model: &LindbladModel<T>, t: T, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    check_oracle_dim(model.dim())?;
    rho.check_dim(model.dim())?;
    let e = expm(&vectorized_jumps(model).scale_re(t), T::tol(tol::EXPM));
    Ok(unvec_col(&e.matvec(&vec_col(rho)), model.dim()).hermitize())
}
