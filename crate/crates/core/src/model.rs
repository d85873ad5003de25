//! Lindblad generators, their splittings and the truncated propagators built
//! from the effective Hamiltonian.

use crate::eigen::hermitian_eigs;
use crate::error::{Error, Result};
use crate::matrix::{kraus_apply, trace_norm, truncated_exp_poly, CMatrix};
use crate::scalar::{cx, neg_i, tol, Real};

/// A time-independent Lindblad equation `(H, {L_k})` with `ħ = 1`.
#[derive(Clone, Debug)]
pub struct LindbladModel<T: Real> {
    hamiltonian: CMatrix<T>,
    lindblads: Vec<CMatrix<T>>,
    // Σ_k L_k† L_k
    dissipation: CMatrix<T>,
}

/// `H_eff = H + (1/2i) Σ L_k† L_k`, `J = -i H_eff` and the two norms that
/// enter the error constants.
#[derive(Clone, Debug)]
pub struct EffectiveGenerator<T: Real> {
    pub h_eff: CMatrix<T>,
    pub j: CMatrix<T>,
    /// Trace norm of `J`.
    pub j_trace_norm: T,
    /// Induced trace norm of `ρ ↦ Σ L_k ρ L_k†`, i.e. `λ_max(Σ L_k† L_k)`.
    pub ll_norm: T,
}

impl<T: Real> LindbladModel<T> {
    pub fn new(hamiltonian: CMatrix<T>, lindblads: Vec<CMatrix<T>>) -> Result<Self> {
        let d = hamiltonian.dim();
        if d == 0 {
            return Err(Error::BadParameter("model dimension must be positive".into()));
        }
        if !hamiltonian.is_finite() || lindblads.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = hamiltonian.hermitian_asymmetry();
        if asym > T::tol(tol::HERMITIAN) * hamiltonian.max_abs() {
            return Err(Error::NotHermitian { asymmetry: asym.as_f64() });
        }
        let mut dissipation = CMatrix::zeros(d);
        for l in &lindblads {
            l.check_dim(d)?;
            dissipation += &l.adjoint().matmul(l);
        }
        Ok(Self { hamiltonian, lindblads, dissipation: dissipation.hermitize() })
    }

    /// Pure Hamiltonian dynamics.
    pub fn unitary(hamiltonian: CMatrix<T>) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &CMatrix<T> {
        &self.hamiltonian
    }

    pub fn lindblads(&self) -> &[CMatrix<T>] {
        &self.lindblads
    }

    /// `Σ_k L_k† L_k`
    pub fn dissipation(&self) -> &CMatrix<T> {
        &self.dissipation
    }

    /// `ℒ(ρ) = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})`
    pub fn lindbladian_apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        let mut out = self.hamiltonian_part(rho)?;
        out += &self.dissipator_part(rho)?;
        Ok(out)
    }

    /// `-i[H, ρ]`
    pub fn hamiltonian_part(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim())?;
        Ok(self.hamiltonian.commutator(rho).scale(neg_i()))
    }

    /// `Σ_k L_k ρ L_k† - ½{L_k† L_k, ρ}`
    pub fn dissipator_part(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        let mut out = self.ll_apply(rho)?;
        out.axpy(-T::lit(0.5), &self.dissipation.anticommutator(rho));
        Ok(out)
    }

    /// `ℒ_J(ρ) = J ρ + ρ J†`
    pub fn lj_apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim())?;
        let j = self.j_matrix();
        Ok(&j.matmul(rho) + &rho.matmul_adj(&j))
    }

    /// `ℒ_L(ρ) = Σ_k L_k ρ L_k†`
    pub fn ll_apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim())?;
        let mut out = CMatrix::zeros(self.dim());
        for l in &self.lindblads {
            out += &kraus_apply(l, rho)?;
        }
        Ok(out)
    }

    /// `J = -iH - ½ Σ L_k† L_k`
    pub fn j_matrix(&self) -> CMatrix<T> {
        let mut j = self.hamiltonian.scale(neg_i());
        j.axpy(-T::lit(0.5), &self.dissipation);
        j
    }

    pub fn effective_generator(&self) -> EffectiveGenerator<T> {
        let half = T::lit(0.5);
        // (1/2i) Σ L†L = -(i/2) Σ L†L
        let h_eff = &self.hamiltonian + &self.dissipation.scale(cx(T::zero(), -half));
        let j = h_eff.scale(neg_i());
        let j_trace_norm = trace_norm(&j);
        let ll_norm =
            hermitian_eigs(&self.dissipation).ok().and_then(|v| v.last().copied()).unwrap_or(T::zero()).max(T::zero());
        EffectiveGenerator { h_eff, j, j_trace_norm, ll_norm }
    }

    /// `𝒥_α(t, s)(ρ) = P ρ P†` with `P = Σ_{k≤α} J^k (t-s)^k / k!`.
    pub fn truncated_propagator_apply(&self, alpha: usize, t: T, s: T, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.dim())?;
        let p = truncated_exp_poly(&self.j_matrix(), t - s, alpha);
        kraus_apply(&p, rho)
    }

    /// `ℱ_m^M(s_m, …, s_1) = 𝒥_{M-m}(Δt, s_m) ℒ_L 𝒥_{M-m}(s_m, s_{m-1}) ℒ_L ⋯ ℒ_L 𝒥_{M-m}(s_1, 0)`
    ///
    /// `times` holds `s_1 ≤ … ≤ s_m`, all inside `[0, Δt]`.
    pub fn f_operator_apply(&self, order: usize, times: &[T], dt: T, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        let m = times.len();
        let bad_ordering = || Error::BadOrdering { times: times.iter().map(|t| t.as_f64()).collect(), dt: dt.as_f64() };
        if m == 0 || m > order {
            return Err(Error::BadParameter(format!("need 1 <= m <= M, got m = {m}, M = {order}")));
        }
        if times[0] < T::zero() || times[m - 1] > dt || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(bad_ordering());
        }
        rho.check_dim(self.dim())?;
        let alpha = order - m;
        let j = self.j_matrix();
        let prop = |tau: T, x: &CMatrix<T>| kraus_apply(&truncated_exp_poly(&j, tau, alpha), x);
        let mut x = prop(times[0], rho)?;
        for k in 1..m {
            x = self.ll_apply(&x)?;
            x = prop(times[k] - times[k - 1], &x)?;
        }
        x = self.ll_apply(&x)?;
        prop(dt - times[m - 1], &x)
    }
}
