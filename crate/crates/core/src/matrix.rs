//! Dense square complex matrices and the kernels built on them.
//!
//! Storage is row-major. Every operation is a pure function of its inputs.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use rayon::prelude::*;

use crate::eigen::{hermitian_eigs, hermitian_eigs_unchecked};
use crate::error::{Error, Result};
use crate::scalar::{cx, re, tol, Cx, Real};

// Row-parallel products pay off only for the superoperator-sized matrices.
const PARALLEL_MATMUL_DIM: usize = 96;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    dim: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Cx::new(T::zero(), T::zero()); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = re(T::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(dim: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Cx<T>>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimMismatch { expected: dim, found: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| re(T::lit(x))).collect()).collect())
    }

    pub fn diag(entries: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        Self::diag(&entries.iter().map(|&x| re(T::lit(x))).collect::<Vec<_>>())
    }

    /// `|ψ⟩⟨ψ|`
    pub fn outer(psi: &[Cx<T>]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Cx<T>> {
        self.data
    }

    pub fn map(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).fold(re(T::zero()), |acc, i| acc + self[(i, i)])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Maximum absolute row sum (induced ∞-norm).
    pub fn norm_inf(&self) -> T {
        (0..self.dim).map(|i| self.row(i).iter().fold(T::zero(), |s, z| s + z.norm())).fold(T::zero(), T::max)
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |A - A†|` entrywise.
    pub fn hermitian_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A†) / 2`
    pub fn hermitize(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![re(T::zero()); n * n];
        let row_kernel = |i: usize, out_row: &mut [Cx<T>]| {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        };
        if n >= PARALLEL_MATMUL_DIM {
            out.par_chunks_mut(n).enumerate().for_each(|(i, row)| row_kernel(i, row));
        } else {
            out.chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| row_kernel(i, row));
        }
        Self { dim: n, data: out }
    }

    /// `A B†` without materializing `B†`.
    pub fn matmul_adj(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        Self::from_fn(n, |i, j| self.row(i).iter().zip(rhs.row(j)).fold(re(T::zero()), |s, (&a, &b)| s + a * b.conj()))
    }

    pub fn matvec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.dim, v.len(), "matvec dimension mismatch");
        (0..self.dim).map(|i| self.row(i).iter().zip(v).fold(re(T::zero()), |s, (&a, &b)| s + a * b)).collect()
    }

    /// Standard Kronecker product `A ⊗ B`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (self.dim, rhs.dim);
        Self::from_fn(p * q, |i, j| self[(i / q, j / q)] * rhs[(i % q, j % q)])
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) + &rhs.matmul(self)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(self.dim), |acc, _| acc.matmul(self))
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            Err(Error::DimMismatch { expected, found: self.dim })
        } else {
            Ok(())
        }
    }

    pub fn sigma_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn sigma_y() -> Self {
        let (o, i) = (re(T::zero()), cx(T::zero(), T::one()));
        Self::from_rows(vec![vec![o, -i], vec![i, o]]).unwrap()
    }

    pub fn sigma_z() -> Self {
        Self::real_diag(&[1.0, -1.0])
    }

    /// Lowering operator `[[0, 0], [1, 0]]`.
    pub fn sigma_minus() -> Self {
        Self::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap()
    }

    /// Raising operator `[[0, 1], [0, 0]]`, the adjoint of [`Self::sigma_minus`].
    pub fn sigma_plus() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap()
    }

    /// Bloch-vector density `(I + rx σx + ry σy + rz σz) / 2`.
    pub fn bloch(rx: T, ry: T, rz: T) -> Self {
        let half = T::lit(0.5);
        let m = &(&(&Self::identity(2) + &Self::sigma_x().scale_re(rx)) + &Self::sigma_y().scale_re(ry))
            + &Self::sigma_z().scale_re(rz);
        m.scale_re(half)
    }

    /// `Tr(A B)`
    pub fn trace_product(&self, rhs: &Self) -> Cx<T> {
        let n = self.dim;
        let mut s = re(T::zero());
        for i in 0..n {
            for k in 0..n {
                s = s + self[(i, k)] * rhs[(k, i)];
            }
        }
        s
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn neg(self) -> CMatrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> AddAssign<&CMatrix<T>> for CMatrix<T> {
    fn add_assign(&mut self, rhs: &CMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + b;
        }
    }
}

impl<T: Real> SubAssign<&CMatrix<T>> for CMatrix<T> {
    fn sub_assign(&mut self, rhs: &CMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a - b;
        }
    }
}

impl<T: Real> CMatrix<T> {
    /// `self += s * rhs`
    pub fn axpy(&mut self, s: T, rhs: &CMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "axpy dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + b * s;
        }
    }
}

/// `𝒦[A](ρ) = A ρ A†`
pub fn kraus_apply<T: Real>(a: &CMatrix<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    rho.check_dim(a.dim())?;
    Ok(a.matmul(rho).matmul_adj(a))
}

/// `Σ_{k=0}^{order} J^k τ^k / k!`, evaluated by Horner's rule.
pub fn truncated_exp_poly<T: Real>(j: &CMatrix<T>, tau: T, order: usize) -> CMatrix<T> {
    let n = j.dim();
    let mut acc = CMatrix::identity(n);
    for k in (1..=order).rev() {
        // acc <- I + (J τ / k) acc
        let step = j.matmul(&acc).scale_re(tau / T::lit(k as f64));
        acc = &CMatrix::identity(n) + &step;
    }
    acc
}

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The argument is scaled by `2^-s` until its max-row-sum norm is at most
/// one; Taylor terms are summed until a term's norm drops below `tolerance`.
pub fn expm<T: Real>(a: &CMatrix<T>, tolerance: T) -> CMatrix<T> {
    let n = a.dim();
    let norm = a.norm_inf();
    let mut squarings = 0u32;
    if norm > T::one() {
        squarings = norm.log2().ceil().to_u32().unwrap_or(0);
    }
    let scaled = a.scale_re(T::lit(0.5).powi(squarings as i32));
    let mut result = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..200 {
        term = term.matmul(&scaled).scale_re(T::one() / T::lit(k as f64));
        result += &term;
        if term.norm_inf() < tolerance {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Schatten-1 norm: the sum of singular values.
///
/// Hermitian inputs take the `Σ|λ|` path; everything else goes through the
/// eigenvalues of `A†A`.
pub fn trace_norm<T: Real>(a: &CMatrix<T>) -> T {
    let scale = a.max_abs();
    if scale == T::zero() {
        return T::zero();
    }
    if a.hermitian_asymmetry() <= T::tol(tol::HERMITIAN) * scale {
        let eigs = hermitian_eigs_unchecked(&a.hermitize());
        return eigs.iter().fold(T::zero(), |s, &l| s + l.abs());
    }
    let gram = a.adjoint().matmul(a).hermitize();
    hermitian_eigs_unchecked(&gram).iter().fold(T::zero(), |s, &l| s + l.max(T::zero()).sqrt())
}

/// Largest singular value.
pub fn operator_norm<T: Real>(a: &CMatrix<T>) -> T {
    let gram = a.adjoint().matmul(a).hermitize();
    hermitian_eigs_unchecked(&gram).last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> Result<T> {
    Ok(hermitian_eigs(a)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    type M = CMatrix<f64>;

    fn close(a: &M, b: &M, eps: f64) -> bool {
        (a - b).max_abs() <= eps
    }

    #[test]
    fn trace_norm_examples() {
        assert_abs_diff_eq!(trace_norm(&M::identity(2)), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_norm(&M::real_diag(&[1.0, -2.0, 0.0])), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_norm(&M::sigma_x()), 2.0, epsilon = 1e-14);
        assert_eq!(trace_norm(&M::zeros(3)), 0.0);
    }

    #[test]
    fn trace_norm_non_hermitian() {
        // σ₋ has singular values {1, 0}.
        assert_abs_diff_eq!(trace_norm(&M::sigma_minus()), 1.0, epsilon = 1e-12);
        // diag(i, 2) is normal, singular values {1, 2}.
        let m = M::diag(&[cx(0.0, 1.0), re(2.0)]);
        assert_abs_diff_eq!(trace_norm(&m), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn kraus_apply_examples() {
        let rho = M::bloch(0.3, -0.2, 0.5);
        assert!(close(&kraus_apply(&M::identity(2), &rho).unwrap(), &rho, 1e-15));
        let flipped = kraus_apply(&M::sigma_x(), &M::real_diag(&[1.0, 0.0])).unwrap();
        assert!(close(&flipped, &M::real_diag(&[0.0, 1.0]), 1e-15));
        let doubled = kraus_apply(&M::identity(2).scale_re(2.0), &rho).unwrap();
        assert!(close(&doubled, &rho.scale_re(4.0), 1e-15));
    }

    #[test]
    fn kraus_apply_dim_mismatch() {
        let err = kraus_apply(&M::identity(2), &M::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn truncated_exp_poly_examples() {
        let j = M::sigma_y().scale(cx(0.3, -0.1));
        assert!(close(&truncated_exp_poly(&j, 0.7, 0), &M::identity(2), 0.0));
        assert!(close(&truncated_exp_poly(&j, 0.0, 5), &M::identity(2), 0.0));
        let dephasing_j = M::identity(2).scale_re(-0.25);
        let p = truncated_exp_poly(&dephasing_j, 1.0, 1);
        assert!(close(&p, &M::identity(2).scale_re(0.75), 1e-15));
        // Against the exact exponential: |e^{-τ/4} - (1 - τ/4)| = O(τ²).
        for &tau in &[1e-1, 1e-2, 1e-3] {
            let exact = expm(&dephasing_j.scale_re(tau), 1e-16);
            let err = (&exact - &truncated_exp_poly(&dephasing_j, tau, 1)).max_abs();
            assert!(err <= tau * tau / 32.0 * 1.01, "{tau}: {err}");
        }
    }

    #[test]
    fn truncated_exp_poly_matches_power_sum() {
        let j = M::from_fn(3, |i, k| cx(0.1 * (i as f64) - 0.2 * (k as f64), 0.05 * ((i * k) as f64)));
        let tau: f64 = 0.8;
        let mut expected = M::zeros(3);
        let mut fact = 1.0;
        for k in 0..=4u32 {
            if k > 0 {
                fact *= k as f64;
            }
            expected.axpy(tau.powi(k as i32) / fact, &j.pow(k));
        }
        assert!(close(&truncated_exp_poly(&j, tau, 4), &expected, 1e-14));
    }

    #[test]
    fn kron_examples() {
        assert!(close(&M::identity(2).kron(&M::identity(3)), &M::identity(6), 0.0));
        let zi = M::sigma_z().kron(&M::identity(2));
        assert!(close(&zi, &M::real_diag(&[1.0, 1.0, -1.0, -1.0]), 0.0));
        let xx = M::sigma_x().kron(&M::sigma_x());
        let ket00 = M::real_diag(&[1.0, 0.0, 0.0, 0.0]);
        let ket11 = M::real_diag(&[0.0, 0.0, 0.0, 1.0]);
        assert!(close(&kraus_apply(&xx, &ket00).unwrap(), &ket11, 0.0));
    }

    #[test]
    fn expm_unitary_rotation() {
        // exp(-i θ σz) = diag(e^{-iθ}, e^{iθ})
        let theta = 2.5;
        let u = expm(&M::sigma_z().scale(cx(0.0, -theta)), 1e-16);
        assert_abs_diff_eq!(u[(0, 0)].re, theta.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(u[(0, 0)].im, -theta.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(u[(1, 1)].im, theta.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(u[(0, 1)].norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn expm_large_norm_scalar() {
        let a = M::identity(2).scale_re(-7.3);
        let e = expm(&a, 1e-16);
        assert_abs_diff_eq!(e[(0, 0)].re, (-7.3f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (M::sigma_x(), M::sigma_y(), M::sigma_z());
        assert!(close(&x.matmul(&y), &z.scale(cx(0.0, 1.0)), 1e-15));
        assert!(close(&M::sigma_plus(), &M::sigma_minus().adjoint(), 0.0));
        assert!(close(&z.commutator(&x), &y.scale(cx(0.0, 2.0)), 1e-15));
    }

    #[test]
    fn f32_kernels_agree_with_f64() {
        let j64 = M::from_fn(2, |i, k| cx(0.3 - i as f64 * 0.2, 0.1 * k as f64));
        let j32 = CMatrix::<f32>::from_fn(2, |i, k| cx(0.3 - i as f32 * 0.2, 0.1 * k as f32));
        let p64 = truncated_exp_poly(&j64, 0.5, 3);
        let p32 = truncated_exp_poly(&j32, 0.5, 3);
        for (a, b) in p64.as_slice().iter().zip(p32.as_slice()) {
            assert!((a.re - b.re as f64).abs() < 1e-6 && (a.im - b.im as f64).abs() < 1e-6);
        }
        assert!((trace_norm(&CMatrix::<f32>::sigma_x()) - 2.0).abs() < 1e-6);
    }
}
