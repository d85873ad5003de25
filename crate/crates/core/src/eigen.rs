//! Hermitian eigendecomposition.
//!
//! Householder reduction to a Hermitian tridiagonal form, a diagonal phase
//! similarity that makes the off-diagonal real, then implicit QL with
//! Wilkinson shifts on the real symmetric tridiagonal matrix.

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::{re, tol, Cx, Real};

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V diag(λ) V†`
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.values.len();
        CMatrix::from_fn(n, |i, j| {
            (0..n).fold(re(T::zero()), |s, k| s + self.vectors[(i, k)] * self.vectors[(j, k)].conj() * self.values[k])
        })
    }

    pub fn column(&self, k: usize) -> Vec<Cx<T>> {
        (0..self.values.len()).map(|i| self.vectors[(i, k)]).collect()
    }
}

fn check_hermitian<T: Real>(a: &CMatrix<T>) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let asym = a.hermitian_asymmetry();
    if asym > T::tol(tol::EIG_HERMITIAN) * a.max_abs().max(T::one()) {
        return Err(Error::NotHermitian { asymmetry: asym.as_f64() });
    }
    Ok(())
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigs<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    check_hermitian(a)?;
    Ok(decompose(a, false)?.values)
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh<T: Real>(a: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    check_hermitian(a)?;
    decompose(a, true)
}

/// Eigenvalues with no symmetry check; callers pass an already-hermitized
/// matrix. Falls back to NaNs if QL fails to converge.
pub(crate) fn hermitian_eigs_unchecked<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    decompose(a, false).map(|e| e.values).unwrap_or_else(|_| vec![T::nan(); a.dim()])
}

fn decompose<T: Real>(a: &CMatrix<T>, want_vectors: bool) -> Result<HermitianEigen<T>> {
    let n = a.dim();
    let mut work = a.hermitize();
    let mut q = CMatrix::<T>::identity(n);

    // Householder tridiagonalization: work <- H work H, q <- q H.
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Cx<T>> = (k + 1..n).map(|i| work[(i, k)]).collect();
        let xnorm = x.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { re(T::one()) };
        let alpha = -phase * xnorm;
        let mut v = vec![re(T::zero()); n];
        for (i, &xi) in x.iter().enumerate() {
            v[k + 1 + i] = xi;
        }
        v[k + 1] = v[k + 1] - alpha;
        let vnorm_sq = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if vnorm_sq == T::zero() {
            continue;
        }
        let tau = T::lit(2.0) / vnorm_sq;
        // p = τ A v, K = τ (v† p) / 2, w = p - K v
        let p: Vec<Cx<T>> = work.matvec(&v).into_iter().map(|z| z * tau).collect();
        let vp = v.iter().zip(&p).fold(re(T::zero()), |s, (&vi, &pi)| s + vi.conj() * pi);
        let kk = vp.re * tau * T::lit(0.5);
        let w: Vec<Cx<T>> = p.iter().zip(&v).map(|(&pi, &vi)| pi - vi * kk).collect();
        for i in 0..n {
            for j in 0..n {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                if upd.re != T::zero() || upd.im != T::zero() {
                    work[(i, j)] = work[(i, j)] - upd;
                }
            }
        }
        if want_vectors {
            // q <- q (I - τ v v†)
            for i in 0..n {
                let qv = (0..n).fold(re(T::zero()), |s, j| s + q[(i, j)] * v[j]);
                for j in 0..n {
                    q[(i, j)] = q[(i, j)] - qv * v[j].conj() * tau;
                }
            }
        }
    }

    // Phase similarity turning the sub-diagonal real and nonnegative.
    let mut diag: Vec<T> = (0..n).map(|i| work[(i, i)].re).collect();
    let mut off = vec![T::zero(); n];
    let mut phases = vec![re(T::one()); n];
    for i in 0..n.saturating_sub(1) {
        let e = work[(i + 1, i)];
        let mag = e.norm();
        off[i] = mag;
        phases[i + 1] = if mag > T::zero() { phases[i] * (e / mag) } else { phases[i] };
    }

    let mut z = if want_vectors { Some(vec![T::zero(); n * n]) } else { None };
    if let Some(z) = z.as_mut() {
        for i in 0..n {
            z[i * n + i] = T::one();
        }
    }
    tridiagonal_ql(&mut diag, &mut off, z.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();

    let vectors = match z {
        Some(z) => {
            // V = q D Z
            let qd = CMatrix::from_fn(n, |i, j| q[(i, j)] * phases[j]);
            CMatrix::from_fn(n, |i, col| {
                let src = order[col];
                (0..n).fold(re(T::zero()), |s, k| s + qd[(i, k)] * z[k * n + src])
            })
        }
        None => CMatrix::zeros(0),
    };
    Ok(HermitianEigen { values, vectors })
}

/// Implicit QL on a real symmetric tridiagonal matrix.
///
/// `off[i]` couples rows `i` and `i + 1`; `off[n-1]` is ignored. When `z` is
/// given (row-major n×n) the rotations are accumulated into it.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use approx::assert_abs_diff_eq;

    type M = CMatrix<f64>;

    fn pseudo_random_hermitian(n: usize, seed: u64) -> M {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = M::from_fn(n, |_, _| cx(next(), next()));
        (&g + &g.adjoint()).scale_re(0.5)
    }

    #[test]
    fn pauli_and_projector_examples() {
        let v = hermitian_eigs(&M::sigma_z()).unwrap();
        assert_abs_diff_eq!(v[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        assert_eq!(hermitian_eigs(&M::zeros(3)).unwrap(), vec![0.0; 3]);
        let proj = (&M::identity(2) + &M::sigma_x()).scale_re(0.5);
        let v = hermitian_eigs(&proj).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        let y = hermitian_eigs(&M::sigma_y()).unwrap();
        assert_abs_diff_eq!(y[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        assert!(matches!(hermitian_eigs(&M::sigma_minus()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (5, 4), (16, 5), (40, 6), (128, 7)] {
            let a = pseudo_random_hermitian(n, seed);
            let eig = eigh(&a).unwrap();
            let scale = a.max_abs().max(1.0);
            let resid = (&eig.reconstruct() - &a).max_abs();
            assert!(resid <= 1e-10 * scale, "n={n} resid={resid}");
            let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
            assert!((&vtv - &M::identity(n)).max_abs() < 1e-10, "n={n}");
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let trace: f64 = eig.values.iter().sum();
            assert!((trace - a.trace().re).abs() <= 1e-10 * n as f64 * scale);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let a = M::real_diag(&[2.0, 2.0, -1.0, 2.0]);
        let eig = eigh(&a).unwrap();
        assert_eq!(eig.values.len(), 4);
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        for &v in &eig.values[1..] {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-14);
        }
        assert!((&eig.reconstruct() - &a).max_abs() < 1e-13);
    }

    #[test]
    fn f32_eigenvalues() {
        let a = CMatrix::<f32>::from_fn(3, |i, j| if i == j { cx(i as f32, 0.0) } else { cx(0.1, 0.0) });
        let v = hermitian_eigs(&a).unwrap();
        let sum: f32 = v.iter().sum();
        assert!((sum - 3.0).abs() < 1e-5);
    }
}
