//! Small dense linear algebra: pivoted Householder QR least squares, a cyclic
//! Jacobi symmetric eigensolver, and Cholesky factorization.
//!
//! Problem sizes here are tiny (designs up to a few thousand rows by ~15
//! columns, symmetric matrices up to the grid size), so hand-rolled kernels
//! keep the crate dependency-light and fully generic over the scalar type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Relative rank tolerance for the pivoted QR.
const RANK_TOL: f64 = 1e-10;

/// Least-squares solve of `A X = B` via Householder QR with column pivoting.
///
/// Requires `A` to have more rows than columns and full column rank; a
/// trailing R diagonal below `1e-10 * |r_00|` is reported as rank deficiency.
pub fn qr_least_squares<F: Scalar>(a: ArrayView2<F>, b: ArrayView2<F>) -> Result<Array2<F>> {
    let (n, p) = a.dim();
    let q = b.ncols();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.nrows(),
            context: "right-hand side rows vs design rows",
        });
    }
    if n <= p {
        return Err(Error::Underdetermined { rows: n, cols: p });
    }

    let mut r = a.to_owned();
    let mut rhs = b.to_owned();
    let mut perm: Vec<usize> = (0..p).collect();
    let tol = F::from_f64_(RANK_TOL);

    for k in 0..p {
        // Column pivot: largest remaining sub-column norm.
        let mut best = k;
        let mut best_norm = F::zero();
        for j in k..p {
            let nrm: F = (k..n).map(|i| r[[i, j]] * r[[i, j]]).sum();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best != k {
            perm.swap(k, best);
            for i in 0..n {
                let tmp = r[[i, k]];
                r[[i, k]] = r[[i, best]];
                r[[i, best]] = tmp;
            }
        }

        // Householder reflector for rows k..n of column k.
        let norm = best_norm.sqrt();
        if norm > F::zero() {
            let alpha = if r[[k, k]] >= F::zero() { -norm } else { norm };
            let mut v: Vec<F> = (k..n).map(|i| r[[i, k]]).collect();
            v[0] -= alpha;
            let vnorm2: F = v.iter().map(|&x| x * x).sum();
            if vnorm2 > F::zero() {
                let two = F::from_f64_(2.0);
                for j in k..p {
                    let dot: F = (k..n).map(|i| v[i - k] * r[[i, j]]).sum();
                    let scale = two * dot / vnorm2;
                    for i in k..n {
                        r[[i, j]] = r[[i, j]] - scale * v[i - k];
                    }
                }
                for j in 0..q {
                    let dot: F = (k..n).map(|i| v[i - k] * rhs[[i, j]]).sum();
                    let scale = two * dot / vnorm2;
                    for i in k..n {
                        rhs[[i, j]] = rhs[[i, j]] - scale * v[i - k];
                    }
                }
            }
            r[[k, k]] = alpha;
            for i in (k + 1)..n {
                r[[i, k]] = F::zero();
            }
        }

        if r[[k, k]].abs() <= tol * r[[0, 0]].abs() {
            return Err(Error::RankDeficient { rank: k, cols: p });
        }
    }

    // Back substitution, then un-pivot.
    let mut coefs = Array2::zeros((p, q));
    for j in 0..q {
        for k in (0..p).rev() {
            let mut s = rhs[[k, j]];
            for m in (k + 1)..p {
                s -= r[[k, m]] * coefs[[perm[m], j]];
            }
            coefs[[perm[k], j]] = s / r[[k, k]];
        }
    }
    Ok(coefs)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (ascending) and the matrix of column eigenvectors.
pub fn jacobi_eigh<F: Scalar>(a: ArrayView2<F>) -> (Array1<F>, Array2<F>) {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "jacobi_eigh requires a square matrix");
    let mut m = a.to_owned();
    let mut v: Array2<F> = Array2::eye(d);
    let eps = F::from_f64_(1e-14);
    let scale: F = a.iter().map(|&x| x * x).sum::<F>().sqrt() + F::epsilon();

    for _sweep in 0..100 {
        let off: F = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<F>()
            .sqrt();
        if off <= eps * scale {
            break;
        }
        for pi in 0..d {
            for qi in (pi + 1)..d {
                let apq = m[[pi, qi]];
                if apq.abs() <= eps * scale {
                    continue;
                }
                let app = m[[pi, pi]];
                let aqq = m[[qi, qi]];
                let theta = (aqq - app) / (F::from_f64_(2.0) * apq);
                let t = {
                    let sign = if theta >= F::zero() { F::one() } else { -F::one() };
                    sign / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;

                for i in 0..d {
                    let mip = m[[i, pi]];
                    let miq = m[[i, qi]];
                    m[[i, pi]] = c * mip - s * miq;
                    m[[i, qi]] = s * mip + c * miq;
                }
                for j in 0..d {
                    let mpj = m[[pi, j]];
                    let mqj = m[[qi, j]];
                    m[[pi, j]] = c * mpj - s * mqj;
                    m[[qi, j]] = s * mpj + c * mqj;
                }
                for i in 0..d {
                    let vip = v[[i, pi]];
                    let viq = v[[i, qi]];
                    v[[i, pi]] = c * vip - s * viq;
                    v[[i, qi]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut vals: Vec<(F, usize)> = (0..d).map(|i| (m[[i, i]], i)).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigvals = Array1::from_iter(vals.iter().map(|&(x, _)| x));
    let mut eigvecs = Array2::zeros((d, d));
    for (new_j, &(_, old_j)) in vals.iter().enumerate() {
        for i in 0..d {
            eigvecs[[i, new_j]] = v[[i, old_j]];
        }
    }
    (eigvals, eigvecs)
}

/// Lower Cholesky factor of a positive-definite matrix, or `None` when the
/// matrix is not numerically positive definite.
pub fn cholesky<F: Scalar>(a: ArrayView2<F>) -> Option<Array2<F>> {
    let d = a.nrows();
    if a.ncols() != d {
        return None;
    }
    let mut l: Array2<F> = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= F::zero() {
                    return None;
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// A factor `B` with `B Bᵀ ≈ A` for symmetric positive semi-definite `A`.
///
/// Falls back to an eigenvalue factor (negative eigenvalues clamped to zero)
/// when the Cholesky factorization fails, so singular covariances are fine.
pub fn psd_factor<F: Scalar>(a: ArrayView2<F>) -> Array2<F> {
    if let Some(l) = cholesky(a) {
        return l;
    }
    let (vals, vecs) = jacobi_eigh(a);
    let mut b = vecs;
    for (mut col, &lam) in b.axis_iter_mut(Axis(1)).zip(vals.iter()) {
        let s = if lam > F::zero() { lam.sqrt() } else { F::zero() };
        col.mapv_inplace(|x| x * s);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn qr_recovers_exact_solution() {
        let a = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let truth = array![[2.0], [-0.5]];
        let b = a.dot(&truth);
        let x = qr_least_squares(a.view(), b.view()).unwrap();
        assert_abs_diff_eq!(x[[0, 0]], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[[1, 0]], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn qr_detects_rank_deficiency() {
        // Second column is 3x the first.
        let a = array![[1.0, 3.0], [2.0, 6.0], [-1.0, -3.0]];
        let b = array![[1.0], [2.0], [0.5]];
        match qr_least_squares(a.view(), b.view()) {
            Err(Error::RankDeficient { rank, cols }) => {
                assert_eq!(cols, 2);
                assert!(rank < 2);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn qr_rejects_underdetermined() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[1.0], [1.0]];
        assert!(matches!(
            qr_least_squares(a.view(), b.view()),
            Err(Error::Underdetermined { .. })
        ));
    }

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(a.view());
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // Reconstruct.
        let d = Array2::from_diag(&vals);
        let rec = vecs.dot(&d).dot(&vecs.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let rec = l.dot(&l.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let indef = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(indef.view()).is_none());
    }

    #[test]
    fn psd_factor_handles_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let b = psd_factor(a.view());
        let rec = b.dot(&b.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        let z = Array2::<f64>::zeros((3, 3));
        let b = psd_factor(z.view());
        assert!(b.iter().all(|&v| v.abs() < 1e-12));
    }
}
