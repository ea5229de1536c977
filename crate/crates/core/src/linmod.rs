//! Least-squares fitting and covariance utilities shared by every estimator.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigh, qr_least_squares};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Result of one least-squares fit.
#[derive(Debug, Clone)]
pub struct RegressionFit<F: Scalar = f64> {
    pub coefficients: Array1<F>,
    pub fitted: Array1<F>,
    pub residuals: Array1<F>,
    pub rss: F,
}

/// Ordinary (or, with `weights`, weighted) least squares via pivoted QR.
pub fn ols_fit<F: Scalar>(
    design: ArrayView2<F>,
    response: ArrayView1<F>,
    weights: Option<ArrayView1<F>>,
) -> Result<RegressionFit<F>> {
    let n = design.nrows();
    if response.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: response.len(),
            context: "response length vs design rows",
        });
    }
    let rhs = response.insert_axis(Axis(1));
    let coefs = match weights {
        None => qr_least_squares(design, rhs)?,
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                    context: "weight length vs design rows",
                });
            }
            if let Some(i) = w.iter().position(|&wi| wi <= F::zero()) {
                return Err(Error::NonPositiveWeight(i));
            }
            let sw: Array1<F> = w.mapv(|wi| wi.sqrt());
            let mut wd = design.to_owned();
            for (mut row, &s) in wd.outer_iter_mut().zip(sw.iter()) {
                row.mapv_inplace(|v| v * s);
            }
            let wy: Array1<F> =
                response.iter().zip(sw.iter()).map(|(&y, &s)| y * s).collect();
            qr_least_squares(wd.view(), wy.insert_axis(Axis(1)).view())?
        }
    };
    let coefficients = coefs.column(0).to_owned();
    let fitted = design.dot(&coefficients);
    let residuals = &response - &fitted;
    let rss = match weights {
        None => residuals.iter().map(|&r| r * r).sum(),
        Some(w) => residuals.iter().zip(w.iter()).map(|(&r, &wi)| wi * r * r).sum(),
    };
    Ok(RegressionFit {
        coefficients,
        fitted,
        residuals,
        rss,
    })
}

/// Least squares with one shared decomposition of the design and `q`
/// response columns; column `j` of the result solves for response column `j`.
pub fn multiresponse_ols<F: Scalar>(
    design: ArrayView2<F>,
    responses: ArrayView2<F>,
) -> Result<Array2<F>> {
    qr_least_squares(design, responses)
}

/// Sample cross-covariance with the unbiased `n - 1` denominator.
pub fn cross_covariance<F: Scalar>(a: ArrayView2<F>, b: ArrayView2<F>) -> Result<Array2<F>> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.nrows(),
            context: "cross-covariance row counts",
        });
    }
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let a_mean = a.mean_axis(Axis(0)).unwrap();
    let b_mean = b.mean_axis(Axis(0)).unwrap();
    let ac = &a - &a_mean;
    let bc = &b - &b_mean;
    Ok(ac.t().dot(&bc) / F::from_usize_(n - 1))
}

const SYM_TOL: f64 = 1e-8;

/// Projects a symmetric matrix onto the positive semi-definite cone by
/// clamping negative eigenvalues to zero.
pub fn nearest_psd<F: Scalar>(s: ArrayView2<F>) -> Result<Array2<F>> {
    let d = s.nrows();
    if s.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s.ncols(),
            context: "nearest_psd requires a square matrix",
        });
    }
    let mut max_dev = F::zero();
    for i in 0..d {
        for j in (i + 1)..d {
            let dev = (s[[i, j]] - s[[j, i]]).abs();
            if dev > max_dev {
                max_dev = dev;
            }
        }
    }
    let tol = F::from_f64_(SYM_TOL);
    if max_dev > tol {
        return Err(Error::AsymmetricInput {
            max_dev: max_dev.to_f64().unwrap_or(f64::NAN),
            tol: SYM_TOL,
        });
    }
    let sym = (&s + &s.t()) * F::from_f64_(0.5);
    let (vals, vecs) = jacobi_eigh(sym.view());
    let clamped = vals.mapv(|v| if v > F::zero() { v } else { F::zero() });
    let out = vecs.dot(&Array2::from_diag(&clamped)).dot(&vecs.t());
    // Exact symmetry of the output.
    Ok((&out + &out.t()) * F::from_f64_(0.5))
}

/// Convenience used by tests and metrics: max |entry|.
pub fn max_abs<F: Scalar>(a: ArrayView2<F>) -> F {
    a.iter().fold(F::zero(), |m, &v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_linear_response_has_zero_residuals() {
        let design = array![
            [1.0, 0.3, -1.0],
            [1.0, 1.1, 0.2],
            [1.0, -0.4, 2.2],
            [1.0, 0.9, -0.7],
            [1.0, 2.0, 0.0]
        ];
        let beta = array![0.5, -1.5, 2.0];
        let y = design.dot(&beta);
        let fit = ols_fit(design.view(), y.view(), None).unwrap();
        assert!(fit.residuals.iter().all(|&r: &f64| r.abs() < 1e-10));
        for (a, b) in fit.coefficients.iter().zip(beta.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    // Hand-solved normal equations for (0,1), (1,2), (2,2).
    #[test]
    fn simple_regression_hand_check() {
        let design = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]];
        let y = array![1.0, 2.0, 2.0];
        let fit = ols_fit(design.view(), y.view(), None).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 7.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_weights_match_unweighted() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let design = Array2::from_shape_fn((40, 3), |_| rng.gen::<f64>() - 0.5);
        let y: Array1<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
        let w = Array1::from_elem(40, 3.7);
        let unw = ols_fit(design.view(), y.view(), None).unwrap();
        let wtd = ols_fit(design.view(), y.view(), Some(w.view())).unwrap();
        for (a, b) in unw.coefficients.iter().zip(wtd.coefficients.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn normal_equations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let design = Array2::from_shape_fn((60, 4), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let y: Array1<f64> = (0..60).map(|_| rng.gen::<f64>()).collect();
        let fit = ols_fit(design.view(), y.view(), None).unwrap();
        let xtr = design.t().dot(&fit.residuals);
        let scale = max_abs(design.view());
        assert!(xtr.iter().all(|v| v.abs() < 1e-6 * scale));
        // fitted + residuals = response
        for i in 0..60 {
            assert_abs_diff_eq!(fit.fitted[i] + fit.residuals[i], y[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn multiresponse_matches_looped_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let design = Array2::from_shape_fn((200, 3), |_| rng.gen::<f64>() - 0.5);
        let ys = Array2::from_shape_fn((200, 4), |_| rng.gen::<f64>());
        let joint = multiresponse_ols(design.view(), ys.view()).unwrap();
        for j in 0..4 {
            let single = ols_fit(design.view(), ys.column(j), None).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(joint[[i, j]], single.coefficients[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn multiresponse_recovers_exact_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let design = Array2::from_shape_fn((30, 3), |_| rng.gen::<f64>() - 0.5);
        let b = array![[1.0, -2.0], [0.5, 0.0], [3.0, 1.5]];
        let ys = design.dot(&b);
        let est = multiresponse_ols(design.view(), ys.view()).unwrap();
        for (x, y) in est.iter().zip(b.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn cross_covariance_hand_check() {
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let c = cross_covariance(a.view(), a.view()).unwrap();
        assert_abs_diff_eq!(c[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[[0, 1]], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[[1, 0]], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[[1, 1]], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_covariance_constant_column_is_zero() {
        let a = Array2::from_elem((5, 1), 4.2);
        let c = cross_covariance(a.view(), a.view()).unwrap();
        assert_abs_diff_eq!(c[[0, 0]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_covariance_independent_columns_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let a = Array2::from_shape_fn((n, 2), |_| rng.gen::<f64>() - 0.5);
        let b = Array2::from_shape_fn((n, 2), |_| rng.gen::<f64>() - 0.5);
        let c = cross_covariance(a.view(), b.view()).unwrap();
        assert!(c.iter().all(|v| v.abs() < 0.02));
        assert!(cross_covariance(a.slice(ndarray::s![0..1, ..]), b.slice(ndarray::s![0..1, ..])).is_err());
    }

    #[test]
    fn nearest_psd_identity_and_clamp() {
        let eye = Array2::<f64>::eye(3);
        let p = nearest_psd(eye.view()).unwrap();
        for (x, y) in p.iter().zip(eye.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let d = array![[1.0, 0.0], [0.0, -0.5]];
        let p = nearest_psd(d.view()).unwrap();
        assert_abs_diff_eq!(p[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[[1, 1]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nearest_psd_rejects_asymmetry() {
        let a = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(
            nearest_psd(a.view()),
            Err(Error::AsymmetricInput { .. })
        ));
    }

    // Frobenius-nearest check: alternating projections (symmetrize + clamp)
    // from a different starting point converge to the same matrix.
    #[test]
    fn nearest_psd_matches_projection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let raw = Array2::from_shape_fn((5, 5), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let sym = (&raw + &raw.t()) * 0.5;
        let p = nearest_psd(sym.view()).unwrap();
        let (vals, _) = jacobi_eigh(p.view());
        assert!(vals.iter().all(|&v| v >= -1e-10));

        // Projected-gradient oracle: minimize ||X - sym||_F over PSD X by
        // repeated eigenvalue clamping of the symmetric part of the iterate.
        let mut x = Array2::<f64>::zeros((5, 5));
        for _ in 0..500 {
            let step = 0.5;
            let grad = (&x - &sym) * 2.0;
            let y = &x - &(grad * step);
            let ys = (&y + &y.t()) * 0.5;
            let (v, q) = jacobi_eigh(ys.view());
            let cl = v.mapv(|e: f64| e.max(0.0));
            x = q.dot(&Array2::from_diag(&cl)).dot(&q.t());
        }
        for (a, b) in x.iter().zip(p.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn nearest_psd_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let raw = Array2::from_shape_fn((4, 4), |_| rng.gen::<f64>() - 0.5);
        let sym = (&raw + &raw.t()) * 0.5;
        let once = nearest_psd(sym.view()).unwrap();
        let twice = nearest_psd(once.view()).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
