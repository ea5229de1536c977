//! Time grids, discretized functional samples, and trapezoid quadrature.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};

/// Ordered observation times on `[0, 1]`, shared by every curve in a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<F: Scalar = f64> {
    points: Vec<F>,
}

impl<F: Scalar> TimeGrid<F> {
    pub fn new(points: Vec<F>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points.first().copied().unwrap() < F::zero()
            || points.last().copied().unwrap() > F::one()
        {
            return Err(Error::InvalidGrid("grid must lie inside [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points spanning `[0, 1]`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let h = F::one() / F::from_usize_(n - 1);
        Self::new((0..n).map(|i| F::from_usize_(i) * h).collect())
    }

    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn n_grid(&self) -> usize {
        self.points.len()
    }

    /// Composite trapezoid weights for this grid.
    pub fn trapezoid_weights(&self) -> Array1<F> {
        let n = self.points.len();
        let half = F::from_f64_(0.5);
        let mut w = Array1::zeros(n);
        for l in 0..n {
            let left = if l == 0 { self.points[0] } else { self.points[l - 1] };
            let right = if l == n - 1 { self.points[n - 1] } else { self.points[l + 1] };
            w[l] = (right - left) * half;
        }
        w
    }
}

/// `n` curves observed on a shared grid; rows are subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample<F: Scalar = f64> {
    values: Array2<F>,
    grid: TimeGrid<F>,
}

impl<F: Scalar> FunctionalSample<F> {
    pub fn new(values: Array2<F>, grid: TimeGrid<F>) -> Result<Self> {
        if values.ncols() != grid.n_grid() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_grid(),
                got: values.ncols(),
                context: "functional sample column count vs grid",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite curve value".into()));
        }
        Ok(Self { values, grid })
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Composite trapezoid value of the integral of `values` over the grid span.
pub fn integrate<F: Scalar>(values: ArrayView1<F>, grid: &TimeGrid<F>) -> Result<F> {
    if values.len() != grid.n_grid() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_grid(),
            got: values.len(),
            context: "integrand length vs grid",
        });
    }
    let w = grid.trapezoid_weights();
    Ok(values.iter().zip(w.iter()).map(|(&v, &wl)| v * wl).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::<f64>::new(vec![0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![0.2, 0.1]).is_err());
        assert!(TimeGrid::new(vec![-0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.5]).is_err());
    }

    #[test]
    fn uniform_grid_spans_unit_interval() {
        let g = TimeGrid::<f64>::uniform(101).unwrap();
        assert_eq!(g.n_grid(), 101);
        assert_abs_diff_eq!(g.points()[0], 0.0);
        assert_abs_diff_eq!(g.points()[100], 1.0);
        assert_abs_diff_eq!(g.points()[50], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn integrate_constant_is_exact() {
        let g = TimeGrid::<f64>::uniform(11).unwrap();
        let ones = Array1::ones(11);
        assert_abs_diff_eq!(integrate(ones.view(), &g).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn integrate_full_period_sine_is_near_zero() {
        let g = TimeGrid::<f64>::uniform(101).unwrap();
        let v: Array1<f64> = g
            .points()
            .iter()
            .map(|&t| (2.0 * std::f64::consts::PI * t).sin())
            .collect();
        assert!(integrate(v.view(), &g).unwrap().abs() < 1e-3);
    }

    #[test]
    fn integrate_t_squared() {
        let g = TimeGrid::<f64>::uniform(1001).unwrap();
        let v: Array1<f64> = g.points().iter().map(|&t| t * t).collect();
        assert_abs_diff_eq!(integrate(v.view(), &g).unwrap(), 1.0 / 3.0, epsilon = 1e-5);
    }

    #[test]
    fn integrate_length_mismatch_errors() {
        let g = TimeGrid::<f64>::uniform(11).unwrap();
        let v = Array1::ones(10);
        assert!(integrate(v.view(), &g).is_err());
    }

    // Trapezoid error is O(h^2): halving the spacing cuts the error on t^3
    // by close to 4x.
    #[test]
    fn quadrature_second_order_on_cubic() {
        let err = |n: usize| {
            let g = TimeGrid::<f64>::uniform(n).unwrap();
            let v: Array1<f64> = g.points().iter().map(|&t| t * t * t).collect();
            (integrate(v.view(), &g).unwrap() - 0.25).abs()
        };
        let e1 = err(101);
        let e2 = err(201);
        assert!(e1 / e2 >= 3.9, "error ratio {} too small", e1 / e2);
    }

    #[test]
    fn sample_requires_matching_width() {
        let g = TimeGrid::<f64>::uniform(5).unwrap();
        assert!(FunctionalSample::new(Array2::zeros((3, 4)), g.clone()).is_err());
        assert!(FunctionalSample::new(Array2::zeros((3, 5)), g).is_ok());
    }
}
