//! Clamped B-spline bases on `[0, 1]` and projection of curves onto basis scores.

use crate::error::{Error, Result};
use crate::grid::{FunctionalSample, TimeGrid};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};

/// A K-dimensional B-spline system evaluated on a fixed grid.
///
/// Knots are clamped at 0 and 1 with `K - order` equally spaced interior
/// knots, so the basis is a partition of unity with non-negative entries.
#[derive(Debug, Clone)]
pub struct BasisSystem<F: Scalar = f64> {
    k: usize,
    order: usize,
    knots: Vec<F>,
    grid: TimeGrid<F>,
    eval: Array2<F>,
    quad_weights: Array1<F>,
}

impl<F: Scalar> BasisSystem<F> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[F] {
        &self.knots
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    /// `n_grid x K` matrix of basis values `b_k(t_l)`.
    pub fn eval(&self) -> &Array2<F> {
        &self.eval
    }

    pub fn quad_weights(&self) -> &Array1<F> {
        &self.quad_weights
    }
}

/// Basis scores of a functional sample: `scores[i][k] ~ ∫ X_i(t) b_k(t) dt`.
#[derive(Debug, Clone)]
pub struct ScoreMatrix<'a, F: Scalar = f64> {
    scores: Array2<F>,
    basis: &'a BasisSystem<F>,
}

impl<'a, F: Scalar> ScoreMatrix<'a, F> {
    pub fn scores(&self) -> &Array2<F> {
        &self.scores
    }

    pub fn into_scores(self) -> Array2<F> {
        self.scores
    }

    pub fn basis(&self) -> &'a BasisSystem<F> {
        self.basis
    }
}

/// Full clamped knot vector: `order` copies of 0 and 1 with `k - order`
/// equally spaced interior knots.
fn clamped_knots<F: Scalar>(k: usize, order: usize) -> Vec<F> {
    let n_interior = k - order;
    let mut knots = Vec::with_capacity(k + order);
    knots.extend(std::iter::repeat(F::zero()).take(order));
    let denom = F::from_usize_(n_interior + 1);
    knots.extend((1..=n_interior).map(|j| F::from_usize_(j) / denom));
    knots.extend(std::iter::repeat(F::one()).take(order));
    knots
}

/// Index `i` with `knots[i] <= t < knots[i+1]`, clamped to the last
/// non-degenerate span when `t` hits the right boundary.
fn find_span<F: Scalar>(knots: &[F], k: usize, order: usize, t: F) -> usize {
    if t >= knots[k] {
        return k - 1;
    }
    let mut lo = order - 1;
    let mut hi = k;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Cox–de Boor recursion: the `order` non-vanishing basis functions at `t`,
/// i.e. `N_{span-order+1..=span}` in knot indexing.
fn nonzero_basis<F: Scalar>(knots: &[F], order: usize, span: usize, t: F) -> Vec<F> {
    let mut vals = vec![F::zero(); order];
    vals[0] = F::one();
    let mut left = vec![F::zero(); order];
    let mut right = vec![F::zero(); order];
    for j in 1..order {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = F::zero();
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = vals[r] / denom;
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
    vals
}

/// Evaluate all `k` basis functions at a single point.
pub fn eval_basis_row<F: Scalar>(knots: &[F], k: usize, order: usize, t: F) -> Vec<F> {
    let span = find_span(knots, k, order, t);
    let vals = nonzero_basis(knots, order, span, t);
    let mut row = vec![F::zero(); k];
    for (j, v) in vals.into_iter().enumerate() {
        row[span + 1 - order + j] = v;
    }
    row
}

/// Build a B-spline basis with `k` functions of the given order on `grid`.
pub fn build_bspline_basis<F: Scalar>(
    k: usize,
    order: usize,
    grid: &TimeGrid<F>,
) -> Result<BasisSystem<F>> {
    if order < 2 || k < order {
        return Err(Error::InvalidBasis { k, order });
    }
    let knots = clamped_knots::<F>(k, order);
    let mut eval = Array2::zeros((grid.n_grid(), k));
    for (l, &t) in grid.points().iter().enumerate() {
        let row = eval_basis_row(&knots, k, order, t);
        for (kk, v) in row.into_iter().enumerate() {
            eval[[l, kk]] = v;
        }
    }
    Ok(BasisSystem {
        k,
        order,
        knots,
        grid: grid.clone(),
        eval,
        quad_weights: grid.trapezoid_weights(),
    })
}

/// Trapezoid approximation of `∫ X_i(t) b_k(t) dt` for every curve and basis
/// function.
pub fn project_scores<'a, F: Scalar>(
    sample: &FunctionalSample<F>,
    basis: &'a BasisSystem<F>,
) -> Result<ScoreMatrix<'a, F>> {
    if sample.grid() != basis.grid() {
        return Err(Error::GridMismatch);
    }
    let mut weighted = basis.eval.clone();
    for (mut row, &w) in weighted.outer_iter_mut().zip(basis.quad_weights.iter()) {
        row.mapv_inplace(|v| v * w);
    }
    Ok(ScoreMatrix {
        scores: sample.values().dot(&weighted),
        basis,
    })
}

/// Coefficient curve on the grid: `eval · weights`.
pub fn reconstruct_coefficient<F: Scalar>(
    weights: ArrayView1<F>,
    basis: &BasisSystem<F>,
) -> Result<Array1<F>> {
    if weights.len() != basis.k {
        return Err(Error::DimensionMismatch {
            expected: basis.k,
            got: weights.len(),
            context: "coefficient weights vs basis size",
        });
    }
    Ok(basis.eval.dot(&weights))
}
