//! Replicate-level and aggregate performance measures for estimated
//! coefficient curves.

use crate::error::{Error, Result};
use crate::grid::{integrate, TimeGrid};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1, Axis};

/// A stack of replicate coefficient curves with the generating truth.
#[derive(Debug, Clone)]
pub struct CurveEnsemble<F: Scalar = f64> {
    curves: Array2<F>,
    truth: Array1<F>,
    grid: TimeGrid<F>,
}

impl<F: Scalar> CurveEnsemble<F> {
    pub fn new(curves: Array2<F>, truth: Array1<F>, grid: TimeGrid<F>) -> Result<Self> {
        if curves.nrows() == 0 {
            return Err(Error::InsufficientData { need: 1, got: 0 });
        }
        if curves.ncols() != grid.n_grid() || truth.len() != grid.n_grid() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_grid(),
                got: curves.ncols(),
                context: "ensemble curve width vs grid",
            });
        }
        Ok(Self { curves, truth, grid })
    }

    pub fn n_replicates(&self) -> usize {
        self.curves.nrows()
    }

    pub fn curves(&self) -> &Array2<F> {
        &self.curves
    }

    pub fn truth(&self) -> &Array1<F> {
        &self.truth
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    fn mean_curve(&self) -> Array1<F> {
        self.curves.mean_axis(Axis(0)).unwrap()
    }
}

/// Grid-averaged squared bias of the replicate-mean curve.
pub fn abias2<F: Scalar>(ens: &CurveEnsemble<F>) -> F {
    let mean = ens.mean_curve();
    let n_grid = F::from_usize_(ens.grid.n_grid());
    mean.iter()
        .zip(ens.truth.iter())
        .map(|(&m, &t)| (m - t) * (m - t))
        .sum::<F>()
        / n_grid
}

/// Average over replicates of the grid-mean squared deviation from the
/// ensemble mean curve; denominator is the replicate count, not R - 1.
pub fn avar<F: Scalar>(ens: &CurveEnsemble<F>) -> F {
    let mean = ens.mean_curve();
    let n_grid = F::from_usize_(ens.grid.n_grid());
    let r = F::from_usize_(ens.n_replicates());
    ens.curves
        .outer_iter()
        .map(|curve| {
            curve
                .iter()
                .zip(mean.iter())
                .map(|(&c, &m)| (c - m) * (c - m))
                .sum::<F>()
                / n_grid
        })
        .sum::<F>()
        / r
}

pub fn aimse<F: Scalar>(ens: &CurveEnsemble<F>) -> F {
    abias2(ens) + avar(ens)
}

/// `100 · sqrt( ∫(truth - estimate)² dt / ∫truth² dt )`.
pub fn mspee<F: Scalar>(
    estimate: ArrayView1<F>,
    truth: ArrayView1<F>,
    grid: &TimeGrid<F>,
) -> Result<F> {
    let diff2: Array1<F> = estimate
        .iter()
        .zip(truth.iter())
        .map(|(&e, &t)| (t - e) * (t - e))
        .collect();
    let truth2: Array1<F> = truth.iter().map(|&t| t * t).collect();
    let num = integrate(diff2.view(), grid)?;
    let den = integrate(truth2.view(), grid)?;
    Ok(F::from_f64_(100.0) * (num / den).sqrt())
}

/// Mean absolute relative difference (in percent) between a corrected curve
/// and the naive curve, skipping near-zero naive points.
///
/// Returns the percent difference and the number of excluded grid points.
pub fn percent_difference<F: Scalar>(
    corrected: ArrayView1<F>,
    naive: ArrayView1<F>,
) -> Result<(F, usize)> {
    if corrected.len() != naive.len() {
        return Err(Error::DimensionMismatch {
            expected: naive.len(),
            got: corrected.len(),
            context: "percent_difference curve lengths",
        });
    }
    let cutoff = F::from_f64_(1e-12);
    let mut acc = F::zero();
    let mut used = 0usize;
    for (&c, &nv) in corrected.iter().zip(naive.iter()) {
        if nv.abs() < cutoff {
            continue;
        }
        acc += ((c - nv) / nv).abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidConfig(
            "naive curve is zero everywhere; percent difference undefined".into(),
        ));
    }
    let excluded = naive.len() - used;
    Ok((acc / F::from_usize_(used) * F::from_f64_(100.0), excluded))
}

/// Empirical quantile with linear interpolation between order statistics
/// (the common statistical default, R's type 7). `sorted` must be ascending
/// and nonempty; `p` in [0, 1].
pub fn quantile_linear<F: Scalar>(sorted: &[F], p: F) -> Result<F> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    if p < F::zero() || p > F::one() {
        return Err(Error::InvalidConfig(format!(
            "quantile probability must be in [0, 1], got {p}"
        )));
    }
    let h = F::from_usize_(sorted.len() - 1) * p;
    let lo = h.floor();
    let idx = lo
        .to_usize()
        .expect("floor of in-range index")
        .min(sorted.len() - 1);
    if idx + 1 == sorted.len() {
        return Ok(sorted[idx]);
    }
    Ok(sorted[idx] + (h - lo) * (sorted[idx + 1] - sorted[idx]))
}
