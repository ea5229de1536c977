//! The five estimators of the coefficient curve — Oracle, Naive, PW-2SLS,
//! MULTI-2SLS, IV-SIMEX — plus BIC selection of the basis dimension.

use crate::basis::{build_bspline_basis, project_scores, reconstruct_coefficient, BasisSystem};
use crate::error::{Error, Result};
use crate::grid::FunctionalSample;
use crate::linalg::{psd_factor, qr_least_squares};
use crate::linmod::{cross_covariance, nearest_psd, ols_fit};
use crate::simgen::substream_rng;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Estimator tags; ordering matches the simulation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    Oracle,
    Multi2sls,
    Pw2sls,
    Simex,
    Naive,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Oracle,
        EstimatorKind::Multi2sls,
        EstimatorKind::Pw2sls,
        EstimatorKind::Simex,
        EstimatorKind::Naive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Oracle => "Oracle",
            EstimatorKind::Multi2sls => "MULTI-2SLS",
            EstimatorKind::Pw2sls => "PW-2SLS",
            EstimatorKind::Simex => "SIMEX",
            EstimatorKind::Naive => "Naive",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "oracle" => Ok(EstimatorKind::Oracle),
            "multi2sls" | "multi" => Ok(EstimatorKind::Multi2sls),
            "pw2sls" | "pw" => Ok(EstimatorKind::Pw2sls),
            "simex" => Ok(EstimatorKind::Simex),
            "naive" => Ok(EstimatorKind::Naive),
            _ => Err(Error::InvalidConfig(format!("unknown estimator '{s}'"))),
        }
    }
}

/// One fitted scalar-on-function model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub beta0: f64,
    pub omega: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta1_curve: Array1<f64>,
    pub k: usize,
    pub estimator: EstimatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Extrapolant {
    #[default]
    Quadratic,
}

/// SIMEX tuning: the λ grid, simulation count per λ, and extrapolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimexConfig {
    pub lambda_grid: Vec<f64>,
    pub n_sim: usize,
    #[serde(default)]
    pub extrapolant: Extrapolant,
}

impl Default for SimexConfig {
    fn default() -> Self {
        Self {
            lambda_grid: default_lambda_grid(2.0001, 0.05),
            n_sim: 50,
            extrapolant: Extrapolant::Quadratic,
        }
    }
}

/// λ values 0.0001, 0.0501, … up to `max` in steps of `step`.
pub fn default_lambda_grid(max: f64, step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut lam = 1e-4;
    while lam <= max + 1e-12 {
        grid.push(lam);
        lam += step;
    }
    grid
}

impl SimexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 {
            return Err(Error::InvalidConfig("simex n_sim must be >= 1".into()));
        }
        if self.lambda_grid.len() < 3 {
            return Err(Error::InvalidConfig(
                "simex lambda grid needs at least 3 points for a quadratic extrapolant".into(),
            ));
        }
        if self.lambda_grid[0] <= 0.0 {
            return Err(Error::InvalidConfig("simex lambdas must be > 0".into()));
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "simex lambda grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Design matrix `[1 | scores | Z]`.
fn assemble_design(scores: ArrayView2<f64>, z: ArrayView2<f64>) -> Array2<f64> {
    let n = scores.nrows();
    let k = scores.ncols();
    let p = z.ncols();
    let mut d = Array2::zeros((n, 1 + k + p));
    d.column_mut(0).fill(1.0);
    d.slice_mut(s![.., 1..1 + k]).assign(&scores);
    d.slice_mut(s![.., 1 + k..]).assign(&z);
    d
}

struct OutcomeFit {
    beta0: f64,
    omega: Array1<f64>,
    gamma: Array1<f64>,
    rss: f64,
}

fn fit_outcome(
    scores: ArrayView2<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    weights: Option<ArrayView1<f64>>,
) -> Result<OutcomeFit> {
    let k = scores.ncols();
    let design = assemble_design(scores, z);
    let fit = ols_fit(design.view(), y, weights)?;
    Ok(OutcomeFit {
        beta0: fit.coefficients[0],
        omega: fit.coefficients.slice(s![1..1 + k]).to_owned(),
        gamma: fit.coefficients.slice(s![1 + k..]).to_owned(),
        rss: fit.rss,
    })
}

fn finish(
    which: EstimatorKind,
    fit: OutcomeFit,
    basis: &BasisSystem<f64>,
) -> Result<FitResult> {
    let beta1_curve = reconstruct_coefficient(fit.omega.view(), basis)?;
    Ok(FitResult {
        beta0: fit.beta0,
        omega: fit.omega,
        gamma: fit.gamma,
        beta1_curve,
        k: basis.k(),
        estimator: which,
    })
}

pub(crate) fn bic_value(rss: f64, n: usize, k: usize, p: usize) -> f64 {
    (rss / n as f64).ln() + ((k + p) as f64) * (n as f64).ln() / n as f64
}

/// BIC selection of the basis dimension from the observed proxy curves.
/// Ties break toward the smaller K.
pub fn select_k_bic(
    w: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k_range: (usize, usize),
    order: usize,
    weights: Option<ArrayView1<f64>>,
) -> Result<usize> {
    let (k_min, k_max) = k_range;
    let n = w.n();
    let p = z.ncols();
    if k_min < order || k_min > k_max {
        return Err(Error::InvalidConfig(format!(
            "K range [{k_min}, {k_max}] must satisfy order <= K_min <= K_max"
        )));
    }
    if k_max + p + 2 > n {
        return Err(Error::InvalidConfig(format!(
            "K_max = {k_max} too large for n = {n} with p = {p}"
        )));
    }
    let mut best: Option<(f64, usize)> = None;
    for k in k_min..=k_max {
        let attempt = (|| -> Result<f64> {
            let basis = build_bspline_basis(k, order, w.grid())?;
            let scores = project_scores(w, &basis)?;
            let fit = fit_outcome(scores.scores().view(), y, z, weights)?;
            Ok(bic_value(fit.rss, n, k, p))
        })();
        let bic = attempt.map_err(|e| Error::KAnnotated { k, source: Box::new(e) })?;
        match best {
            Some((b, _)) if bic >= b => {}
            _ => best = Some((bic, k)),
        }
    }
    Ok(best.expect("non-empty K range").1)
}

/// Naive estimator: regress on the error-prone proxy scores directly.
pub fn fit_naive(
    w: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    let basis = build_bspline_basis(k, order, w.grid())?;
    let scores = project_scores(w, &basis)?;
    let fit = fit_outcome(scores.scores().view(), y, z, weights)?;
    finish(EstimatorKind::Naive, fit, &basis)
}

/// Oracle estimator: the naive fit on the true latent predictor.
pub fn fit_oracle(
    x: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    let mut out = fit_naive(x, y, z, k, order, weights)?;
    out.estimator = EstimatorKind::Oracle;
    Ok(out)
}

/// Pointwise 2SLS: at every grid point regress `W(t)` on `[1, M(t)]`, then
/// use the fitted curves in the outcome regression.
pub fn fit_pw2sls(
    w: &FunctionalSample<f64>,
    m: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    if w.grid() != m.grid() {
        return Err(Error::GridMismatch);
    }
    let n = w.n();
    let n_grid = w.grid().n_grid();
    let mut what = Array2::zeros((n, n_grid));
    let mut design = Array2::ones((n, 2));
    for l in 0..n_grid {
        design.column_mut(1).assign(&m.values().column(l));
        let stage1 = ols_fit(design.view(), w.values().column(l), weights).map_err(|e| match e {
            Error::RankDeficient { .. } => Error::WeakInstrument {
                t: w.grid().points()[l],
            },
            other => other,
        })?;
        what.column_mut(l).assign(&stage1.fitted);
    }
    let what = FunctionalSample::new(what, w.grid().clone())?;
    let basis = build_bspline_basis(k, order, w.grid())?;
    let scores = project_scores(&what, &basis)?;
    let fit = fit_outcome(scores.scores().view(), y, z, weights)?;
    finish(EstimatorKind::Pw2sls, fit, &basis)
}

/// First-stage regression of each W score on all M scores jointly, honoring
/// optional observation weights, with one shared decomposition.
fn first_stage_multi(
    w_scores: ArrayView2<f64>,
    m_scores: ArrayView2<f64>,
    weights: Option<ArrayView1<f64>>,
) -> Result<Array2<f64>> {
    let n = w_scores.nrows();
    let mut design = Array2::ones((n, 1 + m_scores.ncols()));
    design.slice_mut(s![.., 1..]).assign(&m_scores);
    let coefs = match weights {
        None => qr_least_squares(design.view(), w_scores),
        Some(wt) => {
            if let Some(i) = wt.iter().position(|&v| v <= 0.0) {
                return Err(Error::NonPositiveWeight(i));
            }
            let sw: Array1<f64> = wt.mapv(f64::sqrt);
            let mut wd = design.clone();
            for (mut row, &s) in wd.outer_iter_mut().zip(sw.iter()) {
                row.mapv_inplace(|v| v * s);
            }
            let mut wr = w_scores.to_owned();
            for (mut row, &s) in wr.outer_iter_mut().zip(sw.iter()) {
                row.mapv_inplace(|v| v * s);
            }
            qr_least_squares(wd.view(), wr.view())
        }
    }
    .map_err(|e| match e {
        Error::RankDeficient { .. } => Error::WeakInstrument { t: f64::NAN },
        other => other,
    })?;
    Ok(design.dot(&coefs))
}

/// Multivariate 2SLS: basis scores of W regressed on all basis scores of M
/// simultaneously, then the fitted scores enter the outcome regression.
pub fn fit_multi2sls(
    w: &FunctionalSample<f64>,
    m: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    if w.grid() != m.grid() {
        return Err(Error::GridMismatch);
    }
    let basis = build_bspline_basis(k, order, w.grid())?;
    let w_scores = project_scores(w, &basis)?.into_scores();
    let m_scores = project_scores(m, &basis)?.into_scores();
    let fitted = first_stage_multi(w_scores.view(), m_scores.view(), weights)?;
    let fit = fit_outcome(fitted.view(), y, z, weights)?;
    finish(EstimatorKind::Multi2sls, fit, &basis)
}

/// Measurement-error covariance of the proxy scores estimated through the
/// ratio-calibrated instrument: `Σ̂_UU = PSD( Σ̂_WW − sym(Σ̂_{M*W}) )`.
pub fn estimate_sigma_uu(
    w: &FunctionalSample<f64>,
    m: &FunctionalSample<f64>,
    basis: &BasisSystem<f64>,
) -> Result<Array2<f64>> {
    if w.grid() != m.grid() {
        return Err(Error::GridMismatch);
    }
    let n_grid = w.grid().n_grid();
    let w_mean = w.values().mean_axis(Axis(0)).unwrap();
    let m_mean = m.values().mean_axis(Axis(0)).unwrap();
    let mut m_star = m.values().clone();
    for l in 0..n_grid {
        if w_mean[l].abs() < 1e-12 {
            return Err(Error::RatioDegenerate {
                t: w.grid().points()[l],
            });
        }
        let delta = m_mean[l] / w_mean[l];
        m_star.column_mut(l).mapv_inplace(|v| v / delta);
    }
    let m_star = FunctionalSample::new(m_star, w.grid().clone())?;
    let w_scores = project_scores(w, basis)?.into_scores();
    let ms_scores = project_scores(&m_star, basis)?.into_scores();
    let sigma_ww = cross_covariance(w_scores.view(), w_scores.view())?;
    let sigma_mw = cross_covariance(ms_scores.view(), w_scores.view())?;
    let sym = (&sigma_mw + &sigma_mw.t()) * 0.5;
    nearest_psd((&sigma_ww - &sym).view())
}

/// SIMEX with a caller-supplied measurement-error covariance.
pub fn fit_simex_with_sigma(
    w: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
    cfg: &SimexConfig,
    seed: u64,
    sigma_uu: ArrayView2<f64>,
) -> Result<FitResult> {
    cfg.validate()?;
    if sigma_uu.nrows() != k || sigma_uu.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: sigma_uu.nrows(),
            context: "sigma_uu dimension vs K",
        });
    }
    let basis = build_bspline_basis(k, order, w.grid())?;
    let w_scores = project_scores(w, &basis)?.into_scores();
    let n = w_scores.nrows();
    let p = z.ncols();
    let n_coef = 1 + k + p;
    let factor = psd_factor(sigma_uu);
    let noise_free = factor.iter().all(|&v| v == 0.0);

    let l_count = cfg.lambda_grid.len();
    let mut averaged = Array2::zeros((l_count, n_coef));
    let mut noise = Array2::zeros((n, k));
    for (li, &lam) in cfg.lambda_grid.iter().enumerate() {
        let sqrt_lam = lam.sqrt();
        let mut acc = Array1::zeros(n_coef);
        for b in 0..cfg.n_sim {
            let perturbed = if noise_free {
                w_scores.clone()
            } else {
                // One RNG stream per (lambda, draw) pair keeps results
                // independent of execution order.
                let mut rng =
                    substream_rng(seed, "simex", ((li as u64) << 32) | b as u64);
                for v in noise.iter_mut() {
                    *v = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                }
                &w_scores + &(noise.dot(&factor.t()) * sqrt_lam)
            };
            let fit = fit_outcome(perturbed.view(), y, z, weights)?;
            acc[0] += fit.beta0;
            for j in 0..k {
                acc[1 + j] += fit.omega[j];
            }
            for j in 0..p {
                acc[1 + k + j] += fit.gamma[j];
            }
        }
        averaged
            .row_mut(li)
            .assign(&(acc / cfg.n_sim as f64));
    }

    // Quadratic extrapolation in lambda, evaluated at lambda = -1.
    let mut lam_design = Array2::ones((l_count, 3));
    for (li, &lam) in cfg.lambda_grid.iter().enumerate() {
        lam_design[[li, 1]] = lam;
        lam_design[[li, 2]] = lam * lam;
    }
    let quad = qr_least_squares(lam_design.view(), averaged.view())?;
    let at_minus_one: Array1<f64> =
        (0..n_coef).map(|j| quad[[0, j]] - quad[[1, j]] + quad[[2, j]]).collect();

    let omega = at_minus_one.slice(s![1..1 + k]).to_owned();
    let beta1_curve = reconstruct_coefficient(omega.view(), &basis)?;
    Ok(FitResult {
        beta0: at_minus_one[0],
        omega,
        gamma: at_minus_one.slice(s![1 + k..]).to_owned(),
        beta1_curve,
        k,
        estimator: EstimatorKind::Simex,
    })
}

/// IV-SIMEX: estimate Σ_UU through the ratio-calibrated instrument, add
/// synthetic score noise scaled by √λ, and extrapolate to λ = -1.
#[allow(clippy::too_many_arguments)]
pub fn fit_simex(
    w: &FunctionalSample<f64>,
    m: &FunctionalSample<f64>,
    y: ArrayView1<f64>,
    z: ArrayView2<f64>,
    k: usize,
    order: usize,
    weights: Option<ArrayView1<f64>>,
    cfg: &SimexConfig,
    seed: u64,
) -> Result<FitResult> {
    let basis = build_bspline_basis(k, order, w.grid())?;
    let sigma_uu = estimate_sigma_uu(w, m, &basis)?;
    fit_simex_with_sigma(w, y, z, k, order, weights, cfg, seed, sigma_uu.view())
}
