//! Reproducible data generation for the simulation studies: covariance
//! structures, multivariate samplers for three error laws, and the full
//! scenario generator.

use crate::error::{Error, Result};
use crate::grid::{integrate, FunctionalSample, TimeGrid};
use crate::linalg::{cholesky, psd_factor};
use crate::linmod::nearest_psd;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Covariance structure tags for the functional error terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CovStructure {
    Ind,
    Ar1,
    Cs,
    Un,
}

impl std::fmt::Display for CovStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CovStructure::Ind => "IND",
            CovStructure::Ar1 => "AR1",
            CovStructure::Cs => "CS",
            CovStructure::Un => "UN",
        };
        f.write_str(s)
    }
}

/// Marginal standard deviation plus correlation structure of one functional
/// error term. `sigma` is a standard deviation, not a variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub structure: CovStructure,
    pub rho: f64,
    pub sigma: f64,
}

impl CovarianceSpec {
    pub fn new(structure: CovStructure, rho: f64, sigma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidCorrelation(rho));
        }
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { structure, rho, sigma })
    }

    pub fn ar1(rho: f64, sigma: f64) -> Result<Self> {
        Self::new(CovStructure::Ar1, rho, sigma)
    }
}

/// Measurement-error laws for `U(t)`. All are scaled so the covariance is
/// exactly `sigma² R` regardless of the tail behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeDistribution {
    Normal,
    #[serde(rename = "t", alias = "student_t")]
    StudentT,
    Laplace,
}

impl std::fmt::Display for MeDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MeDistribution::Normal => "normal",
            MeDistribution::StudentT => "t",
            MeDistribution::Laplace => "laplace",
        };
        f.write_str(s)
    }
}

/// Degrees of freedom for the multivariate-t measurement error.
pub const STUDENT_T_DF: f64 = 4.0;

fn default_n_grid() -> usize {
    100
}

/// Complete parameterization of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    pub cov_x: CovarianceSpec,
    pub cov_u: CovarianceSpec,
    pub cov_m: CovarianceSpec,
    /// Instrument strength constant in `δ(t) = c·sin(2πt) + 1`.
    pub c: f64,
    pub me_dist: MeDistribution,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidConfig(format!("n must be >= 10, got {}", self.n)));
        }
        if self.n_grid < 20 {
            return Err(Error::InvalidConfig(format!(
                "n_grid must be >= 20, got {}",
                self.n_grid
            )));
        }
        if self.c < 0.0 {
            return Err(Error::InvalidConfig(format!("c must be >= 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// Bundled outcome, error-prone covariate W, instrument M, optional truth X,
/// error-free covariates Z, and optional per-observation weights.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Array1<f64>,
    pub w: FunctionalSample<f64>,
    pub m: FunctionalSample<f64>,
    pub x: Option<FunctionalSample<f64>>,
    pub z: Array2<f64>,
    pub z_names: Vec<String>,
    pub weights: Option<Array1<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Deterministic sub-stream derivation: mixes the master seed with a label
/// and index so each randomness source is independently reproducible.
pub fn substream_seed(master: u64, label: &str, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut h = splitmix(master);
    for &b in label.as_bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    splitmix(h ^ index)
}

pub fn substream_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, label, index))
}

/// Correlation matrix for one structure tag. The seed only affects UN.
pub fn build_correlation(
    structure: CovStructure,
    rho: f64,
    dim: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidCorrelation(rho));
    }
    let r = match structure {
        CovStructure::Ind => Array2::eye(dim),
        CovStructure::Ar1 => {
            Array2::from_shape_fn((dim, dim), |(i, j)| rho.powi((i as i64 - j as i64).unsigned_abs() as i32))
        }
        CovStructure::Cs => {
            Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { 1.0 } else { rho })
        }
        CovStructure::Un => {
            // Off-diagonal rho * u_ij with u_ij ~ Uniform(0.5, 1.5) drawn once
            // from the structure seed, clipped, PSD-projected, then
            // renormalized to unit diagonal.
            let mut rng = substream_rng(seed, "un-structure", 0);
            let mut m = Array2::eye(dim);
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let u: f64 = rng.gen_range(0.5..1.5);
                    let v = (rho * u).clamp(-0.99, 0.99);
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            let p = nearest_psd(m.view())?;
            let d: Array1<f64> = (0..dim).map(|i| p[[i, i]].max(1e-12).sqrt()).collect();
            Array2::from_shape_fn((dim, dim), |(i, j)| p[[i, j]] / (d[i] * d[j]))
        }
    };
    Ok(r)
}

/// Factor `L` with `L Lᵀ = sigma² R`; zero sigma yields the zero factor.
fn covariance_factor(cov: &CovarianceSpec, dim: usize, structure_seed: u64) -> Result<Array2<f64>> {
    let r = build_correlation(cov.structure, cov.rho, dim, structure_seed)?;
    let sig2 = &r * (cov.sigma * cov.sigma);
    if cov.sigma == 0.0 {
        return Ok(Array2::zeros((dim, dim)));
    }
    Ok(match cholesky(sig2.view()) {
        Some(l) => l,
        None => psd_factor(sig2.view()),
    })
}

/// i.i.d. mean-zero curves with covariance `sigma² R` under the requested
/// law. The underlying Gaussian draws are identical across sigma values so
/// scale sweeps reuse the same noise realizations.
pub fn sample_curves(
    n: usize,
    grid: &TimeGrid<f64>,
    cov: &CovarianceSpec,
    dist: MeDistribution,
    structure_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<FunctionalSample<f64>> {
    let d = grid.n_grid();
    let l = covariance_factor(cov, d, structure_seed)?;
    let mut values = Array2::zeros((n, d));
    let mut z = Array1::zeros(d);
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        }
        let scale = match dist {
            MeDistribution::Normal => 1.0,
            MeDistribution::StudentT => {
                // t with nu df, rescaled so the covariance is sigma^2 R.
                let g = ChiSquared::new(STUDENT_T_DF).unwrap().sample(rng);
                ((STUDENT_T_DF - 2.0) / g).sqrt()
            }
            MeDistribution::Laplace => {
                // Elliptical Laplace: Gaussian vector times sqrt(Exp(1)).
                let e: f64 = Exp1.sample(rng);
                e.sqrt()
            }
        };
        let row = l.dot(&z) * scale;
        values.row_mut(i).assign(&row);
    }
    FunctionalSample::new(values, grid.clone())
}

/// Logistic mean curve of the latent predictor.
pub fn mean_curve(t: f64) -> f64 {
    1.0 / (1.0 + (8.0 * (t - 0.5)).exp()) + 1.0
}

/// The coefficient curve used to generate outcomes: `β₁(t) = sin(2πt)`.
pub fn true_beta1(grid: &TimeGrid<f64>) -> Array1<f64> {
    grid.points()
        .iter()
        .map(|&t| (2.0 * std::f64::consts::PI * t).sin())
        .collect()
}

/// Generate one complete dataset under a scenario. Each randomness source
/// (X noise, U, η, Z_c, Z_b, ε) draws from its own named sub-stream of
/// `cfg.seed`, so the call is bit-reproducible and components are
/// independently stable under parameter sweeps that do not touch them.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Dataset> {
    cfg.validate()?;
    let grid = TimeGrid::uniform(cfg.n_grid)?;
    let n = cfg.n;

    let x_noise = sample_curves(
        n,
        &grid,
        &cfg.cov_x,
        MeDistribution::Normal,
        substream_seed(cfg.seed, "un-x", 0),
        &mut substream_rng(cfg.seed, "x", 0),
    )?;
    let u = sample_curves(
        n,
        &grid,
        &cfg.cov_u,
        cfg.me_dist,
        substream_seed(cfg.seed, "un-u", 0),
        &mut substream_rng(cfg.seed, "u", 0),
    )?;
    let eta = sample_curves(
        n,
        &grid,
        &cfg.cov_m,
        MeDistribution::Normal,
        substream_seed(cfg.seed, "un-eta", 0),
        &mut substream_rng(cfg.seed, "eta", 0),
    )?;

    let mu: Array1<f64> = grid.points().iter().map(|&t| mean_curve(t)).collect();
    let delta: Array1<f64> = grid
        .points()
        .iter()
        .map(|&t| cfg.c * (2.0 * std::f64::consts::PI * t).sin() + 1.0)
        .collect();

    let x_vals = x_noise.values() + &mu;
    let w_vals = &x_vals + u.values();
    let m_vals = &x_vals * &delta + eta.values();

    let mut rng_zc = substream_rng(cfg.seed, "zc", 0);
    let mut rng_zb = substream_rng(cfg.seed, "zb", 0);
    let mut rng_eps = substream_rng(cfg.seed, "eps", 0);
    let zc: Array1<f64> = (0..n)
        .map(|_| 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng_zc))
        .collect();
    let zb: Array1<f64> = (0..n)
        .map(|_| if rng_zb.gen::<f64>() < 0.6 { 1.0 } else { 0.0 })
        .collect();

    let beta1 = true_beta1(&grid);
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let integrand: Array1<f64> = x_vals
            .row(i)
            .iter()
            .zip(beta1.iter())
            .map(|(&x, &b)| x * b)
            .collect();
        let eps =
            0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng_eps);
        y[i] = integrate(integrand.view(), &grid)? + 2.0 * zc[i] + 0.6 * zb[i] + eps;
    }

    let mut z = Array2::zeros((n, 2));
    z.column_mut(0).assign(&zc);
    z.column_mut(1).assign(&zb);

    Ok(Dataset {
        y,
        w: FunctionalSample::new(w_vals, grid.clone())?,
        m: FunctionalSample::new(m_vals, grid.clone())?,
        x: Some(FunctionalSample::new(x_vals, grid)?),
        z,
        z_names: vec!["Zc".into(), "Zb".into()],
        weights: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn study1_cfg(n: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            n,
            n_grid: 100,
            cov_x: CovarianceSpec::ar1(0.5, 1.5).unwrap(),
            cov_u: CovarianceSpec::ar1(0.5, 1.0).unwrap(),
            cov_m: CovarianceSpec::ar1(0.5, 1.0).unwrap(),
            c: 0.5,
            me_dist: MeDistribution::Normal,
            seed,
        }
    }

    #[test]
    fn correlation_structures() {
        let ind = build_correlation(CovStructure::Ind, 0.0, 3, 0).unwrap();
        assert_eq!(ind, Array2::<f64>::eye(3));

        let ar1 = build_correlation(CovStructure::Ar1, 0.5, 3, 0).unwrap();
        let expect = ndarray::array![[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        for (a, b) in ar1.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }

        // CS eigenstructure: 1 + (d-1)rho once, 1 - rho repeated.
        let cs = build_correlation(CovStructure::Cs, 0.75, 4, 0).unwrap();
        let (vals, _) = crate::linalg::jacobi_eigh(cs.view());
        assert_abs_diff_eq!(vals[0], 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[3], 1.0 + 3.0 * 0.75, epsilon = 1e-10);

        assert!(build_correlation(CovStructure::Ar1, 1.0, 3, 0).is_err());
    }

    #[test]
    fn un_structure_is_valid_and_seed_stable() {
        let a = build_correlation(CovStructure::Un, 0.5, 6, 42).unwrap();
        let b = build_correlation(CovStructure::Un, 0.5, 6, 42).unwrap();
        assert_eq!(a, b);
        for i in 0..6 {
            assert_abs_diff_eq!(a[[i, i]], 1.0, epsilon = 1e-10);
        }
        let (vals, _) = crate::linalg::jacobi_eigh(a.view());
        assert!(vals.iter().all(|&v| v >= -1e-10));
        let c = build_correlation(CovStructure::Un, 0.5, 6, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_sigma_yields_zero_curves() {
        let grid = TimeGrid::uniform(30).unwrap();
        let cov = CovarianceSpec::ar1(0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_curves(5, &grid, &cov, MeDistribution::Normal, 0, &mut rng).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normal_sample_moments_match() {
        let grid = TimeGrid::uniform(20).unwrap();
        let cov = CovarianceSpec::ar1(0.5, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let s = sample_curves(n, &grid, &cov, MeDistribution::Normal, 0, &mut rng).unwrap();
        let c = crate::linmod::cross_covariance(s.values().view(), s.values().view()).unwrap();
        for l in 0..20 {
            assert!((c[[l, l]].sqrt() - 1.3).abs() < 0.013, "sd at {l}: {}", c[[l, l]].sqrt());
        }
        for l in 0..19 {
            let corr = c[[l, l + 1]] / (c[[l, l]].sqrt() * c[[l + 1, l + 1]].sqrt());
            assert!((corr - 0.5).abs() < 0.01, "lag-1 corr at {l}: {corr}");
        }
    }

    #[test]
    fn heavy_tail_samples_match_covariance() {
        let grid = TimeGrid::uniform(10).unwrap();
        let cov = CovarianceSpec::ar1(0.5, 1.0).unwrap();
        let target = build_correlation(CovStructure::Ar1, 0.5, 10, 0).unwrap();
        for dist in [MeDistribution::StudentT, MeDistribution::Laplace] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let s = sample_curves(100_000, &grid, &cov, dist, 0, &mut rng).unwrap();
            let c = crate::linmod::cross_covariance(s.values().view(), s.values().view()).unwrap();
            // t(4) has infinite kurtosis, so the sample covariance is noisy
            // even at n = 100,000; the tolerance reflects that.
            for (a, b) in c.iter().zip(target.iter()) {
                assert!((a - b).abs() < 0.08, "{dist}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn generate_dataset_is_deterministic() {
        let cfg = study1_cfg(50, 99);
        let d1 = generate_dataset(&cfg).unwrap();
        let d2 = generate_dataset(&cfg).unwrap();
        assert_eq!(d1.y, d2.y);
        assert_eq!(d1.w.values(), d2.w.values());
        assert_eq!(d1.m.values(), d2.m.values());
        assert_eq!(d1.z, d2.z);
    }

    #[test]
    fn zero_measurement_error_means_w_equals_x() {
        let mut cfg = study1_cfg(30, 7);
        cfg.cov_u.sigma = 0.0;
        let d = generate_dataset(&cfg).unwrap();
        assert_eq!(d.w.values(), d.x.as_ref().unwrap().values());
    }

    #[test]
    fn degenerate_instrument_equals_x() {
        let mut cfg = study1_cfg(30, 7);
        cfg.c = 0.0;
        cfg.cov_m.sigma = 0.0;
        let d = generate_dataset(&cfg).unwrap();
        let x = d.x.as_ref().unwrap().values();
        for (a, b) in d.m.values().iter().zip(x.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    // LLN check on mean(Y): ∫ sin(2πt) μ_X(t) dt + 0.6·0.6.
    #[test]
    fn outcome_mean_matches_quadrature_oracle() {
        let cfg = study1_cfg(100_000, 12345);
        let d = generate_dataset(&cfg).unwrap();
        let grid: TimeGrid = TimeGrid::uniform(cfg.n_grid).unwrap();
        // Fine-grid quadrature oracle for the deterministic part.
        let fine: TimeGrid = TimeGrid::uniform(10_001).unwrap();
        let integrand: Array1<f64> = fine
            .points()
            .iter()
            .map(|&t: &f64| (2.0 * std::f64::consts::PI * t).sin() * mean_curve(t))
            .collect();
        let det = integrate(integrand.view(), &fine).unwrap();
        assert!((det - 0.225).abs() < 0.002, "oracle integral {det}");
        let _ = grid;
        let mean_y = d.y.mean().unwrap();
        assert!((mean_y - (det + 0.36)).abs() < 0.02, "mean(Y) = {mean_y}");
    }

    // Exogeneity by construction: corr(M(t), U(s)) ~ 0 on a sub-grid.
    #[test]
    fn instrument_exogenous_to_measurement_error() {
        let cfg = study1_cfg(100_000, 5);
        let d = generate_dataset(&cfg).unwrap();
        let x = d.x.as_ref().unwrap().values();
        let u_vals = d.w.values() - x;
        let sub: Vec<usize> = vec![0, 24, 49, 74, 99];
        let m_sub = Array2::from_shape_fn((cfg.n, 5), |(i, j)| d.m.values()[[i, sub[j]]]);
        let u_sub = Array2::from_shape_fn((cfg.n, 5), |(i, j)| u_vals[[i, sub[j]]]);
        let c_mu = crate::linmod::cross_covariance(m_sub.view(), u_sub.view()).unwrap();
        let c_mm = crate::linmod::cross_covariance(m_sub.view(), m_sub.view()).unwrap();
        let c_uu = crate::linmod::cross_covariance(u_sub.view(), u_sub.view()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let corr = c_mu[[i, j]] / (c_mm[[i, i]].sqrt() * c_uu[[j, j]].sqrt());
                assert!(corr.abs() < 0.02, "corr(M(t{i}), U(s{j})) = {corr}");
            }
        }
    }

    #[test]
    fn marginal_sd_approaches_sigma() {
        let cfg = study1_cfg(100_000, 31);
        let d = generate_dataset(&cfg).unwrap();
        let x = d.x.as_ref().unwrap().values();
        let c = crate::linmod::cross_covariance(x.view(), x.view()).unwrap();
        for l in (0..100).step_by(13) {
            let sd = c[[l, l]].sqrt();
            assert!((sd - 1.5).abs() / 1.5 < 0.01, "sd at {l}: {sd}");
        }
    }

    #[test]
    fn scenario_serializes_round_trip() {
        let cfg = study1_cfg(100, 7);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }
}
