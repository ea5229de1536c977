//! Hard-coded scenario grids for the five simulation studies, so each table
//! is reproducible with one command.

use crate::error::{Error, Result};
use crate::simgen::{CovStructure, CovarianceSpec, MeDistribution, ScenarioConfig};
use serde::{Deserialize, Serialize};

/// One labeled scenario inside a preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetScenario {
    pub label: String,
    pub config: ScenarioConfig,
}

pub const PRESET_NAMES: [&str; 5] = ["study1", "study2", "study3", "study4", "study5"];

/// The shared baseline: AR(1) with rho = 0.5 for every functional term,
/// sigma_X = 1.5, sigma_U = sigma_M = 1, c = 0.5, Gaussian measurement
/// error, n = 1000, 100 grid points.
pub fn baseline(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n: 1000,
        n_grid: 100,
        cov_x: CovarianceSpec::ar1(0.5, 1.5).expect("valid rho"),
        cov_u: CovarianceSpec::ar1(0.5, 1.0).expect("valid rho"),
        cov_m: CovarianceSpec::ar1(0.5, 1.0).expect("valid rho"),
        c: 0.5,
        me_dist: MeDistribution::Normal,
        seed,
    }
}

/// Scenario grid for a named preset. Every row shares the same master seed,
/// which keeps estimators that ignore the instrument identical across rows
/// that only vary the instrument.
pub fn preset(name: &str, seed: u64) -> Result<Vec<PresetScenario>> {
    match name {
        "study1" => Ok(study1(seed)),
        "study2" => Ok(study2(seed)),
        "study3" => Ok(study3(seed)),
        "study4" => Ok(study4(seed)),
        "study5" => Ok(study5(seed)),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Sample-size sweep: n in {100, 500, 1000, 5000}.
pub fn study1(seed: u64) -> Vec<PresetScenario> {
    [100usize, 500, 1000, 5000]
        .into_iter()
        .map(|n| PresetScenario {
            label: format!("n={n}"),
            config: ScenarioConfig {
                n,
                ..baseline(seed)
            },
        })
        .collect()
}

/// Measurement-error law sweep at n = 1000.
pub fn study2(seed: u64) -> Vec<PresetScenario> {
    [
        MeDistribution::Normal,
        MeDistribution::StudentT,
        MeDistribution::Laplace,
    ]
    .into_iter()
    .map(|me_dist| PresetScenario {
        label: format!("me={me_dist}"),
        config: ScenarioConfig {
            me_dist,
            ..baseline(seed)
        },
    })
    .collect()
}

/// Covariance structure sweep: one IND row plus, for each of AR(1), CS and
/// UN, seven (rho_X, rho_W, rho_M) combinations around (0.5, 0.5, 0.5).
pub fn study3(seed: u64) -> Vec<PresetScenario> {
    const RHO_COMBOS: [(f64, f64, f64); 7] = [
        (0.50, 0.50, 0.50),
        (0.25, 0.50, 0.50),
        (0.75, 0.50, 0.50),
        (0.50, 0.25, 0.50),
        (0.50, 0.75, 0.50),
        (0.50, 0.50, 0.25),
        (0.50, 0.50, 0.75),
    ];
    let mut rows = vec![row3(CovStructure::Ind, (0.0, 0.0, 0.0), seed)];
    for structure in [CovStructure::Ar1, CovStructure::Cs, CovStructure::Un] {
        for combo in RHO_COMBOS {
            rows.push(row3(structure, combo, seed));
        }
    }
    rows
}

fn row3(structure: CovStructure, (rx, rw, rm): (f64, f64, f64), seed: u64) -> PresetScenario {
    let spec = |rho: f64, sigma: f64| CovarianceSpec {
        structure,
        rho,
        sigma,
    };
    PresetScenario {
        label: format!("{structure} rho_x={rx} rho_w={rw} rho_m={rm}"),
        config: ScenarioConfig {
            cov_x: spec(rx, 1.5),
            cov_u: spec(rw, 1.0),
            cov_m: spec(rm, 1.0),
            ..baseline(seed)
        },
    }
}

/// Predictor/error magnitude sweep: the 12 (sigma_X, sigma_U) pairs in
/// increasing ratio order.
pub fn study4(seed: u64) -> Vec<PresetScenario> {
    const PAIRS: [(f64, f64); 12] = [
        (1.0, 2.0),
        (1.5, 2.0),
        (1.0, 1.0),
        (2.0, 2.0),
        (1.5, 1.0),
        (1.0, 0.5),
        (2.0, 1.0),
        (4.0, 2.0),
        (1.5, 0.5),
        (2.0, 0.5),
        (4.0, 1.0),
        (4.0, 0.5),
    ];
    PAIRS
        .into_iter()
        .map(|(sx, su)| {
            let base = baseline(seed);
            PresetScenario {
                label: format!("sigma_x={sx} sigma_u={su} ratio={}", sx / su),
                config: ScenarioConfig {
                    cov_x: CovarianceSpec {
                        sigma: sx,
                        ..base.cov_x
                    },
                    cov_u: CovarianceSpec {
                        sigma: su,
                        ..base.cov_u
                    },
                    ..base
                },
            }
        })
        .collect()
}

/// Instrument sweep: sigma_M in {0.5, 1, 2, 4} at c = 0.5, then
/// c in {0, 0.25, 0.5, 0.75} at sigma_M = 1.
pub fn study5(seed: u64) -> Vec<PresetScenario> {
    let mut rows = Vec::new();
    for sm in [0.5, 1.0, 2.0, 4.0] {
        let base = baseline(seed);
        rows.push(PresetScenario {
            label: format!("sigma_m={sm} (c=0.5)"),
            config: ScenarioConfig {
                cov_m: CovarianceSpec {
                    sigma: sm,
                    ..base.cov_m
                },
                ..base
            },
        });
    }
    for c in [0.0, 0.25, 0.5, 0.75] {
        rows.push(PresetScenario {
            label: format!("c={c} (sigma_m=1)"),
            config: ScenarioConfig {
                c,
                ..baseline(seed)
            },
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_sizes() {
        assert_eq!(preset("study1", 1).unwrap().len(), 4);
        assert_eq!(preset("study2", 1).unwrap().len(), 3);
        assert_eq!(preset("study3", 1).unwrap().len(), 22);
        assert_eq!(preset("study4", 1).unwrap().len(), 12);
        assert_eq!(preset("study5", 1).unwrap().len(), 8);
        assert!(preset("study6", 1).is_err());
    }

    #[test]
    fn all_scenarios_validate_and_share_seed() {
        for name in PRESET_NAMES {
            for row in preset(name, 99).unwrap() {
                row.config.validate().unwrap();
                assert_eq!(row.config.seed, 99, "{name}: {}", row.label);
            }
        }
    }

    #[test]
    fn labels_are_unique() {
        for name in PRESET_NAMES {
            let rows = preset(name, 0).unwrap();
            let mut labels: Vec<_> = rows.iter().map(|r| r.label.clone()).collect();
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), rows.len(), "{name} has duplicate labels");
        }
    }

    #[test]
    fn study4_ratios_nondecreasing() {
        let rows = study4(0);
        let ratios: Vec<f64> = rows
            .iter()
            .map(|r| r.config.cov_x.sigma / r.config.cov_u.sigma)
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(ratios[0], 0.5);
        assert_eq!(*ratios.last().unwrap(), 8.0);
    }
}
