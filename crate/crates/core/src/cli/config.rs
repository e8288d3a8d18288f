use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::QPolicyConfig;
use crate::experiments::ResourceCalibration;
use crate::mdp::{build_frozenlake, load_mdp, GridWorld, SlipMode, TabularMdp};

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Gridworld {
        width: usize,
        height: usize,
        slip: f64,
        goal: (usize, usize),
        gamma: f64,
        #[serde(default)]
        slip_mode: SlipMode,
    },
    Frozenlake {
        size: usize,
        slippery: bool,
        gamma: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::Gridworld {
            width: 4,
            height: 4,
            slip: 0.2,
            goal: (3, 3),
            gamma: 0.95,
            slip_mode: SlipMode::default(),
        }
    }
}

impl EnvSpec {
    pub fn build(&self) -> crate::Result<TabularMdp> {
        match self {
            EnvSpec::Gridworld {
                width,
                height,
                slip,
                goal,
                gamma,
                slip_mode,
            } => GridWorld::new(*width, *height, *slip, *goal, *gamma)
                .with_slip_mode(*slip_mode)
                .build(),
            EnvSpec::Frozenlake { size, slippery, gamma } => build_frozenlake(*size, *slippery, *gamma),
            EnvSpec::File { path } => load_mdp(path),
        }
    }
}

/// Grid of an `ablate` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSpec {
    pub epsilons: Vec<f64>,
    pub shot_counts: Vec<u64>,
}

impl Default for AblationSpec {
    fn default() -> Self {
        Self {
            epsilons: vec![0.001, 0.01, 0.05],
            shot_counts: vec![128, 512, 1024, 2048, 4096],
        }
    }
}

/// Contents of a `--config` file. Missing keys take their defaults and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvSpec,
    pub qpolicy: QPolicyConfig,
    /// When set, the subcommand must match.
    pub study: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub ablation: AblationSpec,
    pub mc_budget: usize,
    pub p_values: Vec<f64>,
    pub variants: Vec<String>,
    pub kappa: f64,
    pub calibration: ResourceCalibration,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            environment: EnvSpec::default(),
            qpolicy: QPolicyConfig::default(),
            study: None,
            output_dir: None,
            seeds: None,
            ablation: AblationSpec::default(),
            mc_budget: 1000,
            p_values: vec![0.0, 0.01],
            variants: ["full", "no_control_variate", "no_ema", "ae_oracle_mode", "shot_mode"]
                .map(String::from)
                .to_vec(),
            kappa: 1.0,
            calibration: ResourceCalibration::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Parses `1,2,3`, `a..b` (half-open) or a bare count `n` meaning `0..n`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    let bad = |e: std::num::ParseIntError| format!("invalid seed list `{text}`: {e}");
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().map_err(bad)?, b.trim().parse::<u64>().map_err(bad)?);
        (a..b).collect()
    } else if text.contains(',') {
        text.split(',').map(|s| s.trim().parse::<u64>().map_err(bad)).collect::<Result<_, _>>()?
    } else {
        (0..text.parse::<u64>().map_err(bad)?).collect()
    };
    if seeds.is_empty() {
        return Err(format!("seed list `{text}` is empty"));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("1,2,3,4,5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("5").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        assert!(parse_seeds("7,").is_err());
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"environment": {"builder": "frozenlake", "size": 8, "slippery": true, "gamma": 0.95},
                "qpolicy": {"max_iterations": 7}}"#,
        )
        .unwrap();
        assert_eq!(cfg.qpolicy.max_iterations, 7);
        assert_eq!(cfg.mc_budget, 1000);
        assert_eq!(cfg.environment.build().unwrap().num_states(), 64);
        assert!(serde_json::from_str::<RunConfig>(r#"{"iterations": 5}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"environment": {"builder": "maze"}}"#).is_err());
        let round: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }
}
