//! Single-document TOML configuration: scenario sections (area, base
//! stations, channel, reward, UAV motion), agent hyperparameters, baseline
//! knobs, and the experiment block. Key names carry explicit units
//! (`*_dbm`, `*_m`, `*_ghz`) because unit bugs dominate link-budget code.
//!
//! Every section is optional and defaults to the built-in scenario; unknown
//! keys are rejected so typos fail loudly instead of silently defaulting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::baselines::BaselineConfig;
use crate::channel::ChannelParams;
use crate::env::{BaseStation, RewardConfig, Scenario};
use crate::eval::DEFAULT_SWEEP_THRESHOLDS_DB;
use crate::{Error, Result};

/// `[area]` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaDoc {
    pub l_m: f64,
    pub w_m: f64,
}

impl Default for AreaDoc {
    fn default() -> Self {
        Self {
            l_m: 2000.0,
            w_m: 2000.0,
        }
    }
}

/// `[uav]` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavDoc {
    pub speed_mps: f64,
    pub dt_s: f64,
    pub max_altitude_m: f64,
}

impl Default for UavDoc {
    fn default() -> Self {
        Self {
            speed_mps: 10.0,
            dt_s: 0.1,
            max_altitude_m: 30.0,
        }
    }
}

/// `[experiment]` section: path counts, episode budgets, the seed root, and
/// the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_paths: usize,
    pub train_episodes: usize,
    pub eval_episodes: usize,
    pub seed: u64,
    pub out_dir: String,
    pub sweep_thresholds_db: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_paths: 10,
            train_episodes: 500,
            eval_episodes: 500,
            seed: 42,
            out_dir: "runs".to_string(),
            sweep_thresholds_db: DEFAULT_SWEEP_THRESHOLDS_DB.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::Config("experiment.num_paths must be >= 1".into()));
        }
        if self.train_episodes == 0 {
            return Err(Error::Config("experiment.train_episodes must be >= 1".into()));
        }
        if self.eval_episodes < 2 {
            return Err(Error::Config("experiment.eval_episodes must be >= 2".into()));
        }
        if self.sweep_thresholds_db.is_empty() {
            return Err(Error::Config(
                "experiment.sweep_thresholds_db must be non-empty".into(),
            ));
        }
        if self.out_dir.is_empty() {
            return Err(Error::Config("experiment.out_dir must be non-empty".into()));
        }
        Ok(())
    }
}

/// The scenario portion of the configuration, also written standalone by the
/// `scenario` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioDoc {
    pub area: AreaDoc,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub base_stations: Vec<BaseStation>,
    pub channel: ChannelParams,
    pub reward: RewardConfig,
    pub uav: UavDoc,
}

impl ScenarioDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            area: AreaDoc {
                l_m: s.area_l_m,
                w_m: s.area_w_m,
            },
            base_stations: s.base_stations.clone(),
            channel: s.channel,
            reward: s.reward,
            uav: UavDoc {
                speed_mps: s.speed_mps,
                dt_s: s.dt_s,
                max_altitude_m: s.max_altitude_m,
            },
        }
    }

    /// Assembles and validates the runtime scenario. An empty base-station
    /// list means "use the built-in five-BS layout".
    pub fn to_scenario(&self) -> Result<Scenario> {
        let default = Scenario::default();
        let scenario = Scenario {
            area_l_m: self.area.l_m,
            area_w_m: self.area.w_m,
            base_stations: if self.base_stations.is_empty() {
                default.base_stations
            } else {
                self.base_stations.clone()
            },
            channel: self.channel,
            reward: self.reward,
            speed_mps: self.uav.speed_mps,
            dt_s: self.uav.dt_s,
            max_altitude_m: self.uav.max_altitude_m,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario doc serializes")
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub area: AreaDoc,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub base_stations: Vec<BaseStation>,
    pub channel: ChannelParams,
    pub reward: RewardConfig,
    pub uav: UavDoc,
    pub agent: AgentConfig,
    pub baselines: BaselineConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub fn scenario_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            area: self.area,
            base_stations: self.base_stations.clone(),
            channel: self.channel,
            reward: self.reward,
            uav: self.uav,
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_doc().to_scenario()
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        self.agent.validate()?;
        self.baselines.validate()?;
        self.experiment.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

pub fn load_scenario_doc(path: &Path) -> Result<ScenarioDoc> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("scenario parse: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Algorithm;
    use crate::channel::ChannelMode;

    #[test]
    fn default_config_matches_builtin_scenario() {
        let cfg = RunConfig::default();
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc, Scenario::default());
        assert_eq!(sc.base_stations.len(), 5);
        assert_eq!(cfg.experiment.num_paths, 10);
        assert_eq!(cfg.experiment.train_episodes, 500);
        assert_eq!(cfg.agent.algorithm, Algorithm::Ddqn);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_roundtrip_preserves_config() {
        let mut cfg = RunConfig {
            base_stations: Scenario::default().base_stations,
            ..RunConfig::default()
        };
        cfg.channel.mode = ChannelMode::Expected;
        cfg.experiment.seed = 7;
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn empty_document_is_the_default_config() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let text = r#"
            [channel]
            mode = "expected"
            sinr_threshold_db = 2.5

            [agent]
            algorithm = "dqn"
            batch_size = 32

            [experiment]
            seed = 99
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.channel.mode, ChannelMode::Expected);
        assert_eq!(cfg.channel.sinr_threshold_db, 2.5);
        assert_eq!(cfg.channel.carrier_freq_ghz, 2.1);
        assert_eq!(cfg.agent.algorithm, Algorithm::Dqn);
        assert_eq!(cfg.agent.batch_size, 32);
        assert_eq!(cfg.agent.buffer_capacity, 10_000);
        assert_eq!(cfg.experiment.seed, 99);
        assert_eq!(cfg.experiment.out_dir, "runs");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[agent]\nlerning_rate = 0.1\n");
        assert!(err.is_err());
        let err = RunConfig::from_toml("[notasection]\nx = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn missing_base_station_field_names_the_field() {
        let text = r#"
            [[base_stations]]
            id = 0
            x = 100.0
            y = 100.0
            h_bs_m = 25.0
        "#;
        let err = RunConfig::from_toml(text).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("tx_power_dbm"),
            "error should name the missing field, got: {msg}"
        );
    }

    #[test]
    fn validation_rejects_bad_values() {
        let err = RunConfig::from_toml("[agent]\nepsilon_decay = 2.0\n");
        assert!(err.is_err());
        let err = RunConfig::from_toml("[experiment]\neval_episodes = 1\n");
        assert!(err.is_err());
        let err = RunConfig::from_toml("[uav]\ndt_s = 0.0\n");
        assert!(err.is_err());
        // Too few base stations for the 3-candidate action space.
        let text = r#"
            [[base_stations]]
            id = 0
            x = 100.0
            y = 100.0
            h_bs_m = 25.0
            tx_power_dbm = 45.0
        "#;
        assert!(RunConfig::from_toml(text).is_err());
    }

    #[test]
    fn scenario_doc_roundtrips_standalone() {
        let sc = Scenario::default();
        let doc = ScenarioDoc::from_scenario(&sc);
        let text = doc.to_toml();
        let back: ScenarioDoc = toml::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_scenario().unwrap(), sc);
        // Keys carry units in their names.
        assert!(text.contains("l_m ="));
        assert!(text.contains("tx_power_dbm ="));
        assert!(text.contains("carrier_freq_ghz ="));
    }
}
