use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::coalition::{roster, CoalitionConfig, UserCategory};
use crate::contention::ContentionResources;
use crate::matching::{Codebook, MatchQuotas};
use crate::power::PowerGameConfig;
use crate::scenario::{NetworkScenario, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig3,
    Matching,
    Coalition,
    Power,
    Contention,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Matching => "matching",
            ExperimentKind::Coalition => "coalition",
            ExperimentKind::Power => "power",
            ExperimentKind::Contention => "contention",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSettings {
    pub price_per_watt: f64,
    pub power_grid_points: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Subcarriers occupied by each user; every user occupies all of them when absent.
    pub user_subcarriers: Option<Vec<Vec<usize>>>,
}

impl Default for PowerSettings {
    fn default() -> Self {
        Self {
            price_per_watt: 5.0,
            power_grid_points: 5,
            tolerance: 1e-9,
            max_iterations: 200,
            user_subcarriers: None,
        }
    }
}

impl PowerSettings {
    pub fn game_config(&self, scenario: &NetworkScenario) -> PowerGameConfig {
        PowerGameConfig {
            price_per_watt: self.price_per_watt,
            power_grid_points: self.power_grid_points,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            user_subcarrier_sets: self
                .user_subcarriers
                .clone()
                .unwrap_or_else(|| vec![(0..scenario.num_subcarriers).collect(); scenario.num_users]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoalitionSettings {
    pub sensors: usize,
    pub broadband: usize,
    pub sensor_min_rate: f64,
    pub max_group_size: usize,
    pub max_rounds: usize,
    pub improvement_epsilon: f64,
}

impl Default for CoalitionSettings {
    fn default() -> Self {
        let c = CoalitionConfig::default();
        Self {
            sensors: 4,
            broadband: 4,
            sensor_min_rate: 0.0,
            max_group_size: c.max_group_size,
            max_rounds: c.max_rounds,
            improvement_epsilon: c.improvement_epsilon,
        }
    }
}

impl CoalitionSettings {
    pub fn game_config(&self) -> CoalitionConfig {
        CoalitionConfig {
            max_group_size: self.max_group_size,
            max_rounds: self.max_rounds,
            improvement_epsilon: self.improvement_epsilon,
        }
    }

    pub fn roster(&self) -> Vec<UserCategory> {
        roster(self.sensors, self.broadband, self.sensor_min_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSettings {
    pub user_quota: usize,
    pub subcarrier_quota: usize,
    pub codebooks: usize,
    pub codewords_per_book: usize,
}

impl Default for MatchingSettings {
    fn default() -> Self {
        Self {
            user_quota: 1,
            subcarrier_quota: 2,
            codebooks: 6,
            codewords_per_book: 4,
        }
    }
}

impl MatchingSettings {
    pub fn quotas(&self) -> MatchQuotas {
        MatchQuotas::new(self.user_quota, self.subcarrier_quota)
    }

    pub fn codebook(&self, scenario: &NetworkScenario) -> Codebook {
        Codebook {
            codebook_count: self.codebooks,
            codewords_per_book: self.codewords_per_book,
            codeword_length: scenario.num_subcarriers,
            nonzeros_per_codeword: self.user_quota,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentionSettings {
    pub num_slots: usize,
    pub num_subcarriers: usize,
    pub num_sequences: usize,
    pub price: f64,
    pub w_max: usize,
    pub max_sweeps: usize,
    pub mc_rounds: u64,
}

impl Default for ContentionSettings {
    fn default() -> Self {
        Self {
            num_slots: 4,
            num_subcarriers: 2,
            num_sequences: 4,
            price: 0.2,
            w_max: 8,
            max_sweeps: 100,
            mc_rounds: 10_000,
        }
    }
}

impl ContentionSettings {
    pub fn resources(&self) -> ContentionResources {
        ContentionResources::new(self.num_slots, self.num_subcarriers, self.num_sequences)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Settings {
    pub user_quota: usize,
    pub subcarrier_quotas: Vec<usize>,
    pub include_ofdma: bool,
}

impl Default for Fig3Settings {
    fn default() -> Self {
        Self {
            user_quota: 1,
            subcarrier_quotas: vec![1, 2],
            include_ofdma: true,
        }
    }
}

/// Everything needed to rerun an experiment exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub scenario: NetworkScenario,
    /// Explicit seed list; when empty, `replications` seeds starting at `base_seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub power: PowerSettings,
    #[serde(default)]
    pub coalition: CoalitionSettings,
    #[serde(default)]
    pub matching: MatchingSettings,
    #[serde(default)]
    pub contention: ContentionSettings,
    #[serde(default)]
    pub fig3: Fig3Settings,
}

fn default_replications() -> usize {
    1
}

fn default_base_seed() -> u64 {
    1
}

fn invalid(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Validation(crate::NomaError::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    })
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            scenario: NetworkScenario::default(),
            seeds: Vec::new(),
            replications: 1,
            base_seed: 1,
            sweep: None,
            output_path: None,
            power: PowerSettings::default(),
            coalition: CoalitionSettings::default(),
            matching: MatchingSettings::default(),
            contention: ContentionSettings::default(),
            fig3: Fig3Settings::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Seeds actually used, in reduction order.
    pub fn effective_seeds(&self) -> Vec<RngSeed> {
        if self.seeds.is_empty() {
            (0..self.replications as u64)
                .map(|i| RngSeed(self.base_seed.wrapping_add(i)))
                .collect()
        } else {
            self.seeds.iter().copied().map(RngSeed).collect()
        }
    }

    /// Replaces the seed list with `replications` seeds starting at `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds.clear();
        self.base_seed = seed;
    }

    /// Values the fig3 population sweep runs over.
    pub fn fig3_populations(&self) -> Vec<usize> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|&v| v as usize).collect(),
            None => (2..=24).step_by(2).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        self.scenario.validate().map_err(HarnessError::Validation)?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
            if self.experiment != ExperimentKind::Fig3 {
                return Err(invalid(
                    "sweep",
                    format!("not supported for experiment {}", self.experiment.name()),
                ));
            }
            if sweep.name != "num_users" {
                return Err(invalid(
                    "sweep.name",
                    format!("unknown sweep parameter `{}`", sweep.name),
                ));
            }
            if sweep.values.contains(&0) {
                return Err(invalid("sweep.values", "population sizes must be at least 1"));
            }
        }
        let v = HarnessError::Validation;
        match self.experiment {
            ExperimentKind::Fig3 => {
                if self.fig3.subcarrier_quotas.is_empty() {
                    return Err(invalid("fig3.subcarrier_quotas", "must not be empty"));
                }
                for &q in &self.fig3.subcarrier_quotas {
                    MatchQuotas::new(self.fig3.user_quota, q).validate().map_err(v)?;
                }
            }
            ExperimentKind::Matching => {
                self.matching.quotas().validate().map_err(v)?;
                self.matching.codebook(&self.scenario).validate().map_err(v)?;
            }
            ExperimentKind::Coalition => {
                let c = &self.coalition;
                if c.sensors + c.broadband != self.scenario.num_users {
                    return Err(invalid(
                        "scenario.num_users",
                        format!(
                            "must equal coalition.sensors + coalition.broadband = {}",
                            c.sensors + c.broadband
                        ),
                    ));
                }
                if c.sensors == 0 {
                    return Err(invalid("coalition.sensors", "must be at least 1"));
                }
                if c.sensors > self.scenario.num_subcarriers {
                    return Err(invalid("coalition.sensors", "must not exceed scenario.num_subcarriers"));
                }
                if c.sensors * c.max_group_size < c.sensors + c.broadband {
                    return Err(invalid(
                        "coalition.max_group_size",
                        "groups cannot hold every broadband user",
                    ));
                }
                if !(c.sensor_min_rate.is_finite() && c.sensor_min_rate >= 0.0) {
                    return Err(invalid("coalition.sensor_min_rate", "must be >= 0"));
                }
                c.game_config().validate().map_err(v)?;
            }
            ExperimentKind::Power => {
                self.power
                    .game_config(&self.scenario)
                    .validate(self.scenario.num_users, self.scenario.num_subcarriers)
                    .map_err(v)?;
            }
            ExperimentKind::Contention => {
                let c = &self.contention;
                c.resources().validate().map_err(v)?;
                if c.w_max == 0 {
                    return Err(invalid("contention.w_max", "must be at least 1"));
                }
                if !(c.price.is_finite() && c.price >= 0.0) {
                    return Err(invalid("contention.price", "must be >= 0"));
                }
                if c.mc_rounds == 0 {
                    return Err(invalid("contention.mc_rounds", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Resolved config (explicit seed list, no output path) as one-line JSON.
    pub fn canonical_json(&self) -> String {
        let mut resolved = self.clone();
        resolved.seeds = self.effective_seeds().iter().map(|s| s.0).collect();
        resolved.replications = resolved.seeds.len();
        resolved.output_path = None;
        serde_json::to_string(&resolved).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
