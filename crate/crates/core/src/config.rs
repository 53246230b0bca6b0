//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationVector;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::policy::PolicySpec;
use crate::simulator::{
    ArrivalConfig, EmptyQueue, InitialBelief, SimConfig, SimMode, DEFAULT_BURN_IN, DEFAULT_HORIZON,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub p01: f64,
    pub p10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionSection {
    /// Number of sweep directions when no directions file is given.
    pub directions: usize,
    /// Add the memoryless reference line (symmetric channels only).
    pub blind: bool,
}

impl Default for RegionSection {
    fn default() -> Self {
        RegionSection { directions: 360, blind: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Slots between series points; 0 picks `horizon / 1000`.
    pub series_every: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), series_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizon: u64,
    pub burn_in: u64,
    pub replications: usize,
    /// Worker threads for replications; 0 uses all cores.
    pub workers: usize,
    pub mode: SimMode,
    pub assertions: bool,
    pub empty_queue: EmptyQueue,
    /// Total backlog that stops a run early; 0 disables the guard.
    pub hard_cap: u64,
    pub initial_belief: InitialBelief,
    pub channels: Vec<ChannelSpec>,
    pub policy: PolicySpec,
    pub arrivals: Option<ArrivalConfig>,
    pub region: RegionSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            horizon: DEFAULT_HORIZON,
            burn_in: DEFAULT_BURN_IN,
            replications: 1,
            workers: 0,
            mode: SimMode::Saturated,
            assertions: true,
            empty_queue: EmptyQueue::PreserveFeedback,
            hard_cap: 0,
            initial_belief: InitialBelief::Stationary,
            channels: vec![ChannelSpec { p01: 0.2, p10: 0.2 }; 2],
            policy: PolicySpec::Rr { active: ActivationVector::all(2).expect("two channels") },
            arrivals: None,
            region: RegionSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Mixes replication index into the base seed.
pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    seed.wrapping_add((replication as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<Vec<ChannelParams>> {
        if self.channels.is_empty() {
            return Err(Error::Config("no [[channels]] given".into()));
        }
        self.channels.iter().map(|c| ChannelParams::new(c.p01, c.p10)).collect()
    }

    pub fn series_every(&self) -> u64 {
        if self.output.series_every > 0 {
            self.output.series_every
        } else {
            (self.horizon / 1000).max(1)
        }
    }

    /// Simulator config for one replication.
    pub fn sim_config(&self, replication: usize) -> Result<SimConfig> {
        let cfg = SimConfig {
            params: self.params()?,
            policy: self.policy.clone(),
            horizon: self.horizon,
            burn_in: self.burn_in,
            seed: replication_seed(self.seed, replication),
            mode: self.mode,
            arrivals: self.arrivals.clone(),
            assertions: self.assertions,
            initial: self.initial_belief.clone(),
            empty_queue: self.empty_queue,
            series_every: self.series_every(),
            backlog_blocks: 50,
            record_dwell_sequences: false,
            hard_cap: (self.hard_cap > 0).then_some(self.hard_cap),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything a run would check, without running.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        self.sim_config(0).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::QrrConfig;

    #[test]
    fn defaults_round_trip() {
        let d = ExperimentConfig::default();
        let text = d.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), d);
        d.validate().unwrap();
    }

    #[test]
    fn parses_queued_qrr() {
        let text = r#"
            mode = "queued"
            horizon = 20000
            burn_in = 1000
            [[channels]]
            p01 = 0.2
            p10 = 0.2
            [[channels]]
            p01 = 0.2
            p10 = 0.2
            [policy]
            kind = "qrr"
            lambda = [0.2, 0.2]
            [arrivals]
            lambda = [0.2, 0.2]
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.policy, PolicySpec::Qrr(QrrConfig::known(vec![0.2, 0.2])));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_channel_and_unknown_keys() {
        let bad = "[[channels]]\np01 = 0.6\np10 = 0.5\n[policy]\nkind = \"rr\"\nactive = \"1\"\n";
        let err = ExperimentConfig::from_toml(bad).unwrap().validate().unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("p01"));
        assert!(ExperimentConfig::from_toml("horizn = 5").is_err());
    }
}
