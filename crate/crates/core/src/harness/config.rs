use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::scenario::{Family, PathSpec, ScenarioError};
use super::wsp::{wsp_design, DesignError};
use crate::acktrack::{AbLimit, AckDispatch, AckPolicy, RangeSelection};
use crate::cc::CcAlgorithm;
use crate::endpoint::ConnectionConfig;
use crate::netsim::PathLinks;
use crate::{Design, DesignSupport};

/// Transfer size of the full-scale experiments.
pub const FULL_TRANSFER_SIZE: u64 = 50 * 1024 * 1024;
/// Transfer size of the quick profile.
pub const DESK_TRANSFER_SIZE: u64 = 5 * 1024 * 1024;
pub const FULL_POINTS: usize = 95;
pub const DESK_POINTS: usize = 20;
pub const DEFAULT_SEED: u64 = 2021;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("writing config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("run needs at least one path")]
    NoPaths,
}

fn default_true() -> bool {
    true
}

/// Everything needed to reproduce one simulated transfer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run_id: u64,
    pub family: Family,
    /// Design point the paths were derived from.
    pub point: Vec<f64>,
    pub paths: Vec<PathSpec>,
    pub design: Design,
    pub cc: CcAlgorithm,
    pub ab_limit: AbLimit,
    pub strategy: RangeSelection,
    pub dispatch: AckDispatch,
    /// Acknowledge all paths every two packets, without ACK_FREQUENCY.
    #[serde(default)]
    pub pquic_mode: bool,
    #[serde(default = "default_true")]
    pub ack_frequency: bool,
    pub transfer_size: u64,
    pub seed: u64,
}

impl RunConfig {
    pub fn ack_policy(&self) -> AckPolicy {
        AckPolicy {
            ab_limit: self.ab_limit,
            selection: self.strategy,
            dispatch: self.dispatch,
            pquic_mode: self.pquic_mode,
            ack_frequency: self.ack_frequency && !self.pquic_mode,
            ..AckPolicy::default()
        }
    }

    pub fn connection_config(&self) -> ConnectionConfig {
        ConnectionConfig {
            multipath: DesignSupport::only(self.design),
            ack_policy: self.ack_policy(),
            cc: self.cc,
            transfer_size: self.transfer_size,
            n_paths: self.paths.len() as u64,
            seed: self.seed ^ self.run_id.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..ConnectionConfig::default()
        }
    }

    pub fn links(&self) -> Vec<PathLinks> {
        self.paths.iter().map(PathSpec::links).collect()
    }

    pub fn aggregate_bandwidth_mbps(&self) -> f64 {
        self.paths.iter().map(|p| p.bandwidth_mbps).sum()
    }

    /// Transfer time if every path ran at full rate from the first instant.
    pub fn lower_bound_seconds(&self) -> f64 {
        self.transfer_size as f64 * 8.0 / (self.aggregate_bandwidth_mbps() * 1e6)
    }

    /// Short name of the protocol configuration, without the scenario.
    pub fn label(&self) -> String {
        let mut s = format!(
            "{}-{}-ab{}-{}-{}",
            self.design,
            self.cc_name(),
            self.ab_limit,
            self.strategy,
            self.dispatch
        );
        if self.pquic_mode {
            s.push_str("-pquic");
        }
        if !self.ack_frequency {
            s.push_str("-noackfreq");
        }
        s
    }

    fn cc_name(&self) -> &'static str {
        match self.cc {
            CcAlgorithm::Cubic => "cubic",
            CcAlgorithm::Bbr => "bbr",
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.paths.is_empty() {
            return Err(ConfigError::NoPaths);
        }
        let expected = self.family.coordinate_names().len();
        if self.point.len() != expected {
            return Err(ScenarioError::Dimension {
                family: self.family,
                expected,
                got: self.point.len(),
            }
            .into());
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&s)
    }
}

/// A sweep: one protocol configuration over a space-filling set of scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub family: Family,
    pub design: Design,
    pub cc: CcAlgorithm,
    pub ab_limit: AbLimit,
    pub strategy: RangeSelection,
    pub dispatch: AckDispatch,
    pub pquic_mode: bool,
    pub ack_frequency: bool,
    pub transfer_size: u64,
    pub points: usize,
    pub seed: u64,
}

impl Experiment {
    /// Desk-scale sweep with the default ACK policy.
    pub fn desk(family: Family, design: Design, cc: CcAlgorithm) -> Self {
        Experiment {
            family,
            design,
            cc,
            ab_limit: AbLimit::default(),
            strategy: RangeSelection::default(),
            dispatch: AckDispatch::default(),
            pquic_mode: false,
            ack_frequency: true,
            transfer_size: DESK_TRANSFER_SIZE,
            points: DESK_POINTS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn design_points(&self) -> Result<Vec<Vec<f64>>, ConfigError> {
        Ok(wsp_design(&self.family.bounds(), self.points, self.seed)?)
    }

    /// One run per design point; run ids are point indices.
    pub fn runs(&self) -> Result<Vec<RunConfig>, ConfigError> {
        self.design_points()?
            .into_iter()
            .enumerate()
            .map(|(i, point)| {
                Ok(RunConfig {
                    run_id: i as u64,
                    family: self.family,
                    paths: self.family.paths(&point)?,
                    point,
                    design: self.design,
                    cc: self.cc,
                    ab_limit: self.ab_limit,
                    strategy: self.strategy,
                    dispatch: self.dispatch,
                    pquic_mode: self.pquic_mode,
                    ack_frequency: self.ack_frequency,
                    transfer_size: self.transfer_size,
                    seed: self.seed,
                })
            })
            .collect()
    }
}
