//! JSON experiment configuration.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::builtin_channel;
use crate::chaining::SetReading;
use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::model::{AuxiliaryStructure, BroadcastChannelSpec};
use crate::profile::{ProfileOptions, Threshold};
use crate::quantum::{DensityMatrix, C64};
use crate::region::CornerFormula;
use crate::scheme::{CodeConfig, Corner, SimulationSeeds};
use crate::transform::log2_exact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// A catalog entry and its two per-receiver parameters.
    Builtin { name: String, params: Vec<f64> },
    /// `p(y1, y2 | x)` rows, flattened as `y1 * outputs.1 + y2`.
    Classical { outputs: (usize, usize), rows: [Vec<f64>; 2] },
    /// Joint output states `ρ_x^{B1 B2}` as nested `[re, im]` arrays.
    Quantum { dims: (usize, usize), states: [Vec<Vec<[f64; 2]>>; 2] },
}

impl ChannelConfig {
    pub fn build(&self) -> Result<BroadcastChannelSpec> {
        match self {
            Self::Builtin { name, params } => builtin_channel(name, params),
            Self::Classical { outputs, rows } => BroadcastChannelSpec::classical(*outputs, rows.clone()),
            Self::Quantum { dims, states } => {
                let dim = dims.0 * dims.1;
                let parse = |rows: &Vec<Vec<[f64; 2]>>| -> Result<DensityMatrix> {
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::DimensionMismatch { expected: dim, got: rows.len() });
                    }
                    DensityMatrix::new(DMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
                };
                BroadcastChannelSpec::quantum(*dims, [parse(&states[0])?, parse(&states[1])?])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum AuxConfig {
    /// `V = X ~ Bern(p)`, private layers constant.
    Superposition { p: f64 },
    Conditionals {
        p_v: f64,
        p_v2: [f64; 2],
        p_v1: [[f64; 2]; 2],
        phi: [u8; 8],
    },
    /// Joint law indexed by `4v + 2v1 + v2`.
    Joint { joint: [f64; 8], phi: [u8; 8] },
}

impl AuxConfig {
    pub fn build(&self) -> Result<AuxiliaryStructure> {
        match self {
            Self::Superposition { p } => AuxiliaryStructure::superposition_only(*p),
            Self::Conditionals { p_v, p_v2, p_v1, phi } => AuxiliaryStructure::from_conditionals(*p_v, *p_v2, *p_v1, *phi),
            Self::Joint { joint, phi } => AuxiliaryStructure::from_joint(*joint, *phi),
        }
    }
}

/// Named seeds; every random draw of a run derives from one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Monte Carlo profile estimation.
    pub construction: u64,
    /// Shared randomness of encoder and decoders.
    pub shared: u64,
    pub noise: u64,
    pub messages: u64,
}

impl Seeds {
    /// Four distinct seeds from one value.
    pub fn from_single(seed: u64) -> Self {
        Self {
            construction: derive_seed(seed, 0),
            shared: derive_seed(seed, 1),
            noise: derive_seed(seed, 2),
            messages: derive_seed(seed, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Also run the grid search over auxiliaries.
    pub search: bool,
    pub weights: (f64, f64),
    pub resolution: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            search: false,
            weights: (1.0, 1.0),
            resolution: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub aux: AuxConfig,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub thresholds: Threshold,
    #[serde(default)]
    pub corner: Corner,
    #[serde(default)]
    pub formula: CornerFormula,
    #[serde(default)]
    pub reading: SetReading,
    #[serde(default)]
    pub profile: ProfileOptions,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Fraction of each receiver's message positions kept.
    #[serde(default = "default_backoff")]
    pub backoff: f64,
    /// Common-message rate in bits per use.
    #[serde(default)]
    pub common_rate: f64,
    #[serde(default)]
    pub region: RegionConfig,
    /// Output directory; the command line takes precedence.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_n() -> usize {
    256
}

fn default_k() -> usize {
    4
}

fn default_trials() -> usize {
    100
}

fn default_backoff() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        log2_exact(self.n).map_err(|_| Error::Config(format!("n = {} is not a power of two", self.n)))?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Threshold::new(self.thresholds.low, self.thresholds.high)?;
        if !(self.backoff > 0.0 && self.backoff <= 1.0) {
            return Err(Error::Config(format!("backoff {} outside (0, 1]", self.backoff)));
        }
        if !(0.0..=1.0).contains(&self.common_rate) {
            return Err(Error::Config(format!("common rate {} outside [0, 1]", self.common_rate)));
        }
        if self.region.resolution < 2 {
            return Err(Error::Config("region resolution must be at least 2".into()));
        }
        Ok(())
    }

    pub fn code_config(&self) -> CodeConfig {
        CodeConfig {
            n: self.n,
            k: self.k,
            threshold: self.thresholds,
            corner: self.corner,
            reading: self.reading,
            profile: ProfileOptions {
                seed: self.seeds.construction,
                ..self.profile
            },
            shared_seed: self.seeds.shared,
        }
    }

    pub fn simulation_seeds(&self) -> SimulationSeeds {
        SimulationSeeds {
            messages: self.seeds.messages,
            noise: self.seeds.noise,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
