//! TOML run configuration. Every section is optional and falls back to the
//! defaults below; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dfmud_core::codec::{BlockFading, CodecSpec};
use dfmud_core::detector::EstimationWindow;
use dfmud_core::pipeline::ReceiverMode;
use dfmud_core::{CodeModel, SystemConfig};
use serde::{Deserialize, Serialize};

/// System dimensions with the noise level given either as SNR or variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub users: usize,
    pub spreading_gain: usize,
    pub paths: usize,
    pub coherence: usize,
    #[serde(default)]
    pub training: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(default)]
    pub code_model: CodeModel,
}

impl Scenario {
    pub fn new(
        users: usize,
        spreading_gain: usize,
        paths: usize,
        coherence: usize,
        snr_db: f64,
    ) -> Self {
        Self {
            users,
            spreading_gain,
            paths,
            coherence,
            training: 0,
            snr_db: Some(snr_db),
            noise_variance: None,
            code_model: CodeModel::Shifted,
        }
    }

    pub fn system(&self, seed: u64) -> Result<SystemConfig> {
        let base = SystemConfig::new(self.users, self.spreading_gain, self.paths, self.coherence)
            .with_training(self.training)
            .with_code_model(self.code_model)
            .with_seed(seed);
        let cfg = match (self.snr_db, self.noise_variance) {
            (Some(s), None) => base.with_snr_db(s),
            (None, Some(v)) => base.with_noise_variance(v),
            (None, None) => bail!("scenario needs snr_db or noise_variance"),
            (Some(_), Some(_)) => bail!("scenario sets both snr_db and noise_variance"),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Config {
    /// The coherence time is swept; `scenario.coherence` is ignored.
    pub scenario: Scenario,
    pub coherence: Vec<usize>,
    pub pe: f64,
    pub trials: usize,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            scenario: Scenario::new(20, 100, 5, 10, 5.0),
            coherence: vec![10, 20, 30, 40, 50],
            pe: 0.1,
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Config {
    /// The SNR is swept; the scenario's own noise level is ignored.
    pub scenario: Scenario,
    pub snr_db: Vec<f64>,
    pub pe: Vec<f64>,
    pub trials: usize,
    pub window: EstimationWindow,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            scenario: Scenario::new(30, 30, 5, 50, 10.0),
            snr_db: vec![4.0, 6.0, 8.0, 10.0, 12.0],
            pe: vec![0.05, 0.1],
            trials: 70,
            window: EstimationWindow::LeaveOneOut,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GCurveConfig {
    pub codec: CodecSpec,
    pub grid: Vec<f64>,
    /// Codewords per grid point.
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fading: Option<BlockFading>,
}

impl Default for GCurveConfig {
    fn default() -> Self {
        Self {
            codec: CodecSpec::convolutional(),
            grid: (1..=24).map(|i| 0.125 * i as f64).collect(),
            trials: 40,
            fading: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    /// The user count is searched; `scenario.users` is ignored.
    pub scenario: Scenario,
    pub codec: CodecSpec,
    pub modes: Vec<ReceiverMode>,
    pub target_ber: f64,
    pub iterations: usize,
    pub min_bits: usize,
    pub step: f64,
    pub beta_max: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        let mut scenario = Scenario::new(1, 32, 5, 10, 5.0);
        scenario.training = 2;
        Self {
            scenario,
            codec: CodecSpec::convolutional(),
            modes: vec![
                ReceiverMode::PerfectCsi,
                ReceiverMode::PerfectInit,
                ReceiverMode::Iterative,
                ReceiverMode::LmmseOnly,
            ],
            target_ber: 1e-3,
            iterations: 6,
            min_bits: 20_000,
            step: 0.05,
            beta_max: 2.0,
        }
    }
}

/// Map coefficients, either explicit or derived from a load point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSource {
    Explicit {
        d0: f64,
        d1: f64,
    },
    Load {
        beta: f64,
        paths: usize,
        coherence: usize,
        snr_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcurve: Option<PathBuf>,
    pub map: MapSource,
    pub pe0: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Initial-stage interference variance for the convergence conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_i0_sq: Option<f64>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            gcurve: None,
            map: MapSource::Load {
                beta: 0.2,
                paths: 5,
                coherence: 30,
                snr_db: 5.0,
            },
            pe0: 0.5,
            max_iter: 200,
            tol: 1e-12,
            sigma_i0_sq: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmtConfig {
    pub scenario: Scenario,
    pub m_max: usize,
    pub trials: usize,
    pub bound_c: f64,
    pub bound_m_max: usize,
}

impl Default for RmtConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::new(40, 100, 5, 10, 10.0),
            m_max: 4,
            trials: 50,
            bound_c: 1.5,
            bound_m_max: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub fig2: Fig2Config,
    pub fig3: Fig3Config,
    pub gcurve: GCurveConfig,
    pub capacity: CapacityConfig,
    pub fixedpoint: FixedPointConfig,
    pub rmt: RmtConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
