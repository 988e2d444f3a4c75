use alloc::format;

use num_traits::Float;

use crate::error::{Error, Result};

/// How per-path spreading codes relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CodeModel {
    /// Every user, path and symbol period gets a fresh i.i.d. code.
    Independent,
    /// Paths of one user are chip-delayed windows of one chip stream.
    #[default]
    Shifted,
}

/// Scenario parameters for one coherence block.
///
/// Derived loads are computed on demand and never stored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SystemConfig {
    /// Number of users `K`.
    pub users: usize,
    /// Spreading gain `N` (chips per symbol).
    pub spreading_gain: usize,
    /// Resolvable paths per user `L`.
    pub paths: usize,
    /// Coherence time `M` in symbol periods.
    pub coherence: usize,
    /// Training periods `M_t` at the start of each coherence block.
    #[cfg_attr(feature = "serde", serde(default))]
    pub training: usize,
    /// Complex noise variance per chip, `1/SNR`.
    pub noise_variance: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub code_model: CodeModel,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl SystemConfig {
    /// Noise-free configuration with the shifted code model and no training.
    pub fn new(users: usize, spreading_gain: usize, paths: usize, coherence: usize) -> Self {
        Self {
            users,
            spreading_gain,
            paths,
            coherence,
            training: 0,
            noise_variance: 0.0,
            code_model: CodeModel::Shifted,
            seed: 0,
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_variance = noise_variance_from_snr_db(snr_db);
        self
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn with_training(mut self, training: usize) -> Self {
        self.training = training;
        self
    }

    pub fn with_code_model(mut self, code_model: CodeModel) -> Self {
        self.code_model = code_model;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// System load `β = K/N`.
    pub fn load(&self) -> f64 {
        self.users as f64 / self.spreading_gain as f64
    }

    /// Training fraction `α = M_t/M`.
    pub fn training_fraction(&self) -> f64 {
        self.training as f64 / self.coherence as f64
    }

    /// Load of the stacked estimation problem, `β' = KL/(MN)`.
    pub fn equivalent_load(&self) -> f64 {
        (self.users * self.paths) as f64 / (self.coherence * self.spreading_gain) as f64
    }

    /// Number of unknown gains `KL`.
    pub fn unknowns(&self) -> usize {
        self.users * self.paths
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.noise_variance.log10()
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.spreading_gain == 0 || self.paths == 0 || self.coherence == 0 {
            return Err(Error::Config(format!(
                "K, N, L and M must be positive (K={}, N={}, L={}, M={})",
                self.users, self.spreading_gain, self.paths, self.coherence
            )));
        }
        if self.training > self.coherence {
            return Err(Error::Config(format!(
                "training periods {} exceed coherence time {}",
                self.training, self.coherence
            )));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::Config(format!(
                "noise variance must be finite and nonnegative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// `σ² = 10^(-SNR/10)` for unit received symbol energy.
pub fn noise_variance_from_snr_db(snr_db: f64) -> f64 {
    10.0.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_loads() {
        let c = SystemConfig::new(40, 100, 5, 10).with_training(2);
        assert_eq!(c.load(), 0.4);
        assert_eq!(c.training_fraction(), 0.2);
        assert!((c.equivalent_load() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn snr_conversion() {
        let c = SystemConfig::new(1, 1, 1, 1).with_snr_db(5.0);
        assert!((c.noise_variance - 0.316_227_766).abs() < 1e-9);
        assert!((c.snr_db() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SystemConfig::new(0, 10, 1, 1).validate().is_err());
        assert!(SystemConfig::new(1, 10, 1, 4)
            .with_training(5)
            .validate()
            .is_err());
        assert!(SystemConfig::new(1, 10, 1, 4)
            .with_noise_variance(-1.0)
            .validate()
            .is_err());
        assert!(SystemConfig::new(1, 10, 1, 4).validate().is_ok());
    }
}
