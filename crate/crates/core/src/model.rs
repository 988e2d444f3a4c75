//! Scenario generation and the chip-level received signal
//! `r(t) = Σ_k b_k(t) Σ_l a_kl s_kl(t) + n(t)`.
//!
//! Generation order within one frame is fixed (channel, codes, symbols,
//! noise) so a frame is a pure function of its stream.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};
use rand::Rng;

use crate::config::{CodeModel, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::{complex_gaussian, random_sign, Stream};

/// Flat user-path index `i = k·L + l` (user-major).
#[inline]
pub fn path_index(user: usize, path: usize, paths: usize) -> usize {
    user * paths + path
}

/// Channel gains `a_kl`, constant over one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub users: usize,
    pub paths: usize,
    /// User-major, length `K·L`.
    pub gains: Vec<C64>,
}

impl ChannelRealization {
    pub fn from_gains(users: usize, paths: usize, gains: Vec<C64>) -> Result<Self> {
        if gains.len() != users * paths {
            return Err(Error::Config(format!(
                "expected {} gains, got {}",
                users * paths,
                gains.len()
            )));
        }
        Ok(Self {
            users,
            paths,
            gains,
        })
    }

    #[inline]
    pub fn gain(&self, user: usize, path: usize) -> C64 {
        self.gains[path_index(user, path, self.paths)]
    }

    pub fn user_gains(&self, user: usize) -> &[C64] {
        &self.gains[user * self.paths..(user + 1) * self.paths]
    }

    /// `Σ_l |a_kl|²`.
    pub fn user_energy(&self, user: usize) -> f64 {
        self.user_gains(user).iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Draws i.i.d. CSCG(0, 1/L) gains.
pub fn generate_channel(config: &SystemConfig, stream: &mut Stream) -> ChannelRealization {
    let var = 1.0 / config.paths as f64;
    let gains = (0..config.unknowns())
        .map(|_| complex_gaussian(stream, var))
        .collect();
    ChannelRealization {
        users: config.users,
        paths: config.paths,
        gains,
    }
}

/// Real ±1/√N spreading codes `s_kl(t)` for every user, path and period.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingEnsemble {
    pub users: usize,
    pub paths: usize,
    pub periods: usize,
    pub chips: usize,
    pub model: CodeModel,
    /// Indexed `((t·K + k)·L + l)·N + c`.
    values: Vec<f64>,
}

impl SpreadingEnsemble {
    /// Wraps explicit code values laid out as `((t·K + k)·L + l)·N + c`.
    /// Each code must have unit norm.
    pub fn from_values(
        users: usize,
        paths: usize,
        periods: usize,
        chips: usize,
        model: CodeModel,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != users * paths * periods * chips {
            return Err(Error::Config(format!(
                "expected {} code values, got {}",
                users * paths * periods * chips,
                values.len()
            )));
        }
        for code in values.chunks(chips.max(1)) {
            let e: f64 = code.iter().map(|v| v * v).sum();
            if (e - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("code with squared norm {e}")));
            }
        }
        Ok(Self {
            users,
            paths,
            periods,
            chips,
            model,
            values,
        })
    }

    #[inline]
    pub fn code(&self, user: usize, path: usize, period: usize) -> &[f64] {
        let start = ((period * self.users + user) * self.paths + path) * self.chips;
        &self.values[start..start + self.chips]
    }

    /// All `K·L` codes of one period, user-major, each of length `N`.
    pub fn period_codes(&self, period: usize) -> &[f64] {
        let len = self.users * self.paths * self.chips;
        &self.values[period * len..(period + 1) * len]
    }

    /// Crosscorrelation `ρ_{kl,mj}(t) = s_kl(t)ᵀ s_mj(t)`.
    pub fn correlation(&self, period: usize, a: (usize, usize), b: (usize, usize)) -> f64 {
        let x = self.code(a.0, a.1, period);
        let y = self.code(b.0, b.1, period);
        x.iter().zip(y).map(|(u, v)| u * v).sum()
    }
}

/// Draws codes under the configured model.
///
/// Under the shifted model user `k` owns one i.i.d. chip stream of length
/// `N·M + L − 1`; path `l` at period `t` is the window starting at chip
/// `t·N + l`.
pub fn generate_codes(config: &SystemConfig, stream: &mut Stream) -> SpreadingEnsemble {
    let (k, l, m, n) = (
        config.users,
        config.paths,
        config.coherence,
        config.spreading_gain,
    );
    let amp = 1.0 / (n as f64).sqrt();
    let mut values = vec![0.0; k * l * m * n];
    match config.code_model {
        CodeModel::Independent => {
            for v in values.iter_mut() {
                *v = amp * random_sign(stream);
            }
        }
        CodeModel::Shifted => {
            let stream_len = n * m + l - 1;
            let mut chips = vec![0.0; stream_len];
            for user in 0..k {
                for c in chips.iter_mut() {
                    *c = amp * random_sign(stream);
                }
                for t in 0..m {
                    for path in 0..l {
                        let start = ((t * k + user) * l + path) * n;
                        let offset = t * n + path;
                        values[start..start + n].copy_from_slice(&chips[offset..offset + n]);
                    }
                }
            }
        }
    }
    SpreadingEnsemble {
        users: k,
        paths: l,
        periods: m,
        chips: n,
        model: config.code_model,
        values,
    }
}

/// Channel symbols `b_k(t) ∈ {±1}` of one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub users: usize,
    pub periods: usize,
    /// Indexed `t·K + k`.
    pub symbols: Vec<f64>,
    /// `true` for the training periods.
    pub training: Vec<bool>,
}

impl SymbolFrame {
    pub fn new(
        users: usize,
        periods: usize,
        symbols: Vec<f64>,
        training_periods: usize,
    ) -> Result<Self> {
        if symbols.len() != users * periods {
            return Err(Error::Config(format!(
                "expected {} symbols, got {}",
                users * periods,
                symbols.len()
            )));
        }
        if training_periods > periods {
            return Err(Error::Config(format!(
                "{training_periods} training periods in a {periods}-period frame"
            )));
        }
        if symbols.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::Config("symbols must be ±1".into()));
        }
        Ok(Self {
            users,
            periods,
            symbols,
            training: (0..periods).map(|t| t < training_periods).collect(),
        })
    }

    #[inline]
    pub fn symbol(&self, user: usize, period: usize) -> f64 {
        self.symbols[period * self.users + user]
    }

    pub fn period(&self, period: usize) -> &[f64] {
        &self.symbols[period * self.users..(period + 1) * self.users]
    }

    pub fn training_periods(&self) -> usize {
        self.training.iter().filter(|&&t| t).count()
    }
}

/// Uniform ±1 symbols; the first `M_t` periods are flagged as training.
pub fn generate_symbols(config: &SystemConfig, stream: &mut Stream) -> SymbolFrame {
    let symbols = (0..config.users * config.coherence)
        .map(|_| random_sign(stream))
        .collect();
    SymbolFrame {
        users: config.users,
        periods: config.coherence,
        symbols,
        training: (0..config.coherence).map(|t| t < config.training).collect(),
    }
}

/// Received chips and the noise that went into them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub chips: usize,
    pub periods: usize,
    /// Indexed `t·N + c`.
    pub samples: Vec<C64>,
    pub noise: Vec<C64>,
}

impl ReceivedFrame {
    #[inline]
    pub fn period(&self, period: usize) -> &[C64] {
        &self.samples[period * self.chips..(period + 1) * self.chips]
    }

    #[inline]
    pub fn noise_period(&self, period: usize) -> &[C64] {
        &self.noise[period * self.chips..(period + 1) * self.chips]
    }
}

/// Noise-free superposition `Σ_k b_k Σ_l a_kl s_kl(t)` for one period.
pub fn superpose(
    channel: &ChannelRealization,
    codes: &SpreadingEnsemble,
    symbols: &[f64],
    period: usize,
) -> Vec<C64> {
    let mut out = vec![C64::zero(); codes.chips];
    for user in 0..channel.users {
        let b = symbols[user];
        for path in 0..channel.paths {
            let w = channel.gain(user, path) * b;
            for (o, &s) in out.iter_mut().zip(codes.code(user, path, period)) {
                *o += w * s;
            }
        }
    }
    out
}

/// Synthesizes `r(t)` with CSCG noise of total variance `σ²` per chip.
pub fn synthesize_received(
    channel: &ChannelRealization,
    codes: &SpreadingEnsemble,
    symbols: &SymbolFrame,
    config: &SystemConfig,
    stream: &mut Stream,
) -> Result<ReceivedFrame> {
    if channel.users != codes.users
        || channel.paths != codes.paths
        || symbols.users != codes.users
        || symbols.periods != codes.periods
    {
        return Err(Error::Config(format!(
            "dimension mismatch: channel {}x{}, codes {}x{}x{}, symbols {}x{}",
            channel.users,
            channel.paths,
            codes.users,
            codes.paths,
            codes.periods,
            symbols.users,
            symbols.periods
        )));
    }
    let n = codes.chips;
    let mut samples = Vec::with_capacity(n * codes.periods);
    let mut noise = Vec::with_capacity(n * codes.periods);
    for t in 0..codes.periods {
        let clean = superpose(channel, codes, symbols.period(t), t);
        for c in clean {
            let w = if config.noise_variance > 0.0 {
                complex_gaussian(stream, config.noise_variance)
            } else {
                C64::zero()
            };
            noise.push(w);
            samples.push(c + w);
        }
    }
    Ok(ReceivedFrame {
        chips: n,
        periods: codes.periods,
        samples,
        noise,
    })
}

/// Hard decision feedback `b̂` with i.i.d. symbol flips.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackFrame {
    pub users: usize,
    pub periods: usize,
    /// Indexed `t·K + k`.
    pub decisions: Vec<f64>,
    pub realized_error_rate: f64,
    pub nominal_error_rate: f64,
}

impl FeedbackFrame {
    /// Error-free feedback.
    pub fn perfect(symbols: &SymbolFrame) -> Self {
        Self {
            users: symbols.users,
            periods: symbols.periods,
            decisions: symbols.symbols.clone(),
            realized_error_rate: 0.0,
            nominal_error_rate: 0.0,
        }
    }

    /// Wraps decoder decisions, counting their errors against `symbols`.
    pub fn from_decisions(symbols: &SymbolFrame, decisions: Vec<f64>) -> Result<Self> {
        if decisions.len() != symbols.symbols.len() {
            return Err(Error::Config("decision frame has wrong size".into()));
        }
        let errors = decisions
            .iter()
            .zip(&symbols.symbols)
            .filter(|(d, s)| d != s)
            .count();
        let rate = errors as f64 / decisions.len().max(1) as f64;
        Ok(Self {
            users: symbols.users,
            periods: symbols.periods,
            decisions,
            realized_error_rate: rate,
            nominal_error_rate: rate,
        })
    }

    #[inline]
    pub fn decision(&self, user: usize, period: usize) -> f64 {
        self.decisions[period * self.users + user]
    }

    pub fn period(&self, period: usize) -> &[f64] {
        &self.decisions[period * self.users..(period + 1) * self.users]
    }
}

/// Flips each symbol independently with probability `pe`. Training periods
/// are left intact when `protect_training` is set.
pub fn corrupt_feedback(
    symbols: &SymbolFrame,
    pe: f64,
    protect_training: bool,
    stream: &mut Stream,
) -> Result<FeedbackFrame> {
    if !(0.0..=0.5).contains(&pe) {
        return Err(Error::Parameter(format!(
            "feedback error probability must lie in [0, 0.5], got {pe}"
        )));
    }
    let mut decisions = symbols.symbols.clone();
    let mut flips = 0usize;
    let mut eligible = 0usize;
    for t in 0..symbols.periods {
        if protect_training && symbols.training[t] {
            continue;
        }
        for k in 0..symbols.users {
            eligible += 1;
            if pe > 0.0 && stream.random::<f64>() < pe {
                decisions[t * symbols.users + k] *= -1.0;
                flips += 1;
            }
        }
    }
    Ok(FeedbackFrame {
        users: symbols.users,
        periods: symbols.periods,
        decisions,
        realized_error_rate: if eligible > 0 {
            flips as f64 / eligible as f64
        } else {
            0.0
        },
        nominal_error_rate: pe,
    })
}

/// Everything that happened over one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRealization {
    pub channel: ChannelRealization,
    pub codes: SpreadingEnsemble,
    pub symbols: SymbolFrame,
    pub received: ReceivedFrame,
}

/// Draws a complete frame: channel, codes, symbols, then noise.
pub fn generate_frame(config: &SystemConfig, stream: &mut Stream) -> Result<FrameRealization> {
    config.validate()?;
    let channel = generate_channel(config, stream);
    let codes = generate_codes(config, stream);
    let symbols = generate_symbols(config, stream);
    let received = synthesize_received(&channel, &codes, &symbols, config, stream)?;
    Ok(FrameRealization {
        channel,
        codes,
        symbols,
        received,
    })
}

/// Draws channel, codes and noise for externally supplied symbols.
pub fn generate_frame_with_symbols(
    config: &SystemConfig,
    symbols: SymbolFrame,
    stream: &mut Stream,
) -> Result<FrameRealization> {
    config.validate()?;
    let channel = generate_channel(config, stream);
    let codes = generate_codes(config, stream);
    let received = synthesize_received(&channel, &codes, &symbols, config, stream)?;
    Ok(FrameRealization {
        channel,
        codes,
        symbols,
        received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;
    use crate::stats::Moments;

    #[test]
    fn unit_norm_codes_both_models() {
        for model in [CodeModel::Independent, CodeModel::Shifted] {
            let cfg = SystemConfig::new(3, 31, 4, 5).with_code_model(model);
            let codes = generate_codes(&cfg, &mut trial_stream(1, "codes", 0));
            for t in 0..5 {
                for k in 0..3 {
                    for l in 0..4 {
                        let s = codes.code(k, l, t);
                        let norm2: f64 = s.iter().map(|v| v * v).sum();
                        assert!((norm2 - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_codes_are_windows_of_one_stream() {
        let cfg = SystemConfig::new(2, 8, 3, 4);
        let codes = generate_codes(&cfg, &mut trial_stream(3, "codes", 0));
        for k in 0..2 {
            for t in 0..4 {
                // path l+1 is path l advanced by one chip
                for l in 0..2 {
                    let a = codes.code(k, l, t);
                    let b = codes.code(k, l + 1, t);
                    assert_eq!(&a[1..], &b[..7]);
                }
                // consecutive periods continue the same stream
                if t + 1 < 4 {
                    let last_path = codes.code(k, 2, t);
                    let next = codes.code(k, 0, t + 1);
                    assert_eq!(&last_path[8 - 2..], &next[..2]);
                }
            }
        }
    }

    #[test]
    fn single_term_superposition_is_exact() {
        let cfg = SystemConfig::new(1, 16, 1, 3);
        let mut s = trial_stream(4, "frame", 0);
        let f = generate_frame(&cfg, &mut s).unwrap();
        for t in 0..3 {
            let b = f.symbols.symbol(0, t);
            let a = f.channel.gain(0, 0);
            for (c, r) in f.received.period(t).iter().enumerate() {
                let want = a * b * f.codes.code(0, 0, t)[c];
                assert_eq!(*r, want);
            }
        }
    }

    #[test]
    fn frames_are_reproducible() {
        let cfg = SystemConfig::new(4, 16, 3, 5).with_noise_variance(0.2);
        let a = generate_frame(&cfg, &mut trial_stream(9, "frame", 2)).unwrap();
        let b = generate_frame(&cfg, &mut trial_stream(9, "frame", 2)).unwrap();
        assert_eq!(a, b);
        let c = generate_frame(&cfg, &mut trial_stream(9, "frame", 3)).unwrap();
        assert_ne!(a.channel, c.channel);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let cfg = SystemConfig::new(2, 8, 2, 3);
        let mut s = trial_stream(0, "x", 0);
        let ch = generate_channel(&cfg, &mut s);
        let codes = generate_codes(&cfg, &mut s);
        let other = SystemConfig::new(3, 8, 2, 3);
        let sym = generate_symbols(&other, &mut s);
        assert!(matches!(
            synthesize_received(&ch, &codes, &sym, &cfg, &mut s),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn feedback_corruption_statistics() {
        let cfg = SystemConfig::new(100, 1, 1, 1000);
        let mut s = trial_stream(5, "fb", 0);
        let sym = generate_symbols(&cfg, &mut s);
        let fb = corrupt_feedback(&sym, 0.0, false, &mut s).unwrap();
        assert_eq!(fb.decisions, sym.symbols);

        let fb = corrupt_feedback(&sym, 0.1, false, &mut s).unwrap();
        let n = sym.symbols.len() as f64;
        let se = (0.1 * 0.9 / n).sqrt();
        assert!((fb.realized_error_rate - 0.1).abs() < 3.0 * se);
        let b_db: Moments = sym
            .symbols
            .iter()
            .zip(&fb.decisions)
            .map(|(b, bh)| b * (b - bh))
            .collect();
        assert!((b_db.mean() - 0.2).abs() < 5.0 * b_db.std_error());

        let fb = corrupt_feedback(&sym, 0.5, false, &mut s).unwrap();
        let db2: Moments = sym
            .symbols
            .iter()
            .zip(&fb.decisions)
            .map(|(b, bh)| (b - bh) * (b - bh))
            .collect();
        assert!((db2.mean() - 2.0).abs() < 5.0 * db2.std_error());

        assert!(corrupt_feedback(&sym, 0.6, false, &mut s).is_err());
        assert!(corrupt_feedback(&sym, -0.1, false, &mut s).is_err());
    }

    #[test]
    fn training_periods_are_protected() {
        let cfg = SystemConfig::new(10, 1, 1, 10).with_training(4);
        let mut s = trial_stream(6, "fb", 0);
        let sym = generate_symbols(&cfg, &mut s);
        let fb = corrupt_feedback(&sym, 0.5, true, &mut s).unwrap();
        for t in 0..4 {
            assert_eq!(fb.period(t), sym.period(t));
        }
    }
}
