//! The complete iterative receiver.
//!
//! Each user transmits one codeword whose (channel-interleaved) symbols fill
//! the data periods of consecutive coherence blocks; every block has its own
//! channel, codes and `M_t` leading training periods. Iteration 0 estimates
//! the channel from training alone and detects with LMMSE. Every further
//! iteration re-estimates the channel from training plus the re-encoded
//! decoder decisions, runs PIC + MRC with the same decisions and decodes
//! again.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};
use rand::Rng;

use crate::analysis::{map_coefficients, MapCoefficients};
use crate::codec::{Codec, GCurve};
use crate::config::SystemConfig;
use crate::detector::{lmmse_detect, matched_filter, pic_mrc, residual_interference};
use crate::error::{Error, Result};
use crate::estimator::{
    all_periods, ml_estimate, training_periods, SolverSettings, StackedMatrix, SymbolSource,
};
use crate::executor::TrialExecutor;
use crate::linalg::C64;
use crate::model::{generate_frame_with_symbols, FrameRealization, SymbolFrame};
use crate::rng::{child_stream, random_sign, trial_stream};
use crate::stats::binomial_std_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ReceiverMode {
    /// Training-based initialization, then feedback-aided iterations.
    #[default]
    Iterative,
    /// Iteration 0 only.
    LmmseOnly,
    /// True channel for the initial LMMSE stage, estimated afterwards.
    PerfectInit,
    /// True channel throughout.
    PerfectCsi,
    /// True channel and error-free feedback: iterations see only noise and
    /// same-user cross-path terms.
    Genie,
}

impl ReceiverMode {
    pub const ALL: [ReceiverMode; 5] = [
        ReceiverMode::Iterative,
        ReceiverMode::LmmseOnly,
        ReceiverMode::PerfectInit,
        ReceiverMode::PerfectCsi,
        ReceiverMode::Genie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverMode::Iterative => "iterative",
            ReceiverMode::LmmseOnly => "lmmse_only",
            ReceiverMode::PerfectInit => "perfect_init",
            ReceiverMode::PerfectCsi => "perfect_csi",
            ReceiverMode::Genie => "genie",
        }
    }

    fn known_channel_at_start(self) -> bool {
        !matches!(self, ReceiverMode::Iterative | ReceiverMode::LmmseOnly)
    }

    fn known_channel_later(self) -> bool {
        matches!(self, ReceiverMode::PerfectCsi | ReceiverMode::Genie)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSettings {
    pub mode: ReceiverMode,
    /// Feedback iterations after the initial stage.
    pub iterations: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub solver: SolverSettings,
}

impl ReceiverSettings {
    pub fn new(mode: ReceiverMode, trials: usize) -> Self {
        Self {
            mode,
            iterations: 6,
            trials,
            master_seed: 0,
            solver: SolverSettings::default(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Channel-symbol feedback error rate after decoding.
    pub pe: f64,
    pub pe_std_error: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    /// `E{|a − â|²}` of the estimate used in this iteration.
    pub delta_a: f64,
    /// Iteration 0: `E{|ẑ − b|²}` of the unbiased LMMSE outputs. Later:
    /// `E{|ỹ_kl − a_kl b_k|²}` after PIC.
    pub sigma_i_sq: f64,
    /// Map prediction `g(D0 + D1·Pe⁽ᵈ⁻¹⁾)`, seeded with the measured `Pe⁽⁰⁾`.
    pub predicted_pe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub mode: ReceiverMode,
    pub trials: usize,
    pub blocks_per_codeword: usize,
    pub coefficients: MapCoefficients,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a trace has at least the initial record")
    }
}

/// Coherence blocks needed to carry one codeword. The codeword length must
/// be a multiple of the `M − M_t` data periods per block.
pub fn blocks_per_codeword(config: &SystemConfig, codeword_length: usize) -> Result<usize> {
    let data = config.coherence.saturating_sub(config.training);
    if data == 0 || codeword_length % data != 0 {
        return Err(Error::Config(format!(
            "a {codeword_length}-symbol codeword does not fill whole blocks of {data} data periods"
        )));
    }
    Ok(codeword_length / data)
}

/// Map coefficients used for the predicted trajectory of `mode`.
pub fn mode_coefficients(config: &SystemConfig, mode: ReceiverMode) -> Result<MapCoefficients> {
    let beta = config.load();
    if mode.known_channel_later() {
        let mut c = map_coefficients(config.noise_variance, beta, config.paths, config.coherence)?;
        c.d0 = config.noise_variance;
        c.d1 = 4.0 * beta;
        Ok(c)
    } else {
        map_coefficients(config.noise_variance, beta, config.paths, config.coherence)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    symbol_errors: u64,
    symbols: u64,
    bit_errors: u64,
    bits: u64,
    da_sum: f64,
    da_n: u64,
    si_sum: f64,
    si_n: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.symbol_errors += o.symbol_errors;
        self.symbols += o.symbols;
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.da_sum += o.da_sum;
        self.da_n += o.da_n;
        self.si_sum += o.si_sum;
        self.si_n += o.si_n;
    }
}

struct Trial<'a> {
    config: &'a SystemConfig,
    codec: &'a Codec,
    settings: &'a ReceiverSettings,
    data: usize,
    info: Vec<Vec<u8>>,
    codewords: Vec<Vec<f64>>,
    frames: Vec<FrameRealization>,
}

impl<'a> Trial<'a> {
    fn draw(
        config: &'a SystemConfig,
        codec: &'a Codec,
        settings: &'a ReceiverSettings,
        blocks: usize,
        index: usize,
    ) -> Result<Self> {
        let (k, m, mt) = (config.users, config.coherence, config.training);
        let data = m - mt;
        let mut st = trial_stream(settings.master_seed, "pipeline", index as u64);
        let info: Vec<Vec<u8>> = (0..k)
            .map(|_| {
                (0..codec.info_length())
                    .map(|_| st.random_range(0..2u8))
                    .collect()
            })
            .collect();
        let codewords = info
            .iter()
            .map(|i| codec.encode(i))
            .collect::<Result<Vec<_>>>()?;
        let mut frames = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let mut bs = child_stream(&mut st, b as u64);
            let mut symbols = vec![0.0; k * m];
            for t in 0..m {
                for user in 0..k {
                    symbols[t * k + user] = if t < mt {
                        random_sign(&mut bs)
                    } else {
                        codewords[user][b * data + t - mt]
                    };
                }
            }
            let frame = SymbolFrame::new(k, m, symbols, mt)?;
            frames.push(generate_frame_with_symbols(config, frame, &mut bs)?);
        }
        Ok(Self {
            config,
            codec,
            settings,
            data,
            info,
            codewords,
            frames,
        })
    }

    fn estimation_error(&self, frame: &FrameRealization, estimate: &[C64], c: &mut Counts) {
        for (a, e) in frame.channel.gains.iter().zip(estimate) {
            c.da_sum += (a - e).norm_sqr();
            c.da_n += 1;
        }
    }

    /// Decodes per-user LLR streams and returns the re-encoded symbols.
    fn decode(&self, llr: &[Vec<f64>], c: &mut Counts) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(llr.len());
        for (user, l) in llr.iter().enumerate() {
            let d = self.codec.decode_llr(l)?;
            c.symbol_errors += d
                .symbols
                .iter()
                .zip(&self.codewords[user])
                .filter(|(a, b)| a != b)
                .count() as u64;
            c.symbols += d.symbols.len() as u64;
            c.bit_errors += d
                .info
                .iter()
                .zip(&self.info[user])
                .filter(|(a, b)| a != b)
                .count() as u64;
            c.bits += d.info.len() as u64;
            out.push(d.symbols);
        }
        Ok(out)
    }

    fn initial_stage(&self) -> Result<(Counts, Vec<Vec<f64>>)> {
        let cfg = self.config;
        let (k, mt) = (cfg.users, cfg.training);
        let n = self.codec.codeword_length();
        let mut llr = vec![vec![0.0; n]; k];
        let mut c = Counts::default();
        for (b, f) in self.frames.iter().enumerate() {
            let estimate = if self.settings.mode.known_channel_at_start() {
                f.channel.gains.clone()
            } else {
                let periods = training_periods(&f.symbols.training);
                let sh = StackedMatrix::build(
                    &f.codes,
                    &f.symbols.symbols,
                    &periods,
                    SymbolSource::Training,
                )?;
                ml_estimate(&sh, &f.received, &self.settings.solver)?.gains
            };
            self.estimation_error(f, &estimate, &mut c);
            for p in 0..self.data {
                let t = mt + p;
                let out = lmmse_detect(
                    f.received.period(t),
                    &estimate,
                    &f.codes,
                    t,
                    cfg.noise_variance,
                );
                for user in 0..k {
                    let z = out.soft[user];
                    llr[user][b * self.data + p] = 4.0 * out.sinr[user] * z.re;
                    c.si_sum += (z - f.symbols.symbol(user, t)).norm_sqr();
                    c.si_n += 1;
                }
            }
        }
        let decisions = self.decode(&llr, &mut c)?;
        Ok((c, decisions))
    }

    fn feedback_stage(&self, decisions: &[Vec<f64>]) -> Result<(Counts, Vec<Vec<f64>>)> {
        let cfg = self.config;
        let (k, l, m, mt) = (cfg.users, cfg.paths, cfg.coherence, cfg.training);
        let n = self.codec.codeword_length();
        let mut z_all = vec![vec![0.0; n]; k];
        let mut c = Counts::default();
        // receiver-side σ_I² estimate from residuals against its own decisions
        let (mut r_sum, mut r_n) = (0.0, 0usize);
        for (b, f) in self.frames.iter().enumerate() {
            let mut fb = f.symbols.symbols.clone();
            if self.settings.mode != ReceiverMode::Genie {
                for p in 0..self.data {
                    for user in 0..k {
                        fb[(mt + p) * k + user] = decisions[user][b * self.data + p];
                    }
                }
            }
            let estimate = if self.settings.mode.known_channel_later() {
                f.channel.gains.clone()
            } else {
                let sh =
                    StackedMatrix::build(&f.codes, &fb, &all_periods(m), SymbolSource::Feedback)?;
                ml_estimate(&sh, &f.received, &self.settings.solver)?.gains
            };
            self.estimation_error(f, &estimate, &mut c);
            for p in 0..self.data {
                let t = mt + p;
                let fbt = &fb[t * k..(t + 1) * k];
                let mf = matched_filter(f.received.period(t), &f.codes, t);
                let out = pic_mrc(&mf, &estimate, fbt, &f.codes, t);
                let (res, _) =
                    residual_interference(&out, &f.channel, f.symbols.period(t), &f.codes, t);
                for v in &res {
                    c.si_sum += v.norm_sqr();
                    c.si_n += 1;
                }
                for user in 0..k {
                    z_all[user][b * self.data + p] = out.combined[user].re;
                    for j in 0..l {
                        let i = user * l + j;
                        r_sum += (out.cleaned[i] - estimate[i] * fbt[user]).norm_sqr();
                        r_n += 1;
                    }
                }
            }
        }
        let sigma_hat = if r_n > 0 && r_sum > 0.0 {
            r_sum / r_n as f64
        } else {
            1.0
        };
        let llr: Vec<Vec<f64>> = z_all
            .into_iter()
            .map(|z| z.into_iter().map(|v| 4.0 * v / sigma_hat).collect())
            .collect();
        let new = self.decode(&llr, &mut c)?;
        Ok((c, new))
    }

    fn run(&self) -> Result<Vec<Counts>> {
        let iterations = if self.settings.mode == ReceiverMode::LmmseOnly {
            0
        } else {
            self.settings.iterations
        };
        let (c0, mut decisions) = self.initial_stage()?;
        let mut out = Vec::with_capacity(iterations + 1);
        out.push(c0);
        for _ in 1..=iterations {
            let (c, next) = self.feedback_stage(&decisions)?;
            out.push(c);
            // a repeated input repeats every later iteration exactly
            if next == decisions {
                while out.len() <= iterations {
                    out.push(c);
                }
                break;
            }
            decisions = next;
        }
        Ok(out)
    }
}

/// Runs the receiver over `settings.trials` independent trials, each carrying
/// one codeword per user, and reports per-iteration error rates next to the
/// trajectory predicted by the scalar map (when `g` is given).
pub fn run_iterative_receiver<E: TrialExecutor>(
    config: &SystemConfig,
    codec: &Codec,
    g: Option<&GCurve>,
    settings: &ReceiverSettings,
    exec: &E,
) -> Result<IterationTrace> {
    config.validate()?;
    if settings.trials == 0 {
        return Err(Error::Parameter("at least one trial is needed".into()));
    }
    if settings.mode != ReceiverMode::LmmseOnly && settings.iterations == 0 {
        return Err(Error::Parameter(
            "at least one feedback iteration is needed".into(),
        ));
    }
    let blocks = blocks_per_codeword(config, codec.codeword_length())?;
    let coefficients = mode_coefficients(config, settings.mode)?;
    let results = exec.run(settings.trials, |t| {
        Trial::draw(config, codec, settings, blocks, t).and_then(|trial| trial.run())
    });
    let mut totals: Vec<Counts> = Vec::new();
    for r in results {
        let r = r?;
        if totals.is_empty() {
            totals = vec![Counts::default(); r.len()];
        }
        for (t, c) in totals.iter_mut().zip(&r) {
            t.add(c);
        }
    }
    let mut records = Vec::with_capacity(totals.len());
    let mut predicted: Option<f64> = None;
    for (d, c) in totals.iter().enumerate() {
        let pe = c.symbol_errors as f64 / c.symbols.max(1) as f64;
        let predicted_pe = match (g, d) {
            (Some(_), 0) => Some(pe),
            (Some(g), _) => predicted.map(|p| g.eval(coefficients.abscissa(p))),
            (None, _) => None,
        };
        predicted = predicted_pe;
        records.push(IterationRecord {
            iteration: d,
            pe,
            pe_std_error: binomial_std_error(pe, c.symbols as f64),
            ber: c.bit_errors as f64 / c.bits.max(1) as f64,
            bit_errors: c.bit_errors,
            bits: c.bits,
            delta_a: c.da_sum / c.da_n.max(1) as f64,
            sigma_i_sq: c.si_sum / c.si_n.max(1) as f64,
            predicted_pe,
        });
    }
    Ok(IterationTrace {
        mode: settings.mode,
        trials: settings.trials,
        blocks_per_codeword: blocks,
        coefficients,
        records,
    })
}
