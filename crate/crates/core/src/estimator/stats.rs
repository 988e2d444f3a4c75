//! Monte Carlo statistics of the feedback-based estimation error.
//!
//! `Σ_f` follows the per-period convention of the analytic model: `δa_f` is an
//! average of `M` per-period terms `x(m)`, and `Σ_f = E{x xᴴ}/M`. Since
//! `E{δa_f δa_fᴴ} = E{x xᴴ}/M + (1 − 1/M)·μμᴴ` with `μ = E{δa_f | a}`, the
//! empirical `Σ_f` subtracts `(1 − 1/M)·μμᴴ` from the raw second moment. With
//! a fixed channel `μ` is the sample mean; with fresh channels it is the
//! pooled bias ratio times `a`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};

use crate::config::SystemConfig;
use crate::error::Result;
use crate::estimator::ml::{decompose_error, ApproximationMode};
use crate::estimator::solver::SolverSettings;
use crate::estimator::stacked::{all_periods, StackedMatrix, SymbolSource};
use crate::executor::TrialExecutor;
use crate::linalg::{CMatrix, C64};
use crate::model::{
    corrupt_feedback, generate_channel, generate_codes, generate_symbols, synthesize_received,
    ChannelRealization,
};
use crate::rng::trial_stream;
use crate::stats::Moments;

/// Whether each trial draws a new channel or all trials share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelPolicy {
    #[default]
    Fresh,
    /// One channel drawn from the master seed; codes, symbols, feedback
    /// errors and noise stay random. Needed for per-entry covariance checks.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationExperiment {
    pub config: SystemConfig,
    pub pe: f64,
    pub trials: usize,
    pub mode: ApproximationMode,
    pub channel: ChannelPolicy,
    pub solver: SolverSettings,
    pub master_seed: u64,
}

impl EstimationExperiment {
    pub fn new(config: SystemConfig, pe: f64, trials: usize) -> Self {
        let master_seed = config.seed;
        Self {
            config,
            pe,
            trials,
            mode: ApproximationMode::Exact,
            channel: ChannelPolicy::Fresh,
            solver: SolverSettings::default(),
            master_seed,
        }
    }

    pub fn with_mode(mut self, mode: ApproximationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_channel(mut self, channel: ChannelPolicy) -> Self {
        self.channel = channel;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    pub coherence: usize,
    pub pe: f64,
    /// `(1 − α)·Pe`: training symbols are never in error.
    pub effective_pe: f64,
    pub trial_count: usize,
    /// `Σ δa_f·a* / Σ |a|²` pooled over trials and components.
    pub bias_ratio: C64,
    /// Mean over components of `E{δa_f,i}/a_i` (fixed channel only).
    pub componentwise_bias_ratio: Option<C64>,
    pub delta_f: f64,
    pub delta_f_se: f64,
    pub delta_n: f64,
    pub delta_n_se: f64,
    pub delta_a: f64,
    pub delta_a_se: f64,
    /// `(1/KL)·Σ_i Re(δa_f,i · δa_n,i*)`.
    pub cross_term: f64,
    pub cross_term_se: f64,
    pub sigma_f: CMatrix,
    pub sigma_n: CMatrix,
    /// Standard errors of the real and imaginary parts of `sigma_n`,
    /// row-major.
    pub sigma_n_se: Vec<(f64, f64)>,
    pub channel: Option<ChannelRealization>,
}

struct Draw {
    gains: Vec<C64>,
    feedback: Vec<C64>,
    noise: Vec<C64>,
    total: Vec<C64>,
}

fn run_trial(
    exp: &EstimationExperiment,
    trial: usize,
    fixed: Option<&ChannelRealization>,
) -> Result<Draw> {
    let cfg = &exp.config;
    let mut st = trial_stream(exp.master_seed, "estimation", trial as u64);
    let channel = match fixed {
        Some(c) => c.clone(),
        None => generate_channel(cfg, &mut st),
    };
    let codes = generate_codes(cfg, &mut st);
    let symbols = generate_symbols(cfg, &mut st);
    let received = synthesize_received(&channel, &codes, &symbols, cfg, &mut st)?;
    let feedback = corrupt_feedback(&symbols, exp.pe, true, &mut st)?;
    let periods = all_periods(cfg.coherence);
    let s = StackedMatrix::build(&codes, &symbols.symbols, &periods, SymbolSource::Truth)?;
    let sh = StackedMatrix::build(
        &codes,
        &feedback.decisions,
        &periods,
        SymbolSource::Feedback,
    )?;
    let d = decompose_error(&channel, &s, &sh, &received, exp.mode, &exp.solver)?;
    Ok(Draw {
        gains: channel.gains,
        feedback: d.feedback_part,
        noise: d.noise_part,
        total: d.delta_a,
    })
}

/// Runs the estimation experiment and reduces the trials in order.
pub fn empirical_estimation_stats<E: TrialExecutor>(
    exp: &EstimationExperiment,
    exec: &E,
) -> Result<EstimationStats> {
    exp.config.validate()?;
    let fixed = match exp.channel {
        ChannelPolicy::Fixed => Some(generate_channel(
            &exp.config,
            &mut trial_stream(exp.master_seed, "estimation-channel", 0),
        )),
        ChannelPolicy::Fresh => None,
    };
    let draws: Vec<Draw> = exec
        .run(exp.trials, |t| run_trial(exp, t, fixed.as_ref()))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(reduce(exp, &draws, fixed))
}

fn reduce(
    exp: &EstimationExperiment,
    draws: &[Draw],
    fixed: Option<ChannelRealization>,
) -> EstimationStats {
    let n = exp.config.unknowns();
    let m = exp.config.coherence as f64;
    let keep = 1.0 - 1.0 / m;
    let trials = draws.len() as f64;

    let mut num = C64::zero();
    let mut den = 0.0;
    for d in draws {
        for (f, a) in d.feedback.iter().zip(&d.gains) {
            num += f * a.conj();
            den += a.norm_sqr();
        }
    }
    let bias_ratio = if den > 0.0 { num / den } else { C64::zero() };

    let mut mean_f = vec![C64::zero(); n];
    for d in draws {
        for (acc, v) in mean_f.iter_mut().zip(&d.feedback) {
            *acc += v / trials;
        }
    }
    let componentwise_bias_ratio = fixed.as_ref().map(|c| {
        let s: C64 = mean_f.iter().zip(&c.gains).map(|(f, a)| f / a).sum();
        s / n as f64
    });

    // conditional mean of δa_f for one trial
    let mu = |d: &Draw| -> Vec<C64> {
        match &fixed {
            Some(_) => mean_f.clone(),
            None => d.gains.iter().map(|a| bias_ratio * a).collect(),
        }
    };

    let mut sigma_f = CMatrix::zeros(n);
    let mut sigma_n = CMatrix::zeros(n);
    let mut sq_n = vec![(0.0f64, 0.0f64); n * n];
    let (mut qf, mut qn, mut qa, mut qc) = (
        Moments::new(),
        Moments::new(),
        Moments::new(),
        Moments::new(),
    );
    let inv_n = 1.0 / n as f64;
    for d in draws {
        let mu_t = mu(d);
        let mut f_tr = 0.0;
        let mut n_tr = 0.0;
        let mut a_tr = 0.0;
        let mut c_tr = 0.0;
        for i in 0..n {
            let mi = mu_t[i].norm_sqr();
            f_tr += d.feedback[i].norm_sqr() - keep * mi;
            n_tr += d.noise[i].norm_sqr();
            a_tr += d.total[i].norm_sqr() - keep * mi;
            c_tr += (d.feedback[i] * d.noise[i].conj()).re;
            for j in 0..n {
                let f = d.feedback[i] * d.feedback[j].conj();
                sigma_f.add_to(i, j, f);
                let v = d.noise[i] * d.noise[j].conj();
                sigma_n.add_to(i, j, v);
                let e = &mut sq_n[i * n + j];
                e.0 += v.re * v.re;
                e.1 += v.im * v.im;
            }
        }
        qf.push(f_tr * inv_n);
        qn.push(n_tr * inv_n);
        qa.push(a_tr * inv_n);
        qc.push(c_tr * inv_n);
    }
    sigma_f.scale(1.0 / trials);
    sigma_n.scale(1.0 / trials);

    // remove the across-period mean product
    match &fixed {
        Some(_) => {
            for i in 0..n {
                for j in 0..n {
                    sigma_f.add_to(i, j, -(mean_f[i] * mean_f[j].conj()) * keep);
                }
            }
        }
        None => {
            let mut avg = CMatrix::zeros(n);
            for d in draws {
                for i in 0..n {
                    for j in 0..n {
                        avg.add_to(i, j, d.gains[i] * d.gains[j].conj());
                    }
                }
            }
            let r2 = bias_ratio.norm_sqr() * keep / trials;
            for i in 0..n {
                for j in 0..n {
                    sigma_f.add_to(i, j, -avg.get(i, j) * r2);
                }
            }
        }
    }

    let sigma_n_se = sq_n
        .iter()
        .enumerate()
        .map(|(idx, &(sre, sim))| {
            let mean = sigma_n.get(idx / n, idx % n);
            let var_re =
                (sre / trials - mean.re * mean.re).max(0.0) * trials / (trials - 1.0).max(1.0);
            let var_im =
                (sim / trials - mean.im * mean.im).max(0.0) * trials / (trials - 1.0).max(1.0);
            ((var_re / trials).sqrt(), (var_im / trials).sqrt())
        })
        .collect();

    EstimationStats {
        coherence: exp.config.coherence,
        pe: exp.pe,
        effective_pe: (1.0 - exp.config.training_fraction()) * exp.pe,
        trial_count: draws.len(),
        bias_ratio,
        componentwise_bias_ratio,
        delta_f: qf.mean(),
        delta_f_se: qf.std_error(),
        delta_n: qn.mean(),
        delta_n_se: qn.std_error(),
        delta_a: qa.mean(),
        delta_a_se: qa.std_error(),
        cross_term: qc.mean(),
        cross_term_se: qc.std_error(),
        sigma_f,
        sigma_n,
        sigma_n_se,
        channel: fixed,
    }
}

impl EstimationStats {
    /// Mean of the diagonal of `M·Σ_n`.
    pub fn scaled_noise_diagonal(&self) -> f64 {
        let n = self.sigma_n.dim();
        (0..n).map(|i| self.sigma_n.get(i, i).re).sum::<f64>() * self.coherence as f64 / n as f64
    }

    /// Largest `|mean|/SE` over the real and imaginary parts of the
    /// off-diagonal entries of `Σ_n`.
    pub fn noise_offdiagonal_max_z(&self) -> f64 {
        let n = self.sigma_n.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = self.sigma_n.get(i, j);
                let (se_re, se_im) = self.sigma_n_se[i * n + j];
                if se_re > 0.0 {
                    worst = worst.max(v.re.abs() / se_re);
                }
                if se_im > 0.0 {
                    worst = worst.max(v.im.abs() / se_im);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::Sequential;

    #[test]
    fn zero_error_rate_gives_no_feedback_error() {
        let cfg = SystemConfig::new(4, 32, 2, 10)
            .with_noise_variance(0.1)
            .with_seed(3);
        let s = empirical_estimation_stats(&EstimationExperiment::new(cfg, 0.0, 20), &Sequential)
            .unwrap();
        assert_eq!(s.delta_f, 0.0);
        assert_eq!(s.bias_ratio, C64::zero());
        assert!(s.delta_n > 0.0);
        assert!((s.delta_a - s.delta_n).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SystemConfig::new(3, 16, 2, 8)
            .with_noise_variance(0.2)
            .with_seed(11);
        let e = EstimationExperiment::new(cfg, 0.1, 10);
        let a = empirical_estimation_stats(&e, &Sequential).unwrap();
        let b = empirical_estimation_stats(&e, &Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_channel_reports_componentwise_ratio() {
        let cfg = SystemConfig::new(3, 32, 2, 20)
            .with_noise_variance(0.1)
            .with_seed(5);
        let e = EstimationExperiment::new(cfg, 0.1, 30).with_channel(ChannelPolicy::Fixed);
        let s = empirical_estimation_stats(&e, &Sequential).unwrap();
        assert!(s.componentwise_bias_ratio.is_some());
        assert!(s.channel.is_some());
        let fresh =
            empirical_estimation_stats(&e.clone().with_channel(ChannelPolicy::Fresh), &Sequential)
                .unwrap();
        assert!(fresh.componentwise_bias_ratio.is_none());
    }
}
