//! Monte Carlo statistics of PIC + MRC with i.i.d. feedback errors.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};

use crate::config::SystemConfig;
use crate::detector::{matched_filter, pic_mrc, residual_interference};
use crate::error::Result;
use crate::estimator::{
    all_periods, ml_estimate, ml_estimate_leave_one_out, SolverSettings, StackedMatrix,
    SymbolSource,
};
use crate::executor::TrialExecutor;
use crate::linalg::C64;
use crate::model::{corrupt_feedback, generate_frame};
use crate::rng::trial_stream;
use crate::stats::{q_function, Moments};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorExperiment {
    pub config: SystemConfig,
    pub pe: f64,
    pub trials: usize,
    pub solver: SolverSettings,
    pub window: EstimationWindow,
    pub master_seed: u64,
}

/// Which periods feed the channel estimate used to detect period `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimationWindow {
    /// All `M` periods, including `t` itself.
    #[default]
    AllPeriods,
    /// All periods except `t`, so the estimate is independent of the
    /// feedback error and noise being detected.
    LeaveOneOut,
}

impl DetectorExperiment {
    pub fn new(config: SystemConfig, pe: f64, trials: usize) -> Self {
        let master_seed = config.seed;
        Self {
            config,
            pe,
            trials,
            solver: SolverSettings::default(),
            window: EstimationWindow::AllPeriods,
            master_seed,
        }
    }

    pub fn with_window(mut self, window: EstimationWindow) -> Self {
        self.window = window;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorStats {
    pub pe: f64,
    pub decisions: usize,
    /// `E{|I_kl|²}` including same-user cross-path terms.
    pub sigma_i_sq: f64,
    pub sigma_i_sq_se: f64,
    /// `E{|I_kl|²}` with the same-user cross-path terms removed.
    pub sigma_i_sq_other_users: f64,
    /// Mean of `I_kl` and the standard errors of its parts.
    pub residual_mean: C64,
    pub residual_mean_se: (f64, f64),
    /// `E{Re(I_k0 · I_k1*)}` between the first two paths of each user.
    pub cross_path_covariance: f64,
    pub cross_path_covariance_se: f64,
    /// `Σ Re(z_k b_k) / Σ Σ_l |a_kl|²`.
    pub gain: f64,
    /// `E{|Σ_l â*_kl I_kl|²}`.
    pub output_noise_variance: f64,
    /// `E{|a − â − r·a|²}` with `r` the pooled bias ratio.
    pub delta_a: f64,
    pub bias_ratio: C64,
    pub ser_sim: f64,
    /// Mean over decisions of `Q(Re(Σ â*a) / √(Σ|â|²·σ_I²/2))`.
    pub ser_gauss: f64,
    /// Skewness and excess kurtosis of `Re(b_k Σ â*I) / √(Σ|â|²·σ_I²/2)`.
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Default)]
struct Partial {
    interference: Moments,
    other_users: Moments,
    res_re: Moments,
    res_im: Moments,
    cross_path: Moments,
    num_gain: f64,
    energy: f64,
    noise_power: f64,
    bias_num: C64,
    err_sq: f64,
    gains_sq: f64,
    err_gain: C64,
    errors: usize,
    // per decision: (Re(Σâ*a), Σ|â|², Re(b·Σâ*I))
    records: Vec<(f64, f64, f64)>,
}

fn run_trial(exp: &DetectorExperiment, trial: usize) -> Result<Partial> {
    let cfg = &exp.config;
    let mut st = trial_stream(exp.master_seed, "detector", trial as u64);
    let f = generate_frame(cfg, &mut st)?;
    let fb = corrupt_feedback(&f.symbols, exp.pe, true, &mut st)?;
    let periods = all_periods(cfg.coherence);
    let sh = StackedMatrix::build(&f.codes, &fb.decisions, &periods, SymbolSource::Feedback)?;
    let estimates = match exp.window {
        EstimationWindow::AllPeriods => {
            let g = ml_estimate(&sh, &f.received, &exp.solver)?.gains;
            vec![g; cfg.coherence]
        }
        EstimationWindow::LeaveOneOut => ml_estimate_leave_one_out(&sh, &f.received, &exp.solver)?,
    };
    let (k, l) = (cfg.users, cfg.paths);
    let a = &f.channel.gains;

    let mut p = Partial::default();
    for (t, ah) in estimates.iter().enumerate() {
        for (x, y) in a.iter().zip(ah) {
            let d = x - y;
            p.bias_num += d * x.conj();
            p.gains_sq += x.norm_sqr();
            p.err_sq += d.norm_sqr();
            p.err_gain += d.conj() * x;
        }
        let mut signal = Vec::with_capacity(k);
        let mut scale = Vec::with_capacity(k);
        for user in 0..k {
            let s: C64 = (0..l)
                .map(|j| ah[user * l + j].conj() * a[user * l + j])
                .sum();
            signal.push(s.re);
            scale.push((0..l).map(|j| ah[user * l + j].norm_sqr()).sum::<f64>());
        }
        let mf = matched_filter(f.received.period(t), &f.codes, t);
        let b = f.symbols.period(t);
        let out = pic_mrc(&mf, ah, fb.period(t), &f.codes, t);
        let (res, cross) = residual_interference(&out, &f.channel, b, &f.codes, t);
        for user in 0..k {
            let mut n = C64::zero();
            for j in 0..l {
                let i = user * l + j;
                let v = res[i];
                p.interference.push(v.norm_sqr());
                p.other_users.push((v - cross[i]).norm_sqr());
                p.res_re.push(v.re);
                p.res_im.push(v.im);
                n += ah[i].conj() * v;
            }
            if l >= 2 {
                p.cross_path
                    .push((res[user * l] * res[user * l + 1].conj()).re);
            }
            let z = out.combined[user];
            p.num_gain += z.re * b[user];
            p.energy += f.channel.user_energy(user);
            p.noise_power += n.norm_sqr();
            if out.decisions[user] != b[user] {
                p.errors += 1;
            }
            p.records.push((signal[user], scale[user], n.re * b[user]));
        }
    }
    Ok(p)
}

/// Runs the PIC experiment: each trial draws a frame, flips feedback symbols
/// with probability `Pe`, estimates the channel from the feedback over the
/// configured window and applies PIC + MRC to every period.
pub fn measure_pic_stats<E: TrialExecutor>(
    exp: &DetectorExperiment,
    exec: &E,
) -> Result<DetectorStats> {
    exp.config.validate()?;
    let parts: Vec<Partial> = exec
        .run(exp.trials, |t| run_trial(exp, t))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut interference = Moments::new();
    let mut other = Moments::new();
    let mut res_re = Moments::new();
    let mut res_im = Moments::new();
    let mut cross = Moments::new();
    let (mut num_gain, mut energy, mut noise_power) = (0.0, 0.0, 0.0);
    let (mut bias_num, mut gains_sq, mut err_sq, mut err_gain) =
        (C64::zero(), 0.0, 0.0, C64::zero());
    let mut errors = 0usize;
    let mut records = Vec::new();
    for p in parts {
        interference.merge(&p.interference);
        other.merge(&p.other_users);
        res_re.merge(&p.res_re);
        res_im.merge(&p.res_im);
        cross.merge(&p.cross_path);
        num_gain += p.num_gain;
        energy += p.energy;
        noise_power += p.noise_power;
        bias_num += p.bias_num;
        gains_sq += p.gains_sq;
        err_sq += p.err_sq;
        err_gain += p.err_gain;
        errors += p.errors;
        records.extend(p.records);
    }
    let decisions = records.len();
    let sigma_i_sq = interference.mean();
    let bias_ratio = if gains_sq > 0.0 {
        bias_num / gains_sq
    } else {
        C64::zero()
    };
    // pooled E{|δa − r·a|²}
    let unknowns = (exp.config.unknowns() * exp.config.coherence * exp.trials) as f64;
    let delta_a =
        (err_sq - 2.0 * (bias_ratio * err_gain).re + bias_ratio.norm_sqr() * gains_sq) / unknowns;

    let mut ser_gauss = 0.0;
    let mut standardized = Moments::new();
    for &(signal, scale, noise) in &records {
        let sd = (scale * sigma_i_sq / 2.0).sqrt();
        if sd > 0.0 {
            ser_gauss += q_function(signal / sd);
            standardized.push(noise / sd);
        }
    }
    let nd = decisions.max(1) as f64;
    Ok(DetectorStats {
        pe: exp.pe,
        decisions,
        sigma_i_sq,
        sigma_i_sq_se: interference.std_error(),
        sigma_i_sq_other_users: other.mean(),
        residual_mean: C64::new(res_re.mean(), res_im.mean()),
        residual_mean_se: (res_re.std_error(), res_im.std_error()),
        cross_path_covariance: cross.mean(),
        cross_path_covariance_se: cross.std_error(),
        gain: num_gain / energy,
        output_noise_variance: noise_power / nd,
        delta_a,
        bias_ratio,
        ser_sim: errors as f64 / nd,
        ser_gauss: ser_gauss / nd,
        skewness: standardized.skewness(),
        excess_kurtosis: standardized.excess_kurtosis(),
    })
}
