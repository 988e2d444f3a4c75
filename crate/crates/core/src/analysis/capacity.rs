use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{Codec, CodecSpec};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::executor::TrialExecutor;
use crate::pipeline::{
    blocks_per_codeword, run_iterative_receiver, ReceiverMode, ReceiverSettings,
};

/// Largest load at which the receiver reaches a target information BER.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySearch {
    /// Scenario with everything but the user count fixed.
    pub template: SystemConfig,
    pub codec: CodecSpec,
    pub mode: ReceiverMode,
    pub target_ber: f64,
    /// Feedback iterations per probe.
    pub iterations: usize,
    /// Each probe simulates at least this many information bits.
    pub min_bits: usize,
    /// Grid step and range of β.
    pub step: f64,
    pub beta_max: f64,
    pub master_seed: u64,
}

impl CapacitySearch {
    pub fn new(template: SystemConfig, codec: CodecSpec, mode: ReceiverMode) -> Self {
        let master_seed = template.seed;
        Self {
            template,
            codec,
            mode,
            target_ber: 1e-3,
            iterations: 6,
            min_bits: 20_000,
            step: 0.05,
            beta_max: 2.0,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityProbe {
    pub beta: f64,
    pub users: usize,
    pub trials: usize,
    pub ber: f64,
    pub feasible: bool,
    /// Why a probe was declared infeasible without (or despite) simulation.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub mode: ReceiverMode,
    /// 0 when even the smallest grid load fails.
    pub beta_max: f64,
    pub probes: Vec<CapacityProbe>,
    pub diagnostic: Option<String>,
}

fn probe<E: TrialExecutor>(
    s: &CapacitySearch,
    codec: &Codec,
    index: usize,
    exec: &E,
) -> Result<CapacityProbe> {
    let n = s.template.spreading_gain;
    // label 0.3 rather than 0.30000000000000004
    let beta = (s.step * index as f64 * 1e9).round() / 1e9;
    let users = ((beta * n as f64).round() as usize).max(1);
    let mut cfg = s.template.clone();
    cfg.users = users;
    let (l, m, mt) = (cfg.paths, cfg.coherence, cfg.training);
    let trials = s.min_bits.div_ceil(users * codec.info_length()).max(1);
    let mut out = CapacityProbe {
        beta,
        users,
        trials,
        ber: 1.0,
        feasible: false,
        note: None,
    };
    let needs_training = matches!(s.mode, ReceiverMode::Iterative | ReceiverMode::LmmseOnly);
    let needs_feedback = matches!(s.mode, ReceiverMode::Iterative | ReceiverMode::PerfectInit);
    if needs_training && users * l >= mt * n {
        out.note = Some(format!(
            "{} unknowns exceed {} training equations",
            users * l,
            mt * n
        ));
        return Ok(out);
    }
    if needs_feedback && users * l >= m * n {
        out.note = Some(format!("{} unknowns exceed {} equations", users * l, m * n));
        return Ok(out);
    }
    let settings = ReceiverSettings::new(s.mode, trials)
        .with_iterations(s.iterations)
        .with_seed(s.master_seed);
    match run_iterative_receiver(&cfg, codec, None, &settings, exec) {
        Ok(trace) => {
            out.ber = trace.final_record().ber;
            out.feasible = out.ber <= s.target_ber;
        }
        Err(e @ (Error::Rank { .. } | Error::Solver { .. })) => out.note = Some(format!("{e}")),
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Grid search for the largest feasible `β`, assuming feasibility is
/// monotone in `β`: the load is doubled from the first grid point until a
/// probe fails, then the bracket is bisected. `K = round(βN)` users are
/// simulated at grid load `β`.
pub fn user_capacity_search<E: TrialExecutor>(
    s: &CapacitySearch,
    exec: &E,
) -> Result<CapacityResult> {
    if !(s.step > 0.0) || !(s.beta_max >= s.step) || !(s.target_ber > 0.0) {
        return Err(Error::Parameter(
            "invalid capacity search range or target".into(),
        ));
    }
    let codec = Codec::new(s.codec.clone())?;
    blocks_per_codeword(&s.template, codec.codeword_length())?;
    let last = (s.beta_max / s.step + 1e-9).floor() as usize;
    let mut probes = Vec::new();
    let run = |i: usize, probes: &mut Vec<CapacityProbe>| -> Result<bool> {
        let p = probe(s, &codec, i, exec)?;
        let ok = p.feasible;
        probes.push(p);
        Ok(ok)
    };
    if !run(1, &mut probes)? {
        return Ok(CapacityResult {
            mode: s.mode,
            beta_max: 0.0,
            probes,
            diagnostic: Some(format!("infeasible at the lower bracket β = {}", s.step)),
        });
    }
    let mut lo = 1;
    let mut hi = None;
    while hi.is_none() {
        let next = (lo * 2).min(last);
        if next == lo {
            break;
        }
        if run(next, &mut probes)? {
            lo = next;
        } else {
            hi = Some(next);
        }
    }
    let diagnostic = match hi {
        None => Some(format!(
            "feasible up to the upper bracket β = {}",
            s.step * last as f64
        )),
        Some(mut hi) => {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if run(mid, &mut probes)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            None
        }
    };
    Ok(CapacityResult {
        mode: s.mode,
        beta_max: s.step * lo as f64,
        probes,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::Sequential;

    fn search(mode: ReceiverMode, snr_db: f64) -> CapacitySearch {
        let cfg = SystemConfig::new(1, 16, 2, 10)
            .with_training(2)
            .with_snr_db(snr_db);
        let mut s = CapacitySearch::new(
            cfg,
            CodecSpec::convolutional().with_codeword_length(128),
            mode,
        );
        s.iterations = 2;
        s.min_bits = 500;
        s.beta_max = 1.0;
        s.step = 0.125;
        s
    }

    #[test]
    fn hopeless_noise_gives_zero_capacity() {
        let r =
            user_capacity_search(&search(ReceiverMode::PerfectCsi, -15.0), &Sequential).unwrap();
        assert_eq!(r.beta_max, 0.0);
        assert!(r.diagnostic.is_some());
        assert_eq!(r.probes.len(), 1);
    }

    #[test]
    fn training_rank_bounds_lmmse_only() {
        // 2 training periods of 16 chips need KL = 2K < 32 unknowns: K ≤ 15
        let r = user_capacity_search(&search(ReceiverMode::LmmseOnly, 30.0), &Sequential).unwrap();
        assert!(r.beta_max <= 15.0 / 16.0, "{r:?}");
        assert!(r.beta_max > 0.0);
        assert!(r.probes.iter().any(|p| p.note.is_some()));
    }

    #[test]
    fn invalid_search_is_rejected() {
        let mut s = search(ReceiverMode::Iterative, 5.0);
        s.step = 0.0;
        assert!(user_capacity_search(&s, &Sequential).is_err());
        let mut s = search(ReceiverMode::Iterative, 5.0);
        s.template.training = 4;
        assert!(matches!(
            user_capacity_search(&s, &Sequential),
            Err(Error::Config(_))
        ));
    }
}
