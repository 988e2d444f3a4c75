//! Eigenvalue moments of the stacked code matrix.
//!
//! For the `NM × KL` stacked matrix `S` scaled to unit-norm columns, the
//! empirical moments are `(1/(NM))·tr((SSᵀ)ᵐ) = (1/(NM))·tr((SᵀS)ᵐ)`. Their
//! large-system limits follow the composition recursion
//!
//! ```text
//! E{λⁿ} = β′ · Σ over compositions n = m₁ + … + m_k of Π E{λ^(mᵢ−1)},  E{λ⁰} = 1.
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{CodeModel, SystemConfig};
use crate::error::{Error, Result};
use crate::estimator::{all_periods, StackedMatrix, SymbolSource};
use crate::executor::TrialExecutor;
use crate::linalg::{dot, SymMatrix};
use crate::model::{generate_codes, generate_symbols};
use crate::rng::trial_stream;
use crate::stats::Moments;

/// Largest order accepted by [`mp_moment`].
pub const MAX_ORDER: usize = 12;

/// Largest order accepted by [`empirical_eigen_moments`].
pub const MAX_EMPIRICAL_ORDER: usize = 6;

fn check_order(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Parameter("moment order must be at least 1".into()));
    }
    if m > MAX_ORDER {
        return Err(Error::CostGuard(format!(
            "moment order {m} exceeds {MAX_ORDER}: 2^{} compositions",
            m - 1
        )));
    }
    Ok(())
}

/// Sum over all compositions of `n` of `Π E{λ^(mᵢ−1)}`, enumerated
/// explicitly; `lower[j] = E{λʲ}` for `j < n`.
fn composition_sum(n: usize, lower: &[f64]) -> f64 {
    // first part j, remainder composed recursively
    fn rec(rest: usize, lower: &[f64]) -> f64 {
        if rest == 0 {
            return 1.0;
        }
        (1..=rest)
            .map(|j| lower[j - 1] * rec(rest - j, lower))
            .sum()
    }
    rec(n, lower)
}

/// `E{λᵐ}` by explicit enumeration of compositions, memoizing the lower
/// moments.
pub fn mp_moment(beta_prime: f64, m: usize) -> Result<f64> {
    check_order(m)?;
    let mut memo = vec![1.0];
    for n in 1..=m {
        let v = beta_prime * composition_sum(n, &memo);
        memo.push(v);
    }
    Ok(memo[m])
}

/// `E{λ¹}, …, E{λ^m_max}` bottom-up through `F(n) = Σⱼ E{λ^(j−1)}·F(n−j)`,
/// `F(0) = 1`, `E{λⁿ} = β′·F(n)`.
pub fn mp_moments(beta_prime: f64, m_max: usize) -> Result<Vec<f64>> {
    check_order(m_max)?;
    let mut e = vec![1.0];
    let mut f = vec![1.0];
    for n in 1..=m_max {
        let fn_: f64 = (1..=n).map(|j| e[j - 1] * f[n - j]).sum();
        f.push(fn_);
        e.push(beta_prime * fn_);
    }
    Ok(e[1..].to_vec())
}

/// `tr(Rᵃ⁺ᵇ) = ⟨Rᵃ, Rᵇ⟩` for symmetric `R`, so only powers up to
/// `⌈m_max/2⌉` are formed.
fn power_traces(r: &SymMatrix, m_max: usize) -> Vec<f64> {
    let half = m_max.div_ceil(2);
    let mut powers = vec![r.clone()];
    for _ in 1..half {
        let next = powers[powers.len() - 1].matmul(r);
        powers.push(next);
    }
    (1..=m_max)
        .map(|m| {
            if m == 1 {
                r.trace()
            } else {
                let a = m / 2;
                let b = m - a;
                dot(powers[a - 1].as_slice(), powers[b - 1].as_slice())
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub beta_prime: f64,
    pub trials: usize,
    /// `analytic[m−1] = E{λᵐ}`.
    pub analytic: Vec<f64>,
    /// (mean, standard error) per order.
    pub independent: Vec<(f64, f64)>,
    pub shifted: Vec<(f64, f64)>,
}

impl MomentReport {
    /// `√(se_indep² + se_shifted²)` per order.
    pub fn combined_std_error(&self, m: usize) -> f64 {
        let (a, b) = (self.independent[m - 1].1, self.shifted[m - 1].1);
        (a * a + b * b).sqrt()
    }
}

fn model_moments<E: TrialExecutor>(
    config: &SystemConfig,
    m_max: usize,
    trials: usize,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    let nm = (config.spreading_gain * config.coherence) as f64;
    let scale = 1.0 / config.coherence as f64;
    let id = match config.code_model {
        CodeModel::Independent => "rmt-independent",
        CodeModel::Shifted => "rmt-shifted",
    };
    let per_trial = exec.run(trials, |t| -> Result<Vec<f64>> {
        let mut st = trial_stream(config.seed, id, t as u64);
        let codes = generate_codes(config, &mut st);
        let symbols = generate_symbols(config, &mut st);
        let sm = StackedMatrix::build(
            &codes,
            &symbols.symbols,
            &all_periods(config.coherence),
            SymbolSource::Truth,
        )?;
        let mut r = sm.gram();
        r.scale(scale);
        Ok(power_traces(&r, m_max)
            .into_iter()
            .map(|v| v / nm)
            .collect())
    });
    let mut acc = vec![Moments::new(); m_max];
    for r in per_trial {
        for (a, v) in acc.iter_mut().zip(r?) {
            a.push(v);
        }
    }
    Ok(acc.iter().map(|a| (a.mean(), a.std_error())).collect())
}

/// Monte Carlo moments of both code models on the dimensions of `config`
/// (its code model is ignored), next to the analytic values at
/// `β′ = KL/(MN)`.
pub fn empirical_eigen_moments<E: TrialExecutor>(
    config: &SystemConfig,
    m_max: usize,
    trials: usize,
    exec: &E,
) -> Result<MomentReport> {
    config.validate()?;
    if m_max == 0 || m_max > MAX_EMPIRICAL_ORDER {
        return Err(Error::Parameter(format!(
            "empirical moment order must lie in 1..={MAX_EMPIRICAL_ORDER}, got {m_max}"
        )));
    }
    if trials < 2 {
        return Err(Error::Parameter("at least two trials are needed".into()));
    }
    let beta_prime = config.equivalent_load();
    let indep = config.clone().with_code_model(CodeModel::Independent);
    let shifted = config.clone().with_code_model(CodeModel::Shifted);
    Ok(MomentReport {
        beta_prime,
        trials,
        analytic: mp_moments(beta_prime, m_max)?,
        independent: model_moments(&indep, m_max, trials, exec)?,
        shifted: model_moments(&shifted, m_max, trials, exec)?,
    })
}

/// Checks `E{λᵐ} < Cᵐ·m^(m−2)` for `m = 1..=m_max`.
pub fn moment_bound_check(beta_prime: f64, c: f64, m_max: usize) -> Result<Vec<bool>> {
    if !(c > beta_prime.max(1.0)) {
        return Err(Error::Parameter(format!(
            "bound constant C = {c} must exceed max(1, β′) = {}",
            beta_prime.max(1.0)
        )));
    }
    let moments = mp_moments(beta_prime, m_max)?;
    Ok(moments
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let m = (i + 1) as f64;
            v < libm::pow(c, m) * libm::pow(m, m - 2.0)
        })
        .collect())
}
