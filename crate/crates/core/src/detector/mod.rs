//! Matched filtering, LMMSE initial detection and PIC with hard feedback
//! followed by MRC.

mod lmmse;
mod pic;
pub mod stats;

use alloc::vec::Vec;

use crate::linalg::{dot_real_complex, C64};
use crate::model::SpreadingEnsemble;

pub use lmmse::{lmmse_detect, LmmseOutput, LmmseWarning};
pub use pic::{pic_mrc, residual_interference, PicOutput};
pub use stats::{measure_pic_stats, DetectorExperiment, DetectorStats, EstimationWindow};

/// Matched-filter bank outputs `y_kl = s_kl(t)ᵀ r(t)` for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct MfOutputs {
    pub users: usize,
    pub paths: usize,
    pub period: usize,
    /// User-major, length `K·L`.
    pub values: Vec<C64>,
}

impl MfOutputs {
    #[inline]
    pub fn get(&self, user: usize, path: usize) -> C64 {
        self.values[user * self.paths + path]
    }
}

pub fn matched_filter(r: &[C64], codes: &SpreadingEnsemble, period: usize) -> MfOutputs {
    assert_eq!(r.len(), codes.chips, "received period has wrong length");
    let mut values = Vec::with_capacity(codes.users * codes.paths);
    for k in 0..codes.users {
        for l in 0..codes.paths {
            values.push(dot_real_complex(codes.code(k, l, period), r));
        }
    }
    MfOutputs {
        users: codes.users,
        paths: codes.paths,
        period,
        values,
    }
}

/// Soft value for a ±1 symbol from a scalar Gaussian channel output with
/// complex noise variance `variance`: `4·Re(z)/variance` for unit gain.
#[inline]
pub fn bpsk_llr(z: C64, gain: f64, variance: f64) -> f64 {
    4.0 * gain * z.re / variance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::model::generate_frame;
    use crate::rng::trial_stream;
    use crate::stats::Moments;

    #[test]
    fn orthogonal_paths_single_user() {
        // Walsh rows of length 4 as the three path codes
        let n = 4;
        let rows = [
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
        ];
        let cfg = SystemConfig::new(1, n, 3, 1);
        let mut f = generate_frame(&cfg, &mut trial_stream(1, "mf", 0)).unwrap();
        let values: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|v| v / 2.0))
            .collect();
        f.codes = SpreadingEnsemble::from_values(1, 3, 1, n, cfg.code_model, values).unwrap();
        let r = crate::model::superpose(&f.channel, &f.codes, f.symbols.period(0), 0);
        let y = matched_filter(&r, &f.codes, 0);
        for l in 0..3 {
            let want = f.channel.gain(0, l) * f.symbols.symbol(0, 0);
            assert!((y.get(0, l) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn pure_noise_projection_has_noise_variance() {
        let cfg = SystemConfig::new(2, 32, 2, 200).with_noise_variance(0.7);
        let f = generate_frame(&cfg, &mut trial_stream(2, "mf", 0)).unwrap();
        let mut m = Moments::new();
        for t in 0..200 {
            let y = matched_filter(f.received.noise_period(t), &f.codes, t);
            for v in y.values {
                m.push(v.norm_sqr());
            }
        }
        assert!((m.mean() - 0.7).abs() < 5.0 * m.std_error());
    }

    #[test]
    fn matches_brute_force_dot_product() {
        let cfg = SystemConfig::new(3, 16, 2, 4).with_noise_variance(0.1);
        let f = generate_frame(&cfg, &mut trial_stream(3, "mf", 0)).unwrap();
        for t in 0..4 {
            let y = matched_filter(f.received.period(t), &f.codes, t);
            for k in 0..3 {
                for l in 0..2 {
                    let mut want = C64::new(0.0, 0.0);
                    for c in 0..16 {
                        want += f.received.period(t)[c] * f.codes.code(k, l, t)[c];
                    }
                    assert!((y.get(k, l) - want).norm() < 1e-12);
                }
            }
        }
    }
}
