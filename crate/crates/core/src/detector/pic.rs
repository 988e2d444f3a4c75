use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::detector::MfOutputs;
use crate::linalg::{dot_real_complex, C64};
use crate::model::{ChannelRealization, SpreadingEnsemble};

/// PIC + MRC outputs for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PicOutput {
    pub users: usize,
    pub paths: usize,
    /// Cleaned matched-filter outputs `ỹ_kl`, user-major.
    pub cleaned: Vec<C64>,
    /// MRC outputs `z_k = Σ_l â*_kl ỹ_kl`.
    pub combined: Vec<C64>,
    /// `sign(Re z_k)`.
    pub decisions: Vec<f64>,
}

/// Removes every other user's reconstructed signal `Σ_j â_mj b̂_m s_mj` from
/// the matched-filter outputs and combines the paths of each user with the
/// conjugate estimated gains. Same-user cross-path terms are left in place.
pub fn pic_mrc(
    mf: &MfOutputs,
    estimate: &[C64],
    feedback: &[f64],
    codes: &SpreadingEnsemble,
    period: usize,
) -> PicOutput {
    let (k, l, n) = (codes.users, codes.paths, codes.chips);
    assert_eq!(estimate.len(), k * l);
    assert_eq!(feedback.len(), k);
    // per-user reconstructed signals and their sum
    let mut own = vec![C64::zero(); k * n];
    let mut total = vec![C64::zero(); n];
    for user in 0..k {
        let dst = &mut own[user * n..(user + 1) * n];
        for path in 0..l {
            let g = estimate[user * l + path] * feedback[user];
            for (d, &s) in dst.iter_mut().zip(codes.code(user, path, period)) {
                *d += g * s;
            }
        }
        for (t, d) in total.iter_mut().zip(dst.iter()) {
            *t += d;
        }
    }
    let mut others = vec![C64::zero(); n];
    let mut cleaned = Vec::with_capacity(k * l);
    let mut combined = Vec::with_capacity(k);
    let mut decisions = Vec::with_capacity(k);
    for user in 0..k {
        for ((o, t), s) in others
            .iter_mut()
            .zip(&total)
            .zip(&own[user * n..(user + 1) * n])
        {
            *o = t - s;
        }
        let mut z = C64::zero();
        for path in 0..l {
            let i = user * l + path;
            let y = mf.values[i] - dot_real_complex(codes.code(user, path, period), &others);
            z += estimate[i].conj() * y;
            cleaned.push(y);
        }
        combined.push(z);
        decisions.push(if z.re >= 0.0 { 1.0 } else { -1.0 });
    }
    PicOutput {
        users: k,
        paths: l,
        cleaned,
        combined,
        decisions,
    }
}

/// Residual interference `I_kl = ỹ_kl − a_kl b_k` (truth-assisted), split as
/// `(total, same-user cross-path part)`.
pub fn residual_interference(
    pic: &PicOutput,
    channel: &ChannelRealization,
    symbols: &[f64],
    codes: &SpreadingEnsemble,
    period: usize,
) -> (Vec<C64>, Vec<C64>) {
    let (k, l) = (pic.users, pic.paths);
    let mut total = Vec::with_capacity(k * l);
    let mut cross = Vec::with_capacity(k * l);
    for user in 0..k {
        let b = symbols[user];
        for path in 0..l {
            let i = user * l + path;
            total.push(pic.cleaned[i] - channel.gains[i] * b);
            let mut c = C64::zero();
            for other in 0..l {
                if other != path {
                    let rho = codes.correlation(period, (user, path), (user, other));
                    c += channel.gains[user * l + other] * (b * rho);
                }
            }
            cross.push(c);
        }
    }
    (total, cross)
}
