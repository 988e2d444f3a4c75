use alloc::vec;
use alloc::vec::Vec;

use crate::codec::interleaver::Interleaver;
use crate::codec::trellis::Trellis;
use crate::error::Result;

#[inline]
fn signed(bit: u8, llr: f64) -> f64 {
    if bit == 0 {
        llr
    } else {
        -llr
    }
}

/// Max-log BCJR for a rate-1/2 recursive systematic trellis starting in state
/// 0 with an unknown final state. Returns the a-posteriori LLR of every input
/// bit (positive favours 0).
pub fn max_log_bcjr(
    trellis: &Trellis,
    systematic: &[f64],
    apriori: &[f64],
    parity: &[f64],
) -> Vec<f64> {
    let steps = systematic.len();
    assert_eq!(apriori.len(), steps);
    assert_eq!(parity.len(), steps);
    let states = trellis.states;
    let neg = f64::NEG_INFINITY;
    let gamma = |t: usize, s: usize, u: usize| -> f64 {
        let out = trellis.output(s, u);
        0.5 * (signed(out[0], systematic[t] + apriori[t]) + signed(out[1], parity[t]))
    };

    let mut alpha = vec![neg; (steps + 1) * states];
    alpha[0] = 0.0;
    for t in 0..steps {
        let (cur, nxt) = alpha.split_at_mut((t + 1) * states);
        let cur = &cur[t * states..];
        let nxt = &mut nxt[..states];
        for s in 0..states {
            if cur[s] == neg {
                continue;
            }
            for u in 0..2 {
                let ns = trellis.next[s * 2 + u];
                let m = cur[s] + gamma(t, s, u);
                if m > nxt[ns] {
                    nxt[ns] = m;
                }
            }
        }
        let top = nxt.iter().copied().fold(neg, f64::max);
        nxt.iter_mut().for_each(|a| *a -= top);
    }

    let mut beta = vec![0.0; states];
    let mut prev = vec![neg; states];
    let mut post = vec![0.0; steps];
    for t in (0..steps).rev() {
        let a = &alpha[t * states..(t + 1) * states];
        let (mut best0, mut best1) = (neg, neg);
        prev.iter_mut().for_each(|b| *b = neg);
        for s in 0..states {
            for u in 0..2 {
                let ns = trellis.next[s * 2 + u];
                let g = gamma(t, s, u);
                let through = beta[ns] + g;
                if through > prev[s] {
                    prev[s] = through;
                }
                let m = a[s] + through;
                if u == 0 {
                    best0 = best0.max(m);
                } else {
                    best1 = best1.max(m);
                }
            }
        }
        post[t] = best0 - best1;
        let top = prev.iter().copied().fold(neg, f64::max);
        for (b, p) in beta.iter_mut().zip(&prev) {
            *b = p - top;
        }
    }
    post
}

/// Iterative decoding of the parallel concatenation.
///
/// `systematic[t]` and the two parity streams are channel LLRs in natural
/// (encoder 1) order; punctured parity positions carry 0. Returns the final
/// a-posteriori LLRs of the information bits.
pub fn turbo_decode(
    trellis: &Trellis,
    interleaver: &Interleaver,
    systematic: &[f64],
    parity1: &[f64],
    parity2: &[f64],
    iterations: usize,
) -> Result<Vec<f64>> {
    let n = systematic.len();
    let sys2 = interleaver.interleave(systematic)?;
    let mut ext21 = vec![0.0; n];
    let mut post = systematic.to_vec();
    for _ in 0..iterations.max(1) {
        let p1 = max_log_bcjr(trellis, systematic, &ext21, parity1);
        let ext12: Vec<f64> = (0..n).map(|t| p1[t] - systematic[t] - ext21[t]).collect();
        let apr2 = interleaver.interleave(&ext12)?;
        let p2 = max_log_bcjr(trellis, &sys2, &apr2, parity2);
        let ext: Vec<f64> = (0..n).map(|t| p2[t] - sys2[t] - apr2[t]).collect();
        ext21 = interleaver.deinterleave(&ext)?;
        post = interleaver.deinterleave(&p2)?;
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;
    use rand::Rng;

    fn llr(bits: &[u8], scale: f64) -> Vec<f64> {
        bits.iter().map(|&b| signed(b, scale)).collect()
    }

    #[test]
    fn bcjr_noiseless_hard_decisions_match() {
        let t = Trellis::recursive_systematic(0o37, 0o21).unwrap();
        let mut rng = trial_stream(3, "bcjr", 0);
        let info: Vec<u8> = (0..64).map(|_| rng.random_range(0..2u8)).collect();
        let (coded, _) = t.encode(&info);
        let sys: Vec<u8> = coded.iter().step_by(2).copied().collect();
        let par: Vec<u8> = coded.iter().skip(1).step_by(2).copied().collect();
        let post = max_log_bcjr(&t, &llr(&sys, 2.0), &[0.0; 64], &llr(&par, 2.0));
        for (p, b) in post.iter().zip(&info) {
            assert_eq!(u8::from(*p < 0.0), *b);
        }
    }

    #[test]
    fn bcjr_uses_parity_to_override_a_weak_systematic_error() {
        let t = Trellis::recursive_systematic(0o37, 0o21).unwrap();
        let info = [0u8, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 0, 0, 0];
        let (coded, _) = t.encode(&info);
        let mut sys: Vec<f64> = coded.iter().step_by(2).map(|&b| signed(b, 1.0)).collect();
        let par: Vec<f64> = coded
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&b| signed(b, 1.0))
            .collect();
        sys[5] = -0.2;
        let post = max_log_bcjr(&t, &sys, &[0.0; 16], &par);
        assert!(post[5] > 0.0);
    }
}
