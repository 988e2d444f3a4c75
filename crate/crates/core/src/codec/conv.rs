use alloc::vec;
use alloc::vec::Vec;

use crate::codec::trellis::Trellis;

/// Soft-input Viterbi decoder over a zero-terminated block.
///
/// `llr[j]` is the log-likelihood ratio of coded bit `j` (positive favours 0).
/// The path metric of a branch with outputs `c` is `Σ (1 − 2c_j)·llr_j`, so the
/// survivor maximizes correlation. Returns the input bits of every trellis
/// step, tail included; when `terminated` the survivor ends in state 0.
pub fn viterbi(trellis: &Trellis, llr: &[f64], terminated: bool) -> Vec<u8> {
    let n = trellis.outputs;
    assert_eq!(llr.len() % n, 0);
    let steps = llr.len() / n;
    let states = trellis.states;
    let neg = f64::NEG_INFINITY;
    let mut metric = vec![neg; states];
    metric[0] = 0.0;
    let mut next_metric = vec![neg; states];
    // survivor input and predecessor per (step, state)
    let mut from = vec![0u16; steps * states];
    let mut bit = vec![0u8; steps * states];
    let mut branch = vec![0.0; states * 2];
    for t in 0..steps {
        let y = &llr[t * n..(t + 1) * n];
        for (idx, b) in branch.iter_mut().enumerate() {
            let out = &trellis.out[idx * n..(idx + 1) * n];
            *b = out
                .iter()
                .zip(y)
                .map(|(&c, &l)| if c == 0 { l } else { -l })
                .sum();
        }
        next_metric.iter_mut().for_each(|m| *m = neg);
        for s in 0..states {
            let m = metric[s];
            if m == neg {
                continue;
            }
            for u in 0..2 {
                let ns = trellis.next[s * 2 + u];
                let cand = m + branch[s * 2 + u];
                if cand > next_metric[ns] {
                    next_metric[ns] = cand;
                    from[t * states + ns] = s as u16;
                    bit[t * states + ns] = u as u8;
                }
            }
        }
        core::mem::swap(&mut metric, &mut next_metric);
    }
    let mut state = if terminated {
        0
    } else {
        (0..states)
            .max_by(|&a, &b| metric[a].total_cmp(&metric[b]))
            .unwrap_or(0)
    };
    let mut out = vec![0u8; steps];
    for t in (0..steps).rev() {
        out[t] = bit[t * states + state];
        state = from[t * states + state] as usize;
    }
    out
}
