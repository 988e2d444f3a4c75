use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::linalg::{CMatrix, HermitianCholesky, C64};
use crate::model::SpreadingEnsemble;

const REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmmseWarning {
    /// The covariance was singular; `1e-12·I` was added.
    Regularized,
}

/// Unbiased per-user LMMSE outputs for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmseOutput {
    /// `z_k / μ_k`, so that `E{ẑ_k | b_k} = b_k` under the assumed channel.
    pub soft: Vec<C64>,
    /// `μ_k = ĥ_kᴴ (ĤĤᴴ + σ²I)⁻¹ ĥ_k`.
    pub mu: Vec<f64>,
    /// Output SINR `μ_k / (1 − μ_k)` under the assumed channel.
    pub sinr: Vec<f64>,
    pub warning: Option<LmmseWarning>,
}

/// Effective signatures `ĥ_k(t) = Σ_l â_kl s_kl(t)`, user-major, each of
/// length `N`.
fn signatures(gains: &[C64], codes: &SpreadingEnsemble, period: usize) -> Vec<C64> {
    let (k, l, n) = (codes.users, codes.paths, codes.chips);
    let mut h = vec![C64::zero(); k * n];
    for user in 0..k {
        let dst = &mut h[user * n..(user + 1) * n];
        for path in 0..l {
            let g = gains[user * l + path];
            for (d, &s) in dst.iter_mut().zip(codes.code(user, path, period)) {
                *d += g * s;
            }
        }
    }
    h
}

fn factor(mut m: CMatrix) -> (HermitianCholesky, Option<LmmseWarning>) {
    if let Some(c) = HermitianCholesky::new(&m) {
        return (c, None);
    }
    m.add_diagonal(REGULARIZATION);
    let c = HermitianCholesky::new(&m).expect("regularized covariance is positive definite");
    (c, Some(LmmseWarning::Regularized))
}

/// LMMSE detection of all users in one period, treating the estimated gains
/// as true: `w_k = (ĤĤᴴ + σ²I)⁻¹ ĥ_k`, `z_k = w_kᴴ r`.
///
/// Works in the `K×K` form `z = (ĤᴴĤ + σ²I)⁻¹ Ĥᴴ r` when `K ≤ N` and in the
/// `N×N` form otherwise; both give the same filter.
pub fn lmmse_detect(
    r: &[C64],
    gains: &[C64],
    codes: &SpreadingEnsemble,
    period: usize,
    noise_variance: f64,
) -> LmmseOutput {
    if codes.users <= codes.chips {
        lmmse_user_space(r, gains, codes, period, noise_variance)
    } else {
        lmmse_chip_space(r, gains, codes, period, noise_variance)
    }
}

fn finish(z: Vec<C64>, mu: Vec<f64>, warning: Option<LmmseWarning>) -> LmmseOutput {
    let soft = z
        .iter()
        .zip(&mu)
        .map(|(z, &m)| if m > 0.0 { z / m } else { C64::zero() })
        .collect();
    let sinr = mu
        .iter()
        .map(|&m| {
            if m < 1.0 {
                m / (1.0 - m)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    LmmseOutput {
        soft,
        mu,
        sinr,
        warning,
    }
}

pub(crate) fn lmmse_user_space(
    r: &[C64],
    gains: &[C64],
    codes: &SpreadingEnsemble,
    period: usize,
    noise_variance: f64,
) -> LmmseOutput {
    let (k, n) = (codes.users, codes.chips);
    let h = signatures(gains, codes, period);
    let mut g = CMatrix::zeros(k);
    for i in 0..k {
        let hi = &h[i * n..(i + 1) * n];
        for j in i..k {
            let hj = &h[j * n..(j + 1) * n];
            let v: C64 = hi.iter().zip(hj).map(|(a, b)| a.conj() * b).sum();
            g.set(i, j, v);
            g.set(j, i, v.conj());
        }
    }
    g.add_diagonal(noise_variance);
    let (chol, warning) = factor(g);
    let hr: Vec<C64> = (0..k)
        .map(|i| {
            h[i * n..(i + 1) * n]
                .iter()
                .zip(r)
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
        .collect();
    let z = chol.solve(&hr);
    // μ_k = 1 − σ²·[(G + σ²I)⁻¹]_kk
    let mu = (0..k)
        .map(|i| {
            let mut e = vec![C64::zero(); k];
            e[i] = C64::new(1.0, 0.0);
            let col = chol.solve(&e);
            1.0 - noise_variance * col[i].re
        })
        .collect();
    finish(z, mu, warning)
}

pub(crate) fn lmmse_chip_space(
    r: &[C64],
    gains: &[C64],
    codes: &SpreadingEnsemble,
    period: usize,
    noise_variance: f64,
) -> LmmseOutput {
    let (k, n) = (codes.users, codes.chips);
    let h = signatures(gains, codes, period);
    let mut c = CMatrix::zeros(n);
    for user in 0..k {
        let hk = &h[user * n..(user + 1) * n];
        for i in 0..n {
            for j in 0..n {
                c.add_to(i, j, hk[i] * hk[j].conj());
            }
        }
    }
    c.add_diagonal(noise_variance);
    let (chol, warning) = factor(c);
    let mut z = Vec::with_capacity(k);
    let mut mu = Vec::with_capacity(k);
    for user in 0..k {
        let hk = &h[user * n..(user + 1) * n];
        let w = chol.solve(hk);
        z.push(w.iter().zip(r).map(|(a, b)| a.conj() * b).sum());
        mu.push(w.iter().zip(hk).map(|(a, b)| a.conj() * b).sum::<C64>().re);
    }
    finish(z, mu, warning)
}
