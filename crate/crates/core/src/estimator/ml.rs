use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::estimator::solver::{
    solve_normal_equations, SolveDiagnostics, SolverMethod, SolverSettings,
};
use crate::estimator::stacked::StackedMatrix;
use crate::linalg::{dot_real_complex, norm, Cholesky, SymMatrix, C64};
use crate::model::{ChannelRealization, ReceivedFrame};

/// Least-squares channel estimate `â = R⁻¹y`, `R = SᵀS`, `y = Sᵀr`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gains: Vec<C64>,
    pub gram: SymMatrix,
    pub statistic: Vec<C64>,
    pub solver: SolverMethod,
    /// `‖Sᵀ(r − Sâ)‖ / ‖y‖`.
    pub residual: f64,
    pub diagnostics: SolveDiagnostics,
}

/// ML (least-squares) estimate of the gains from the stacked observation.
pub fn ml_estimate(
    stacked: &StackedMatrix,
    received: &ReceivedFrame,
    settings: &SolverSettings,
) -> Result<ChannelEstimate> {
    let r = stacked.stack_received(received);
    let gram = stacked.gram();
    let statistic = stacked.transpose_mul(&r);
    estimate_from_normal_equations(gram, statistic, settings)
}

pub(crate) fn estimate_from_normal_equations(
    gram: SymMatrix,
    statistic: Vec<C64>,
    settings: &SolverSettings,
) -> Result<ChannelEstimate> {
    let (gains, diagnostics) = solve_normal_equations(&gram, &statistic, settings)?;
    let rg = gram.mul_vec(&gains);
    let diff: Vec<C64> = statistic.iter().zip(&rg).map(|(y, v)| y - v).collect();
    let ny = norm(&statistic);
    let residual = if ny > 0.0 {
        norm(&diff) / ny
    } else {
        norm(&diff)
    };
    Ok(ChannelEstimate {
        gains,
        gram,
        statistic,
        solver: settings.method,
        residual,
        diagnostics,
    })
}

/// Leave-one-out estimates: entry `j` excludes the `j`-th period of the
/// stacked matrix from the normal equations, so that the gains used to detect
/// a symbol do not depend on that symbol's own observation.
pub fn ml_estimate_leave_one_out(
    stacked: &StackedMatrix,
    received: &ReceivedFrame,
    settings: &SolverSettings,
) -> Result<Vec<Vec<C64>>> {
    let periods = stacked.periods().len();
    if periods < 2 {
        return Err(Error::Parameter(
            "leave-one-out estimation needs at least two periods".into(),
        ));
    }
    let r = stacked.stack_received(received);
    let gram = stacked.gram();
    let statistic = stacked.transpose_mul(&r);
    let rows_per_period = stacked.rows() / periods;
    let cols = stacked.cols();
    if settings.method == SolverMethod::Direct && rows_per_period < cols {
        return leave_one_out_woodbury(stacked, &r, gram, statistic, settings);
    }
    let mut out = Vec::with_capacity(periods);
    for j in 0..periods {
        // contribution of period j alone
        let lo = j * rows_per_period;
        let hi = lo + rows_per_period;
        let mut g = gram.clone();
        let mut y = statistic.clone();
        let columns: Vec<Vec<f64>> = (0..cols)
            .map(|c| (lo..hi).map(|row| stacked.value(row, c)).collect())
            .collect();
        for a in 0..cols {
            let mut ya = C64::zero();
            for (v, rv) in columns[a].iter().zip(&r[lo..hi]) {
                ya += rv * *v;
            }
            y[a] -= ya;
            for b in a..cols {
                let v: f64 = columns[a].iter().zip(&columns[b]).map(|(x, z)| x * z).sum();
                g.add_to(a, b, -v);
                if a != b {
                    g.add_to(b, a, -v);
                }
            }
        }
        let (gains, _) = solve_normal_equations(&g, &y, settings)?;
        out.push(gains);
    }
    Ok(out)
}

/// Leave-one-out through the Woodbury identity: with `U` the `KL×N` block of
/// period `j` (transposed), `(R − UUᵀ)⁻¹ = R⁻¹ + W(I − UᵀW)⁻¹Wᵀ`, `W = R⁻¹U`.
fn leave_one_out_woodbury(
    stacked: &StackedMatrix,
    r: &[C64],
    gram: SymMatrix,
    statistic: Vec<C64>,
    settings: &SolverSettings,
) -> Result<Vec<Vec<C64>>> {
    let periods = stacked.periods().len();
    let n = stacked.rows() / periods;
    let cols = stacked.cols();
    // validates the rank of the full system
    let (x, _) = solve_normal_equations(&gram, &statistic, settings)?;
    let inv = Cholesky::new(&gram)
        .ok_or(Error::Rank {
            condition: f64::INFINITY,
        })?
        .inverse();
    let mut out = Vec::with_capacity(periods);
    let mut ut = vec![0.0; cols * n];
    let mut wm = vec![0.0; cols * n];
    for j in 0..periods {
        let lo = j * n;
        // Uᵀ row i holds column i of the stacked matrix over period j
        for i in 0..cols {
            for c in 0..n {
                ut[i * n + c] = stacked.value(lo + c, i);
            }
        }
        // W = R⁻¹U
        wm.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..cols {
            let dst = &mut wm[i * n..(i + 1) * n];
            for (k, &g) in inv.row(i).iter().enumerate() {
                for (d, &u) in dst.iter_mut().zip(&ut[k * n..(k + 1) * n]) {
                    *d += g * u;
                }
            }
        }
        // C = I − UᵀW
        let mut cm = vec![0.0; n * n];
        for i in 0..cols {
            let wrow = &wm[i * n..(i + 1) * n];
            for a in 0..n {
                let ua = ut[i * n + a];
                for (d, &w) in cm[a * n..(a + 1) * n].iter_mut().zip(wrow) {
                    *d -= ua * w;
                }
            }
        }
        for a in 0..n {
            cm[a * n + a] += 1.0;
        }
        let cchol = Cholesky::new(&SymMatrix::from_row_major(n, cm)).ok_or(Error::Rank {
            condition: f64::INFINITY,
        })?;
        // R⁻¹v with v = y − U r_j is x − W r_j
        let rj = &r[lo..lo + n];
        let mut base: Vec<C64> = (0..cols)
            .map(|i| x[i] - dot_real_complex(&wm[i * n..(i + 1) * n], rj))
            .collect();
        // Wᵀv = Uᵀ R⁻¹v
        let mut wt_v = vec![C64::zero(); n];
        for (i, bi) in base.iter().enumerate() {
            for (d, &u) in wt_v.iter_mut().zip(&ut[i * n..(i + 1) * n]) {
                *d += bi * u;
            }
        }
        let coef = cchol.solve(&wt_v);
        for (i, bi) in base.iter_mut().enumerate() {
            *bi += dot_real_complex(&wm[i * n..(i + 1) * n], &coef);
        }
        out.push(base);
    }
    Ok(out)
}

/// How `R̂⁻¹` is treated when splitting the estimation error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ApproximationMode {
    /// Use the actual inverse of the feedback Gram matrix.
    #[default]
    Exact,
    /// Replace `R̂⁻¹` by `I/M` (large-`M`, small-`Pe` approximation).
    ScaledIdentity,
}

/// `δa = a − â = δa_f + δa_n` with `δa_f = −R̂⁻¹Ŝᵀ δS a` and
/// `δa_n = −R̂⁻¹Ŝᵀ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition {
    /// `a − â` of the actual estimator.
    pub delta_a: Vec<C64>,
    pub feedback_part: Vec<C64>,
    pub noise_part: Vec<C64>,
    pub mode: ApproximationMode,
    pub estimate: ChannelEstimate,
}

/// Splits the estimation error of the feedback-based estimate into its
/// feedback- and noise-induced parts. Simulation-side: needs the true gains,
/// the truth-symbol matrix and the noise record.
pub fn decompose_error(
    truth: &ChannelRealization,
    stacked_truth: &StackedMatrix,
    stacked_feedback: &StackedMatrix,
    received: &ReceivedFrame,
    mode: ApproximationMode,
    settings: &SolverSettings,
) -> Result<ErrorDecomposition> {
    if stacked_truth.rows() != stacked_feedback.rows()
        || stacked_truth.cols() != stacked_feedback.cols()
        || stacked_truth.periods() != stacked_feedback.periods()
    {
        return Err(Error::Config(
            "truth and feedback matrices differ in shape".into(),
        ));
    }
    let a = &truth.gains;
    let estimate = ml_estimate(stacked_feedback, received, settings)?;
    let delta_a: Vec<C64> = a.iter().zip(&estimate.gains).map(|(x, y)| x - y).collect();

    // δS a = S a − Ŝ a
    let sa = stacked_truth.mul(a);
    let sha = stacked_feedback.mul(a);
    let ds_a: Vec<C64> = sa.iter().zip(&sha).map(|(x, y)| x - y).collect();
    let noise = stacked_feedback.stack_noise(received);
    let f_rhs = stacked_feedback.transpose_mul(&ds_a);
    let n_rhs = stacked_feedback.transpose_mul(&noise);

    let (feedback_part, noise_part) = match mode {
        ApproximationMode::Exact => {
            let solve = |rhs: &[C64]| -> Result<Vec<C64>> {
                if rhs.iter().all(|v| v.is_zero()) {
                    return Ok(alloc::vec![C64::zero(); rhs.len()]);
                }
                let (x, _) = solve_normal_equations(&estimate.gram, rhs, settings)?;
                Ok(x.into_iter().map(|v| -v).collect())
            };
            (solve(&f_rhs)?, solve(&n_rhs)?)
        }
        ApproximationMode::ScaledIdentity => {
            let m = stacked_feedback.periods().len() as f64;
            (
                f_rhs.iter().map(|v| -v / m).collect(),
                n_rhs.iter().map(|v| -v / m).collect(),
            )
        }
    };
    Ok(ErrorDecomposition {
        delta_a,
        feedback_part,
        noise_part,
        mode,
        estimate,
    })
}
