use alloc::format;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Training-only estimation error per unknown, `σ²/(M − Lβ)`.
pub fn delta_a_training(
    noise_variance: f64,
    coherence: usize,
    paths: usize,
    beta: f64,
) -> Result<f64> {
    let denom = coherence as f64 - paths as f64 * beta;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "training estimate needs M > Lβ (M = {coherence}, Lβ = {})",
            paths as f64 * beta
        )));
    }
    Ok(noise_variance / denom)
}

/// Feedback-based estimation error per unknown,
/// `4(1−α)Pe(1+βL)/(LM) + σ²/M`.
pub fn delta_a_feedback(
    pe: f64,
    beta: f64,
    paths: usize,
    coherence: usize,
    noise_variance: f64,
    alpha: f64,
) -> f64 {
    let (l, m) = (paths as f64, coherence as f64);
    4.0 * (1.0 - alpha) * pe * (1.0 + beta * l) / (l * m) + noise_variance / m
}

/// Entry `(i, j)` of `M·Σ_f` for gains `a` (user-major, `L` paths per user).
pub fn sigma_f_entry(
    i: usize,
    j: usize,
    a: &[C64],
    pe: f64,
    chips: usize,
    paths: usize,
) -> Result<C64> {
    if i >= a.len() || j >= a.len() || paths == 0 || a.len() % paths != 0 {
        return Err(Error::Parameter(format!(
            "index ({i}, {j}) outside {} gains with {paths} paths",
            a.len()
        )));
    }
    let inv_n = 1.0 / chips as f64;
    if i == j {
        let others: f64 = a
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, x)| x.norm_sqr())
            .sum();
        return Ok(Complex64::new(
            4.0 * pe * (a[i].norm_sqr() + inv_n * others),
            0.0,
        ));
    }
    let cross = a[i] * a[j].conj() * (1.0 + inv_n);
    if i / paths == j / paths {
        Ok(cross * (4.0 * pe))
    } else {
        Ok(cross * (4.0 * pe * pe))
    }
}

/// Largest feedback error rate for which feedback-aided estimation beats
/// training alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeMax {
    /// `σ²L / (4α(1+βL))`.
    pub raw: f64,
    /// `raw` clamped to 0.5.
    pub value: f64,
    pub clamped: bool,
}

pub fn pe_max(noise_variance: f64, paths: usize, alpha: f64, beta: f64) -> Result<PeMax> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(
            "Pe,max needs a nonzero training fraction".into(),
        ));
    }
    let l = paths as f64;
    let raw = noise_variance * l / (4.0 * alpha * (1.0 + beta * l));
    Ok(PeMax {
        raw,
        value: raw.min(0.5),
        clamped: raw > 0.5,
    })
}

/// `σ_I² = βLΔa + 4β(1−Pe)Pe + σ²`.
pub fn residual_interference_variance(
    delta_a: f64,
    beta: f64,
    paths: usize,
    pe: f64,
    noise_variance: f64,
) -> f64 {
    beta * paths as f64 * delta_a + 4.0 * beta * (1.0 - pe) * pe + noise_variance
}

/// Scalar model of a PIC + MRC output, `z ≈ (1−2Pe)b + n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicOutputModel {
    pub gain: f64,
    pub variance: f64,
    pub sinr: f64,
}

pub fn pic_output_model(pe: f64, delta_a: f64, paths: usize, sigma_i_sq: f64) -> PicOutputModel {
    let gain = 1.0 - 2.0 * pe;
    let variance = (gain * gain + paths as f64 * delta_a) * sigma_i_sq;
    PicOutputModel {
        gain,
        variance,
        sinr: if variance > 0.0 {
            gain * gain / variance
        } else {
            f64::INFINITY
        },
    }
}

/// Coefficients of the map `x = D0 + D1·Pe` from feedback error rate to the
/// next iteration's interference-plus-noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapCoefficients {
    pub d0: f64,
    pub d1: f64,
    pub noise_variance: f64,
    pub beta: f64,
    pub paths: usize,
    pub coherence: usize,
}

impl MapCoefficients {
    /// Coefficients given directly, for synthetic maps.
    pub fn custom(d0: f64, d1: f64) -> Self {
        Self {
            d0,
            d1,
            noise_variance: f64::NAN,
            beta: f64::NAN,
            paths: 0,
            coherence: 0,
        }
    }

    /// `D0 + D1·pe`.
    pub fn abscissa(&self, pe: f64) -> f64 {
        self.d0 + self.d1 * pe
    }
}

fn d0(noise_variance: f64, beta: f64, l: f64, m: f64) -> f64 {
    noise_variance * (1.0 + beta * l / m + l * noise_variance / m)
}

pub fn map_coefficients(
    noise_variance: f64,
    beta: f64,
    paths: usize,
    coherence: usize,
) -> Result<MapCoefficients> {
    if coherence == 0 {
        return Err(Error::Parameter("coherence time must be at least 1".into()));
    }
    let (l, m, s) = (paths as f64, coherence as f64, noise_variance);
    let d1 = 4.0
        * (beta
            + (beta + s * beta * l * l + beta * beta * l + s * l + l * beta * s + l * s * s) / m);
    Ok(MapCoefficients {
        d0: d0(s, beta, l, m),
        d1,
        noise_variance,
        beta,
        paths,
        coherence,
    })
}

/// Asymptotic multiuser efficiency `1/(1 + Lβ/M)`.
pub fn ame(paths: usize, beta: f64, coherence: usize) -> f64 {
    1.0 / (1.0 + paths as f64 * beta / coherence as f64)
}

/// The same quantity as `1 / (dD0/dσ² at σ² = 0)`, by a central difference
/// of step `h`.
pub fn ame_finite_difference(paths: usize, beta: f64, coherence: usize, h: f64) -> f64 {
    let (l, m) = (paths as f64, coherence as f64);
    let slope = (d0(h, beta, l, m) - d0(-h, beta, l, m)) / (2.0 * h);
    1.0 / slope
}
