//! The scalar iterative map `Pe ↦ g(D0 + D1·Pe)` and its certificates.
//!
//! Two domains are involved. The map's state is the feedback error rate
//! `Pe`; the decoder characteristic `g` and the convergence conditions live on
//! the interference-plus-noise variance `x = D0 + D1·Pe ∈ [0, σ_I^max]`. The
//! counterexample construction works with `h(x) = D0 + D1·g(x)` on `x`, whose
//! fixed points correspond one-to-one to those of the `Pe` map.

use alloc::vec::Vec;

use num_traits::Float;

use crate::analysis::MapCoefficients;
use crate::codec::GCurve;
use crate::error::{Error, Result};

/// A monotone decoder characteristic on `[0, domain_max]`.
pub trait DecoderCharacteristic {
    fn eval(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Supremum of `g′` on the domain.
    fn max_slope(&self) -> f64;
    fn domain_max(&self) -> f64;
}

impl DecoderCharacteristic for GCurve {
    fn eval(&self, x: f64) -> f64 {
        GCurve::eval(self, x)
    }

    fn derivative(&self, x: f64) -> f64 {
        GCurve::derivative(self, x)
    }

    fn max_slope(&self) -> f64 {
        GCurve::max_slope(self)
    }

    fn domain_max(&self) -> f64 {
        self.sigma_i_max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    /// `Pe⁽⁰⁾, Pe⁽¹⁾, …`.
    pub trace: Vec<f64>,
    pub fixed_point: f64,
    pub converged: bool,
    /// An abscissa left the domain of `g`.
    pub diverged: bool,
    pub iterations: usize,
    /// `γ = D1·max g′`.
    pub contraction_modulus: f64,
    pub banach_certified: bool,
    /// `γᵏ/(1−γ)·|Pe⁽⁰⁾ − x_f|` for each iterate when certified.
    pub error_bounds: Vec<f64>,
}

/// Iterates `Pe ↦ g(D0 + D1·Pe)` from `pe0` until successive iterates differ
/// by less than `tol` or `max_iter` steps were taken. An abscissa beyond the
/// domain of `g` ends the run with a divergence verdict.
pub fn iterate_map<G: DecoderCharacteristic + ?Sized>(
    g: &G,
    coeffs: &MapCoefficients,
    pe0: f64,
    max_iter: usize,
    tol: f64,
) -> FixedPointReport {
    let mut trace = Vec::with_capacity(max_iter + 1);
    trace.push(pe0);
    let mut pe = pe0;
    let mut converged = false;
    let mut diverged = false;
    for _ in 0..max_iter {
        let x = coeffs.abscissa(pe);
        if x > g.domain_max() {
            diverged = true;
            break;
        }
        let next = g.eval(x);
        trace.push(next);
        let step = (next - pe).abs();
        pe = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    let gamma = coeffs.d1 * g.max_slope();
    let banach_certified = gamma < 1.0 && !diverged;
    let error_bounds = if banach_certified {
        let dist = (pe0 - pe).abs();
        (0..trace.len())
            .map(|k| gamma.powi(k as i32) / (1.0 - gamma) * dist)
            .collect()
    } else {
        Vec::new()
    };
    FixedPointReport {
        iterations: trace.len() - 1,
        trace,
        fixed_point: pe,
        converged,
        diverged,
        contraction_modulus: gamma,
        banach_certified,
        error_bounds,
    }
}

/// Initial-stage conditions: A, `σ_I²(0) < σ_I^max`; B,
/// `g(σ_I²(0)) < (σ_I²(0) − D0)/D1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceVerdict {
    pub condition_a: bool,
    /// `σ_I^max − σ_I²(0)`.
    pub margin_a: f64,
    pub condition_b: bool,
    /// `(σ_I²(0) − D0)/D1 − g(σ_I²(0))`.
    pub margin_b: f64,
}

impl ConvergenceVerdict {
    pub fn holds(&self) -> bool {
        self.condition_a && self.condition_b
    }
}

pub fn check_convergence_conditions<G: DecoderCharacteristic + ?Sized>(
    g: &G,
    sigma_i0_sq: f64,
    coeffs: &MapCoefficients,
) -> ConvergenceVerdict {
    let margin_a = g.domain_max() - sigma_i0_sq;
    let margin_b = (sigma_i0_sq - coeffs.d0) / coeffs.d1 - g.eval(sigma_i0_sq);
    ConvergenceVerdict {
        condition_a: margin_a > 0.0,
        margin_a,
        condition_b: margin_b > 0.0,
        margin_b,
    }
}

/// Banach certificate `D1 ≤ γ / max g′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessCertificate {
    pub certified: bool,
    pub max_slope: f64,
    /// Largest `D1` the certificate admits, `γ / max g′`.
    pub d1_limit: f64,
}

pub fn check_uniqueness<G: DecoderCharacteristic + ?Sized>(
    g: &G,
    d1: f64,
    gamma: f64,
) -> Result<UniquenessCertificate> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(alloc::format!(
            "contraction modulus must lie in (0, 1), got {gamma}"
        )));
    }
    let max_slope = g.max_slope();
    let d1_limit = if max_slope > 0.0 {
        gamma / max_slope
    } else {
        f64::INFINITY
    };
    Ok(UniquenessCertificate {
        certified: d1 <= d1_limit,
        max_slope,
        d1_limit,
    })
}

/// Instance with several fixed points built around `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub x1: f64,
    pub d0: f64,
    pub d1: f64,
    /// Sign changes of `h(x) − x` on the scan grid.
    pub sign_changes: usize,
    /// Approximate fixed points of `h` (grid midpoints at the sign changes).
    pub fixed_points: Vec<f64>,
}

/// Counts sign changes of `f` over `points` uniform samples of `[0, hi]`,
/// skipping exact zeros; returns the midpoints of the bracketing cells.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, hi: f64, points: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for i in 0..points {
        let x = hi * i as f64 / (points - 1) as f64;
        let v = f(x);
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if let Some((px, pv)) = last {
            if pv.signum() != v.signum() {
                out.push(0.5 * (px + x));
            }
        }
        last = Some((x, v));
    }
    out
}

/// Grid size used to verify counterexamples.
pub const SCAN_POINTS: usize = 10_000;

/// Given `x1` with `1/g′(x1) < D1 < x1/g(x1)`, sets `D0 = x1 − D1·g(x1)` so
/// that `x1` is a fixed point of `h(x) = D0 + D1·g(x)` at which `h` crosses
/// the diagonal upwards, and verifies at least two fixed points on the
/// domain by a sign-change scan.
pub fn construct_multiple_fixed_points<G: DecoderCharacteristic + ?Sized>(
    g: &G,
    d1: f64,
    x1: f64,
) -> Result<Counterexample> {
    let hi = g.domain_max();
    let (gx, dg) = (g.eval(x1), g.derivative(x1));
    let lower = if dg > 0.0 { 1.0 / dg } else { f64::INFINITY };
    let upper = if gx > 0.0 { x1 / gx } else { f64::INFINITY };
    if !(x1 > 0.0 && x1 < hi) || !(lower < d1 && d1 < upper) {
        return Err(Error::Domain(alloc::format!(
            "no counterexample constructible at x1 = {x1}: need {lower} < D1 = {d1} < {upper} inside [0, {hi}]"
        )));
    }
    let d0 = x1 - d1 * gx;
    let fixed_points = sign_changes(|x| d0 + d1 * g.eval(x) - x, hi, SCAN_POINTS);
    if fixed_points.len() < 2 {
        return Err(Error::Domain(alloc::format!(
            "construction at x1 = {x1} produced {} sign change(s)",
            fixed_points.len()
        )));
    }
    Ok(Counterexample {
        x1,
        d0,
        d1,
        sign_changes: fixed_points.len(),
        fixed_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(slope: f64) -> GCurve {
        GCurve::from_points(&[(0.0, 0.0), (1.0, slope)], Some(1.0)).unwrap()
    }

    fn sigmoid() -> GCurve {
        GCurve::from_points(
            &[(0.0, 0.0), (0.25, 0.0), (0.35, 0.2), (1.0, 0.3)],
            Some(1.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_curve_fixes_at_zero_in_one_step() {
        let g = GCurve::from_points(&[(0.0, 0.0), (1.0, 0.0)], None).unwrap();
        let r = iterate_map(&g, &MapCoefficients::custom(0.1, 1.0), 0.3, 10, 1e-12);
        assert_eq!(r.trace[1], 0.0);
        assert_eq!(r.fixed_point, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn affine_fixed_point_and_rate() {
        let g = linear(0.3);
        let c = MapCoefficients::custom(0.01, 1.0);
        let r = iterate_map(&g, &c, 0.2, 200, 1e-14);
        let xf = 0.003 / 0.7;
        assert!(r.converged);
        assert!((r.fixed_point - xf).abs() < 1e-12);
        for k in 1..6 {
            let ratio = (r.trace[k + 1] - xf) / (r.trace[k] - xf);
            assert!((ratio - 0.3).abs() < 1e-9);
        }
        assert!((r.contraction_modulus - 0.3).abs() < 1e-15);
        assert!(r.banach_certified);
        for (k, x) in r.trace.iter().enumerate() {
            assert!((x - xf).abs() <= r.error_bounds[k] + 1e-15);
        }
    }

    #[test]
    fn leaving_the_domain_is_a_divergence_verdict() {
        let g = GCurve::from_points(&[(0.0, 0.0), (0.5, 0.3), (2.0, 0.9)], Some(0.5)).unwrap();
        let r = iterate_map(&g, &MapCoefficients::custom(0.4, 2.0), 0.1, 50, 1e-12);
        assert!(r.diverged && !r.converged && !r.banach_certified);
    }

    #[test]
    fn convergence_conditions() {
        let g = linear(0.3);
        let c = MapCoefficients::custom(0.01, 1.0);
        let v = check_convergence_conditions(&g, 0.1, &c);
        assert!(v.condition_a && v.condition_b);
        assert!((v.margin_b - (0.09 - 0.03)).abs() < 1e-15);
        assert!(!check_convergence_conditions(&g, 1.5, &c).condition_a);
        let hi_d0 = MapCoefficients::custom(0.2, 1.0);
        assert!(!check_convergence_conditions(&g, 0.1, &hi_d0).condition_b);
    }

    #[test]
    fn uniqueness_certificate() {
        let g = GCurve::from_points(&[(0.0, 0.0), (1.0, 0.5)], Some(1.0)).unwrap();
        let c = check_uniqueness(&g, 1.8, 0.9).unwrap();
        assert!(c.certified);
        assert!((c.d1_limit - 1.8).abs() < 1e-12);
        assert!(!check_uniqueness(&g, 1.9, 0.9).unwrap().certified);
        assert!(check_uniqueness(&g, 1.0, 1.0).is_err());
    }

    #[test]
    fn sigmoid_counterexample_has_three_fixed_points() {
        let g = sigmoid();
        assert!((g.eval(0.3) - 0.1).abs() < 1e-15);
        assert!((g.derivative(0.3) - 2.0).abs() < 1e-12);
        let c = construct_multiple_fixed_points(&g, 1.0, 0.3).unwrap();
        assert!((c.d0 - 0.2).abs() < 1e-15);
        assert!(c.sign_changes >= 2);
        // h(x) = x at 0.2, 0.3 and, on the last segment, 0.4 + (x − 0.35)/6.5 = x
        assert_eq!(c.sign_changes, 3);
        assert!((c.fixed_points[0] - 0.2).abs() < 1e-3);
        assert!((c.fixed_points[1] - 0.3).abs() < 1e-3);
        assert!((c.fixed_points[2] - 9.0 / 22.0).abs() < 1e-3);
    }

    #[test]
    fn counterexample_preconditions() {
        let g = sigmoid();
        assert!(matches!(
            construct_multiple_fixed_points(&g, 0.4, 0.3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            construct_multiple_fixed_points(&g, 3.5, 0.3),
            Err(Error::Domain(_))
        ));
        assert!(construct_multiple_fixed_points(&linear(0.3), 1.0, 0.5).is_err());
    }

    #[test]
    fn h_is_monotone() {
        let g = sigmoid();
        let c = MapCoefficients::custom(0.2, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let pe = 0.5 * i as f64 / 1000.0;
            let v = g.eval(c.abscissa(pe));
            assert!(v >= prev);
            prev = v;
        }
    }
}
