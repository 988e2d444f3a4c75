use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::codec::Codec;
use crate::error::{Error, Result};
use crate::executor::TrialExecutor;
use crate::rng::{complex_gaussian, trial_stream, Stream};
use crate::stats::{binomial_std_error, isotonic_nondecreasing};

/// Error counts from one Monte Carlo trial at a fixed abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PointEstimate {
    pub symbol_errors: u64,
    pub symbols: u64,
    pub bit_errors: u64,
    pub bits: u64,
}

impl PointEstimate {
    fn add(&mut self, o: &PointEstimate) {
        self.symbol_errors += o.symbol_errors;
        self.symbols += o.symbols;
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
    }
}

/// Source of feedback-error samples at `x = 1/SINR`.
pub trait ErrorRateSampler: Sync {
    fn trial(&self, x: f64, stream: &mut Stream) -> Result<PointEstimate>;
}

/// Block Rayleigh fading seen through maximal ratio combining: every
/// `block_length` consecutive channel symbols share the path energy
/// `e = Σ_l |a_l|²`, `a_l` i.i.d. CSCG with variance `1/paths`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockFading {
    pub paths: usize,
    pub block_length: usize,
}

/// One codeword through `z = e·b + n`, `n` with real-part variance `e·x/2`
/// (`e = 1` without fading), decoded from LLRs `4z/x` and re-encoded.
#[derive(Debug, Clone)]
pub struct CodecSampler {
    pub codec: Codec,
    pub fading: Option<BlockFading>,
}

impl CodecSampler {
    pub fn awgn(codec: Codec) -> Self {
        Self {
            codec,
            fading: None,
        }
    }
}

impl ErrorRateSampler for CodecSampler {
    fn trial(&self, x: f64, stream: &mut Stream) -> Result<PointEstimate> {
        let c = &self.codec;
        let info: Vec<u8> = (0..c.info_length())
            .map(|_| stream.random_range(0..2u8))
            .collect();
        let b = c.encode(&info)?;
        let mut energy = 1.0;
        let mut z = Vec::with_capacity(b.len());
        for (j, v) in b.iter().enumerate() {
            if let Some(f) = self.fading {
                if j % f.block_length.max(1) == 0 {
                    energy = (0..f.paths.max(1))
                        .map(|_| complex_gaussian(stream, 1.0 / f.paths.max(1) as f64).norm_sqr())
                        .sum();
                }
            }
            z.push(
                energy * v + (0.5 * energy * x).sqrt() * stream.sample::<f64, _>(StandardNormal),
            );
        }
        let d = c.decode(&z, x)?;
        Ok(PointEstimate {
            symbol_errors: d.symbols.iter().zip(&b).filter(|(p, q)| p != q).count() as u64,
            symbols: b.len() as u64,
            bit_errors: d.info.iter().zip(&info).filter(|(p, q)| p != q).count() as u64,
            bits: info.len() as u64,
        })
    }
}

/// Test double that flips each of `symbols` symbols independently with a
/// known probability `g(x)`.
#[derive(Debug, Clone, Copy)]
pub struct GenieSampler {
    pub g: fn(f64) -> f64,
    pub symbols: usize,
}

impl GenieSampler {
    /// `g(x) = min(0.4, x²)`.
    pub fn quadratic() -> Self {
        fn g(x: f64) -> f64 {
            (x * x).min(0.4)
        }
        Self { g, symbols: 1024 }
    }
}

impl ErrorRateSampler for GenieSampler {
    fn trial(&self, x: f64, stream: &mut Stream) -> Result<PointEstimate> {
        let p = (self.g)(x);
        let errors = (0..self.symbols)
            .filter(|_| stream.random::<f64>() < p)
            .count() as u64;
        Ok(PointEstimate {
            symbol_errors: errors,
            symbols: self.symbols as u64,
            bit_errors: errors,
            bits: self.symbols as u64,
        })
    }
}

/// Raw and fitted value at one grid abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GCurvePoint {
    pub x: f64,
    pub raw_pe: f64,
    pub fitted_pe: f64,
    pub std_error: f64,
    pub ber: f64,
    pub symbols: u64,
}

/// Monotone piecewise-linear decoder characteristic `Pe = g(x)`, `x = 1/SINR`.
#[derive(Debug, Clone, PartialEq)]
pub struct GCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    sigma_i_max: f64,
    /// Grid points behind an estimated curve; empty for curves built from a table.
    pub samples: Vec<GCurvePoint>,
    pub warnings: Vec<String>,
}

impl GCurve {
    /// Builds a curve from a table. The table must start at `(0, 0)`, have
    /// strictly increasing abscissae and nondecreasing values in `[0, 1]`.
    /// `sigma_i_max` defaults to the largest abscissa with `Pe < 0.5`.
    pub fn from_points(points: &[(f64, f64)], sigma_i_max: Option<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Parameter(
                "a g-curve needs at least two points".into(),
            ));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::Parameter(format!(
                "g-curve must start at (0, 0), got {:?}",
                points[0]
            )));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Parameter(format!(
                    "abscissae not strictly increasing at x = {}",
                    w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Parameter(format!(
                    "g-curve decreases at x = {}",
                    w[1].0
                )));
            }
        }
        if points
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.1) || !p.0.is_finite())
        {
            return Err(Error::Parameter("g-curve values must lie in [0, 1]".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let default_max = points
            .iter()
            .filter(|p| p.1 < 0.5)
            .map(|p| p.0)
            .fold(0.0, f64::max);
        let sigma_i_max = sigma_i_max.unwrap_or(default_max);
        if !(sigma_i_max >= 0.0) {
            return Err(Error::Parameter(format!(
                "invalid domain bound {sigma_i_max}"
            )));
        }
        Ok(Self {
            xs,
            ys,
            sigma_i_max,
            samples: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Upper end of the domain `[0, σ_I^max]`.
    pub fn sigma_i_max(&self) -> f64 {
        self.sigma_i_max
    }

    fn segment(&self, x: f64) -> Option<usize> {
        if x < 0.0 || x >= self.xs[self.xs.len() - 1] {
            return None;
        }
        Some(self.xs.partition_point(|&v| v <= x) - 1)
    }

    /// Linear interpolation; held constant beyond the table.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.ys[0];
        }
        match self.segment(x) {
            Some(i) => {
                let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
                self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
            }
            None => self.ys[self.ys.len() - 1],
        }
    }

    /// Right derivative; 0 outside the table.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(i) => (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]),
            None => 0.0,
        }
    }

    /// Largest segment slope over segments that intersect the domain.
    pub fn max_slope(&self) -> f64 {
        (0..self.xs.len() - 1)
            .filter(|&i| self.xs[i] < self.sigma_i_max || i == 0)
            .map(|i| (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]))
            .fold(0.0, f64::max)
    }
}

/// Monte Carlo estimate of `g` on `grid` (strictly increasing, positive),
/// `trials` draws per point.
///
/// Raw rates are fitted by weighted isotonic regression, the curve is pinned
/// at `(0, 0)` and made flat up to half the first grid spacing so that
/// `g′(0) = 0`. Raw points further than three standard errors from the fit
/// are reported in [`GCurve::warnings`].
pub fn estimate_gcurve<S: ErrorRateSampler, E: TrialExecutor>(
    sampler: &S,
    grid: &[f64],
    trials: usize,
    master_seed: u64,
    exec: &E,
) -> Result<GCurve> {
    if grid.is_empty() || trials == 0 {
        return Err(Error::Parameter("empty g-curve grid or zero trials".into()));
    }
    if !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter(
            "g-curve grid must be positive and strictly increasing".into(),
        ));
    }
    let results = exec.run(grid.len() * trials, |j| {
        let mut st = trial_stream(master_seed, "gcurve", j as u64);
        sampler.trial(grid[j / trials], &mut st)
    });
    let mut totals = alloc::vec![PointEstimate::default(); grid.len()];
    for (j, r) in results.into_iter().enumerate() {
        totals[j / trials].add(&r?);
    }
    let raw: Vec<f64> = totals
        .iter()
        .map(|t| t.symbol_errors as f64 / t.symbols.max(1) as f64)
        .collect();
    let weights: Vec<f64> = totals.iter().map(|t| t.symbols as f64).collect();
    let fit = isotonic_nondecreasing(&raw, &weights);

    let mut warnings = Vec::new();
    let mut samples = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let n = weights[i].max(1.0);
        let se = binomial_std_error(fit[i].max(1.0 / n), n);
        if (raw[i] - fit[i]).abs() > 3.0 * se {
            warnings.push(format!(
                "raw Pe {} at x = {} is {:.1} standard errors from the monotone fit {}",
                raw[i],
                grid[i],
                (raw[i] - fit[i]).abs() / se,
                fit[i]
            ));
        }
        samples.push(GCurvePoint {
            x: grid[i],
            raw_pe: raw[i],
            fitted_pe: fit[i],
            std_error: binomial_std_error(raw[i], n),
            ber: totals[i].bit_errors as f64 / totals[i].bits.max(1) as f64,
            symbols: totals[i].symbols,
        });
    }

    let mut points = Vec::with_capacity(grid.len() + 2);
    points.push((0.0, 0.0));
    points.push((0.5 * grid[0], 0.0));
    points.extend(grid.iter().copied().zip(fit.iter().copied()));
    let sigma_i_max = grid
        .iter()
        .zip(&fit)
        .filter(|(_, &p)| p < 0.5)
        .map(|(&x, _)| x)
        .fold(0.0, f64::max);
    if sigma_i_max == 0.0 {
        warnings.push("no grid point has Pe < 0.5; the domain is empty".into());
    }
    let mut curve = GCurve::from_points(&points, Some(sigma_i_max))?;
    curve.samples = samples;
    curve.warnings = warnings;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodecSpec;
    use crate::executor::Sequential;
    use alloc::vec;

    #[test]
    fn table_interpolation_and_slopes() {
        let g =
            GCurve::from_points(&[(0.0, 0.0), (0.1, 0.0), (0.3, 0.2), (0.5, 0.6)], None).unwrap();
        assert_eq!(g.eval(0.0), 0.0);
        assert!((g.eval(0.2) - 0.1).abs() < 1e-15);
        assert_eq!(g.eval(2.0), 0.6);
        assert_eq!(g.derivative(0.0), 0.0);
        assert!((g.derivative(0.4) - 2.0).abs() < 1e-12);
        assert_eq!(g.sigma_i_max(), 0.3);
        // the segment starting at 0.3 still intersects [0, 0.3] only at its end
        assert!((g.max_slope() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_tables_are_rejected() {
        assert!(GCurve::from_points(&[(0.0, 0.1), (1.0, 0.2)], None).is_err());
        assert!(GCurve::from_points(&[(0.0, 0.0), (1.0, 0.2), (1.0, 0.3)], None).is_err());
        assert!(GCurve::from_points(&[(0.0, 0.0), (1.0, 0.2), (2.0, 0.1)], None).is_err());
        assert!(GCurve::from_points(&[(0.0, 0.0)], None).is_err());
    }

    #[test]
    fn genie_curve_is_recovered() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
        let g = estimate_gcurve(&GenieSampler::quadratic(), &grid, 40, 5, &Sequential).unwrap();
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.derivative(0.0), 0.0);
        for p in &g.samples {
            let truth = (p.x * p.x).min(0.4);
            // 40 960 draws: standard error at most 0.0025
            assert!((p.fitted_pe - truth).abs() < 0.01, "{p:?}");
        }
        // between grid points a monotone truth can move by at most its
        // increment over the cell
        let truth = |x: f64| (x * x).min(0.4);
        for i in 1..200 {
            let x = 0.005 * i as f64;
            let lo = 0.05 * (x / 0.05).floor();
            let cell = truth(lo + 0.05) - truth(lo);
            assert!((g.eval(x) - truth(x)).abs() < 0.01 + cell, "x = {x}");
        }
        assert_eq!(g.sigma_i_max(), 1.0);
    }

    #[test]
    fn isotonic_repair_and_warning() {
        struct Wobbly;
        impl ErrorRateSampler for Wobbly {
            fn trial(&self, x: f64, _: &mut Stream) -> Result<PointEstimate> {
                let errors = if x == 0.2 { 500 } else { (x * 1000.0) as u64 };
                Ok(PointEstimate {
                    symbol_errors: errors,
                    symbols: 1000,
                    bit_errors: 0,
                    bits: 1,
                })
            }
        }
        let g = estimate_gcurve(&Wobbly, &[0.1, 0.2, 0.3, 0.4], 1, 0, &Sequential).unwrap();
        let ys: Vec<f64> = g.points().map(|p| p.1).collect();
        assert!(ys.windows(2).all(|w| w[1] >= w[0]));
        assert!(!g.warnings.is_empty());
    }

    #[test]
    fn grid_is_validated() {
        let s = GenieSampler::quadratic();
        assert!(estimate_gcurve(&s, &[], 1, 0, &Sequential).is_err());
        assert!(estimate_gcurve(&s, &[0.0, 0.1], 1, 0, &Sequential).is_err());
        assert!(estimate_gcurve(&s, &[0.2, 0.1], 1, 0, &Sequential).is_err());
        assert!(estimate_gcurve(&s, &[0.1], 0, 0, &Sequential).is_err());
    }

    #[test]
    fn convolutional_ber_decreases_with_snr() {
        let sampler = CodecSampler::awgn(Codec::new(CodecSpec::convolutional()).unwrap());
        let grid = vec![0.6, 0.9, 1.3];
        let g = estimate_gcurve(&sampler, &grid, 20, 1, &Sequential).unwrap();
        let ber: Vec<f64> = g.samples.iter().map(|p| p.ber).collect();
        assert!(ber[0] < ber[1] && ber[1] < ber[2], "{ber:?}");
    }

    #[test]
    fn fading_costs_performance() {
        let codec = Codec::new(CodecSpec::convolutional()).unwrap();
        let awgn = CodecSampler::awgn(codec.clone());
        let faded = CodecSampler {
            codec,
            fading: Some(BlockFading {
                paths: 1,
                block_length: 8,
            }),
        };
        let a = estimate_gcurve(&awgn, &[0.8], 20, 4, &Sequential).unwrap();
        let f = estimate_gcurve(&faded, &[0.8], 20, 4, &Sequential).unwrap();
        assert!(f.samples[0].ber > a.samples[0].ber + 0.005);
    }

    #[test]
    fn turbo_waterfall_is_steeper_than_convolutional() {
        let grid: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
        let conv = CodecSampler::awgn(Codec::new(CodecSpec::convolutional()).unwrap());
        let turbo = CodecSampler::awgn(Codec::new(CodecSpec::turbo()).unwrap());
        let gc = estimate_gcurve(&conv, &grid, 10, 2, &Sequential).unwrap();
        let gt = estimate_gcurve(&turbo, &grid, 10, 2, &Sequential).unwrap();
        assert!(
            gt.max_slope() > gc.max_slope(),
            "{} vs {}",
            gt.max_slope(),
            gc.max_slope()
        );
    }
}
