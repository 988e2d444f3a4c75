//! One driver per subcommand. Each writes its artifacts plus a
//! `<command>.manifest.json` into the output directory and returns what it
//! computed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dfmud_core::analysis::{
    check_convergence_conditions, delta_a_feedback, iterate_map, map_coefficients,
    residual_interference_variance, user_capacity_search, CapacityResult, CapacitySearch,
    DecoderCharacteristic, FixedPointReport, MapCoefficients,
};
use dfmud_core::codec::{estimate_gcurve, Codec, CodecSampler, GCurve};
use dfmud_core::config::noise_variance_from_snr_db;
use dfmud_core::detector::{measure_pic_stats, DetectorExperiment};
use dfmud_core::estimator::{empirical_estimation_stats, EstimationExperiment};
use dfmud_core::rmt::{empirical_eigen_moments, moment_bound_check, mp_moments, MomentReport};

use crate::config::{
    CapacityConfig, Fig2Config, Fig3Config, FixedPointConfig, GCurveConfig, MapSource, RmtConfig,
};
use crate::exec::Parallel;
use crate::output::{
    capacity_rows, codec_hash, load_gcurve, moment_rows, save_gcurve, trace_rows, write_csv,
    write_json, BoundRow, CapacitySummaryRow, Certificate, Fig2Row, Fig3Row, GCurveSampleRow,
    Manifest,
};

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn finish<C: serde::Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    seed: u64,
    files: &[&str],
) -> Result<()> {
    let m = Manifest::new(
        command,
        config,
        seed,
        files.iter().map(|s| s.to_string()).collect(),
    )?;
    write_json(&out.join(format!("{command}.manifest.json")), &m)
}

pub fn fig2(cfg: &Fig2Config, seed: u64, out: &Path) -> Result<Vec<Fig2Row>> {
    prepare(out)?;
    let mut rows = Vec::with_capacity(cfg.coherence.len());
    for &m in &cfg.coherence {
        let mut scenario = cfg.scenario.clone();
        scenario.coherence = m;
        let sys = scenario.system(seed)?;
        let s = empirical_estimation_stats(
            &EstimationExperiment::new(sys.clone(), cfg.pe, cfg.trials),
            &Parallel,
        )?;
        let (beta, alpha) = (sys.load(), sys.training_fraction());
        rows.push(Fig2Row {
            m,
            pe: cfg.pe,
            delta_f_emp: s.delta_f,
            delta_f_pred: delta_a_feedback(cfg.pe, beta, sys.paths, m, 0.0, alpha),
            delta_n_emp: s.delta_n,
            delta_n_pred: sys.noise_variance / m as f64,
            bias_emp: s.bias_ratio.re,
            bias_pred: 2.0 * s.effective_pe,
        });
    }
    write_csv(&out.join("fig2.csv"), &rows)?;
    finish(out, "fig2", cfg, seed, &["fig2.csv"])?;
    Ok(rows)
}

/// Normality summary of one fig3 point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Point {
    pub row: Fig3Row,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub decisions: usize,
}

pub fn fig3(cfg: &Fig3Config, seed: u64, out: &Path) -> Result<Vec<Fig3Point>> {
    prepare(out)?;
    let mut points = Vec::new();
    for &pe in &cfg.pe {
        for &snr in &cfg.snr_db {
            let mut scenario = cfg.scenario.clone();
            scenario.snr_db = Some(snr);
            scenario.noise_variance = None;
            let sys = scenario.system(seed)?;
            let exp = DetectorExperiment::new(sys.clone(), pe, cfg.trials).with_window(cfg.window);
            let s = measure_pic_stats(&exp, &Parallel)?;
            let (beta, alpha, l) = (sys.load(), sys.training_fraction(), sys.paths);
            let da = delta_a_feedback(pe, beta, l, sys.coherence, sys.noise_variance, alpha);
            points.push(Fig3Point {
                row: Fig3Row {
                    pe,
                    snr_db: snr,
                    sigma_i_emp: s.sigma_i_sq,
                    sigma_i_pred: residual_interference_variance(
                        da,
                        beta,
                        l,
                        pe,
                        sys.noise_variance,
                    ),
                    gain_emp: s.gain,
                    gain_pred: 1.0 - 2.0 * pe,
                    ser_sim: s.ser_sim,
                    ser_gauss: s.ser_gauss,
                },
                skewness: s.skewness,
                excess_kurtosis: s.excess_kurtosis,
                decisions: s.decisions,
            });
        }
    }
    let rows: Vec<Fig3Row> = points.iter().map(|p| p.row).collect();
    write_csv(&out.join("fig3.csv"), &rows)?;
    finish(out, "fig3", cfg, seed, &["fig3.csv"])?;
    Ok(points)
}

pub fn gcurve(cfg: &GCurveConfig, seed: u64, out: &Path) -> Result<GCurve> {
    prepare(out)?;
    let sampler = CodecSampler {
        codec: Codec::new(cfg.codec.clone())?,
        fading: cfg.fading,
    };
    let curve = estimate_gcurve(&sampler, &cfg.grid, cfg.trials, seed, &Parallel)?;
    save_gcurve(
        &out.join("gcurve.csv"),
        &curve,
        &codec_hash(&cfg.codec, cfg.fading.as_ref()),
    )?;
    let samples: Vec<GCurveSampleRow> = curve
        .samples
        .iter()
        .map(|p| GCurveSampleRow {
            x: p.x,
            raw_pe: p.raw_pe,
            fitted_pe: p.fitted_pe,
            std_error: p.std_error,
            ber: p.ber,
            symbols: p.symbols,
        })
        .collect();
    write_csv(&out.join("gcurve_samples.csv"), &samples)?;
    finish(
        out,
        "gcurve",
        cfg,
        seed,
        &["gcurve.csv", "gcurve_samples.csv"],
    )?;
    Ok(curve)
}

pub fn capacity(cfg: &CapacityConfig, seed: u64, out: &Path) -> Result<Vec<CapacityResult>> {
    prepare(out)?;
    let template = cfg.scenario.system(seed)?;
    let mut results = Vec::with_capacity(cfg.modes.len());
    for &mode in &cfg.modes {
        let mut s = CapacitySearch::new(template.clone(), cfg.codec.clone(), mode);
        s.target_ber = cfg.target_ber;
        s.iterations = cfg.iterations;
        s.min_bits = cfg.min_bits;
        s.step = cfg.step;
        s.beta_max = cfg.beta_max;
        results.push(user_capacity_search(&s, &Parallel)?);
    }
    write_csv(&out.join("capacity.csv"), &capacity_rows(&results))?;
    let summary: Vec<CapacitySummaryRow> = results
        .iter()
        .map(|r| CapacitySummaryRow {
            mode: r.mode.name().to_string(),
            beta_max: r.beta_max,
            diagnostic: r.diagnostic.clone().unwrap_or_default(),
        })
        .collect();
    write_csv(&out.join("capacity_summary.csv"), &summary)?;
    finish(
        out,
        "capacity",
        cfg,
        seed,
        &["capacity.csv", "capacity_summary.csv"],
    )?;
    Ok(results)
}

pub fn map_from_source(src: &MapSource) -> Result<MapCoefficients> {
    Ok(match *src {
        MapSource::Explicit { d0, d1 } => MapCoefficients::custom(d0, d1),
        MapSource::Load {
            beta,
            paths,
            coherence,
            snr_db,
        } => map_coefficients(noise_variance_from_snr_db(snr_db), beta, paths, coherence)?,
    })
}

pub struct FixedPointOutcome {
    pub report: FixedPointReport,
    pub certificate: Certificate,
    pub spec_hash: String,
}

pub fn fixedpoint(
    cfg: &FixedPointConfig,
    gcurve_path: Option<&Path>,
    out: &Path,
) -> Result<FixedPointOutcome> {
    prepare(out)?;
    let path: PathBuf = match (gcurve_path, &cfg.gcurve) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            bail!("fixedpoint needs a stored g-curve (--gcurve or [fixedpoint].gcurve)")
        }
    };
    let (g, spec_hash) = load_gcurve(&path)?;
    let coeffs = map_from_source(&cfg.map)?;
    let report = iterate_map(&g, &coeffs, cfg.pe0, cfg.max_iter, cfg.tol);
    let certificate = Certificate {
        d0: coeffs.d0,
        d1: coeffs.d1,
        gamma: report.contraction_modulus,
        certified: report.banach_certified,
        fixed_point: report.fixed_point,
        iterations: report.iterations,
        converged: report.converged,
        diverged: report.diverged,
        max_slope: g.max_slope(),
        domain_max: g.domain_max(),
        initial_conditions_hold: cfg
            .sigma_i0_sq
            .map(|s| check_convergence_conditions(&g, s, &coeffs).holds()),
    };
    write_csv(
        &out.join("fixedpoint_trace.csv"),
        &trace_rows(&report, &coeffs),
    )?;
    write_json(&out.join("certificate.json"), &certificate)?;
    let mut effective = cfg.clone();
    effective.gcurve = Some(path);
    finish(
        out,
        "fixedpoint",
        &effective,
        0,
        &["fixedpoint_trace.csv", "certificate.json"],
    )?;
    Ok(FixedPointOutcome {
        report,
        certificate,
        spec_hash,
    })
}

pub fn rmt(cfg: &RmtConfig, seed: u64, out: &Path) -> Result<(MomentReport, Vec<BoundRow>)> {
    prepare(out)?;
    let sys = cfg.scenario.system(seed)?;
    let report = empirical_eigen_moments(&sys, cfg.m_max, cfg.trials, &Parallel)?;
    let beta = report.beta_prime;
    let holds = moment_bound_check(beta, cfg.bound_c, cfg.bound_m_max)?;
    let moments = mp_moments(beta, cfg.bound_m_max)?;
    let bounds: Vec<BoundRow> = holds
        .iter()
        .zip(&moments)
        .enumerate()
        .map(|(i, (&h, &v))| {
            let m = (i + 1) as f64;
            BoundRow {
                m: i + 1,
                moment: v,
                bound: cfg.bound_c.powf(m) * m.powf(m - 2.0),
                holds: h,
            }
        })
        .collect();
    write_csv(&out.join("moments.csv"), &moment_rows(&report))?;
    write_csv(&out.join("moment_bound.csv"), &bounds)?;
    finish(out, "rmt", cfg, seed, &["moments.csv", "moment_bound.csv"])?;
    Ok((report, bounds))
}
