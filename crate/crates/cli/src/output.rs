//! CSV and JSON artifacts.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dfmud_core::analysis::{CapacityResult, FixedPointReport, MapCoefficients};
use dfmud_core::codec::{BlockFading, CodecSpec, GCurve};
use dfmud_core::rmt::MomentReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("DFMUD_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash identifying the channel the g-curve was measured on.
pub fn codec_hash(spec: &CodecSpec, fading: Option<&BlockFading>) -> String {
    let json = serde_json::to_string(&(spec, fading)).expect("codec spec serializes");
    sha256_hex(json.as_bytes())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
}

impl Manifest {
    /// `config` is the effective configuration section the command ran with.
    pub fn new<C: Serialize>(
        command: &str,
        config: &C,
        seed: u64,
        outputs: Vec<String>,
    ) -> Result<Self> {
        let text = toml::to_string(config)?;
        Ok(Self {
            command: command.to_string(),
            config_hash: sha256_hex(format!("seed = {seed}\n{text}").as_bytes()),
            seed,
            version: VERSION.to_string(),
            outputs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Pe")]
    pub pe: f64,
    #[serde(rename = "Delta_f_emp")]
    pub delta_f_emp: f64,
    #[serde(rename = "Delta_f_pred")]
    pub delta_f_pred: f64,
    #[serde(rename = "Delta_n_emp")]
    pub delta_n_emp: f64,
    #[serde(rename = "Delta_n_pred")]
    pub delta_n_pred: f64,
    pub bias_emp: f64,
    pub bias_pred: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    #[serde(rename = "Pe")]
    pub pe: f64,
    pub snr_db: f64,
    #[serde(rename = "sigmaI_emp")]
    pub sigma_i_emp: f64,
    #[serde(rename = "sigmaI_pred")]
    pub sigma_i_pred: f64,
    pub gain_emp: f64,
    pub gain_pred: f64,
    pub ser_sim: f64,
    pub ser_gauss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCurveSampleRow {
    pub x: f64,
    pub raw_pe: f64,
    pub fitted_pe: f64,
    pub std_error: f64,
    pub ber: f64,
    pub symbols: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub mode: String,
    pub beta: f64,
    pub users: usize,
    pub trials: usize,
    pub ber: f64,
    pub feasible: bool,
    pub note: String,
}

pub fn capacity_rows(results: &[CapacityResult]) -> Vec<CapacityRow> {
    results
        .iter()
        .flat_map(|r| {
            r.probes.iter().map(move |p| CapacityRow {
                mode: r.mode.name().to_string(),
                beta: p.beta,
                users: p.users,
                trials: p.trials,
                ber: p.ber,
                feasible: p.feasible,
                note: p.note.clone().unwrap_or_default(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummaryRow {
    pub mode: String,
    pub beta_max: f64,
    pub diagnostic: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub pe: f64,
    /// `D0 + D1·pe`, the next abscissa.
    pub abscissa: f64,
    pub error_bound: Option<f64>,
}

pub fn trace_rows(report: &FixedPointReport, coeffs: &MapCoefficients) -> Vec<TraceRow> {
    report
        .trace
        .iter()
        .enumerate()
        .map(|(k, &pe)| TraceRow {
            iteration: k,
            pe,
            abscissa: coeffs.abscissa(pe),
            error_bound: report.error_bounds.get(k).copied(),
        })
        .collect()
}

/// Field names follow the published report format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "D0")]
    pub d0: f64,
    #[serde(rename = "D1")]
    pub d1: f64,
    pub gamma: f64,
    pub certified: bool,
    pub fixed_point: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub max_slope: f64,
    pub domain_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_conditions_hold: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: usize,
    pub analytic: f64,
    pub emp_indep: f64,
    pub emp_shifted: f64,
    /// Combined standard error of the two empirical means.
    pub stderr: f64,
}

pub fn moment_rows(report: &MomentReport) -> Vec<MomentRow> {
    (1..=report.analytic.len())
        .map(|m| MomentRow {
            m,
            analytic: report.analytic[m - 1],
            emp_indep: report.independent[m - 1].0,
            emp_shifted: report.shifted[m - 1].0,
            stderr: report.combined_std_error(m),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub m: usize,
    pub moment: f64,
    pub bound: f64,
    pub holds: bool,
}

const HASH_KEY: &str = "# spec-hash:";
const DOMAIN_KEY: &str = "# sigma-i-max:";

/// Writes the fitted table as `x,Pe` behind two comment lines carrying the
/// codec hash and the domain bound.
pub fn save_gcurve(path: &Path, curve: &GCurve, spec_hash: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(f, "{HASH_KEY} {spec_hash}")?;
    writeln!(f, "{DOMAIN_KEY} {:e}", curve.sigma_i_max())?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["x", "Pe"])?;
    for (x, pe) in curve.points() {
        w.write_record([format!("{x:e}"), format!("{pe:e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct GCurveRow {
    x: f64,
    #[serde(rename = "Pe")]
    pe: f64,
}

/// Reads a file written by [`save_gcurve`]; returns the curve and its hash.
pub fn load_gcurve(path: &Path) -> Result<(GCurve, String)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hash = None;
    let mut domain = None;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if let Some(v) = line.strip_prefix(HASH_KEY) {
            hash = Some(v.trim().to_string());
        } else if let Some(v) = line.strip_prefix(DOMAIN_KEY) {
            domain = Some(v.trim().parse::<f64>().context("bad sigma-i-max")?);
        } else if !line.starts_with('#') {
            break;
        }
    }
    let hash = hash.ok_or_else(|| anyhow!("{} has no spec-hash header", path.display()))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut points = Vec::new();
    for row in r.deserialize::<GCurveRow>() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        points.push((row.x, row.pe));
    }
    if points.is_empty() {
        bail!("{} holds no points", path.display());
    }
    let curve = GCurve::from_points(&points, domain)?;
    Ok((curve, hash))
}
