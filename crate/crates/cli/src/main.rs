use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dfmud::commands;
use dfmud::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "dfmud", version = env!("DFMUD_VERSION"), about = "Decision-feedback multiuser detection experiments")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving CSV/JSON artifacts.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point, overriding the configuration.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Channel-estimation error variance versus coherence time.
    Fig2,
    /// Residual interference, PIC output model and Gaussian-model SER.
    Fig3,
    /// Decoder characteristic Pe = g(1/SINR) by Monte Carlo.
    Gcurve,
    /// Largest load reaching the target BER, per receiver mode.
    Capacity,
    /// Iterate the scalar map on a stored g-curve and certify it.
    Fixedpoint {
        /// g-curve CSV written by `dfmud gcurve`.
        #[arg(long)]
        gcurve: Option<PathBuf>,
    },
    /// Eigenvalue moments of the stacked code matrix.
    Rmt,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    if let Some(t) = cli.trials {
        cfg.fig2.trials = t;
        cfg.fig3.trials = t;
        cfg.gcurve.trials = t;
        cfg.rmt.trials = t;
    }
    let out = &cli.out;
    match cli.command {
        Command::Fig2 => {
            for r in commands::fig2(&cfg.fig2, seed, out)? {
                println!(
                    "M={:3} Delta_f {:.5} (pred {:.5})  Delta_n {:.5} (pred {:.5})  bias {:.4} (pred {:.4})",
                    r.m, r.delta_f_emp, r.delta_f_pred, r.delta_n_emp, r.delta_n_pred, r.bias_emp, r.bias_pred
                );
            }
        }
        Command::Fig3 => {
            for p in commands::fig3(&cfg.fig3, seed, out)? {
                let r = p.row;
                println!(
                    "Pe={:.3} SNR={:5.1}dB sigmaI^2 {:.4} (pred {:.4})  gain {:.4} (pred {:.4})  SER {:.5} vs gauss {:.5}  skew {:.3} ex-kurt {:.3}",
                    r.pe, r.snr_db, r.sigma_i_emp, r.sigma_i_pred, r.gain_emp, r.gain_pred, r.ser_sim, r.ser_gauss,
                    p.skewness, p.excess_kurtosis
                );
            }
        }
        Command::Gcurve => {
            let g = commands::gcurve(&cfg.gcurve, seed, out)?;
            for w in &g.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "sigma_i_max {}  max slope {:.4}",
                g.sigma_i_max(),
                g.max_slope()
            );
        }
        Command::Capacity => {
            if let Some(t) = cli.trials {
                eprintln!(
                    "note: capacity probes size their trials from min_bits; --trials {t} ignored"
                );
            }
            for r in commands::capacity(&cfg.capacity, seed, out)? {
                println!("{:13} beta_max {:.2}", r.mode.name(), r.beta_max);
                if let Some(d) = &r.diagnostic {
                    println!("  {d}");
                }
            }
        }
        Command::Fixedpoint { gcurve } => {
            let o = commands::fixedpoint(&cfg.fixedpoint, gcurve.as_deref(), out)?;
            let c = &o.certificate;
            println!(
                "D0 {:.6} D1 {:.6} gamma {:.4} certified {} fixed point {:.3e} after {} iterations (converged {}, diverged {})",
                c.d0, c.d1, c.gamma, c.certified, c.fixed_point, c.iterations, c.converged, c.diverged
            );
            println!("g-curve spec hash {}", o.spec_hash);
        }
        Command::Rmt => {
            let (rep, bounds) = commands::rmt(&cfg.rmt, seed, out)?;
            println!("beta' = {}  ({} trials)", rep.beta_prime, rep.trials);
            for m in 1..=rep.analytic.len() {
                println!(
                    "m={m} analytic {:.6}  independent {:.6} ± {:.1e}  shifted {:.6} ± {:.1e}",
                    rep.analytic[m - 1],
                    rep.independent[m - 1].0,
                    rep.independent[m - 1].1,
                    rep.shifted[m - 1].0,
                    rep.shifted[m - 1].1
                );
            }
            let all = bounds.iter().all(|b| b.holds);
            println!(
                "moment bound C^m m^(m-2) holds for m <= {}: {all}",
                bounds.len()
            );
        }
    }
    Ok(())
}
