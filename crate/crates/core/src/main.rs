//! Thin command-line front end over the library commands.

use clap::{Args, Parser, Subcommand};
use degen_kpp::cli::{self, CommandOutput, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "degen-kpp",
    version,
    about = "Travelling waves of the degenerate Fisher-KPP equation: shooting, classification, reconstruction, verification"
)]
struct Cli {
    /// key=value config file; flags take precedence (DEGEN_KPP_CONFIG is
    /// read first when set)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// wave speed
    #[arg(long)]
    c: Option<f64>,
    /// shooting value h(1/2)
    #[arg(long)]
    alpha: Option<f64>,
    /// distinguished wave: small | large | max
    #[arg(long)]
    special: Option<String>,
    /// relative ODE tolerance (absolute is 100x tighter)
    #[arg(long = "tol-ode")]
    tol_ode: Option<f64>,
    /// bisection tolerance (relative)
    #[arg(long = "tol-bisect")]
    tol_bisect: Option<f64>,
    /// profile sample count
    #[arg(long)]
    samples: Option<usize>,
    /// output path or stem
    #[arg(long)]
    out: Option<String>,
    /// output format: csv | json | svg
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Speed constants: lambda-, lambda+, bell top, (lambda+)^2/16
    Lambda {
        #[command(flatten)]
        common: Common,
    },
    /// Threshold table, plus the class of --alpha when given
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct one wave: CSV of (z,u) plus a JSON report
    Wave {
        #[command(flatten)]
        common: Common,
    },
    /// Figure emission: waves | phase | phase-log (CSV bundle + SVG)
    Figure {
        #[command(flatten)]
        common: Common,
        /// figure kind: waves | phase | phase-log
        #[arg(long)]
        which: Option<String>,
        /// comma-separated shooting values overriding the default curves
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Verification suites: subsuper | recursions | residuals | focusing | all
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: Option<String>,
        /// epsilon for the subcritical M-recursion
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Subcritical nonexistence sweep over a log-spaced alpha grid
    Scan {
        #[command(flatten)]
        common: Common,
        /// number of alpha grid points
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
}

fn apply_common(cfg: &mut RunConfig, c: &Common) -> degen_kpp::Result<()> {
    if let Some(v) = c.c {
        cfg.apply_kv("c", &v.to_string())?;
    }
    if let Some(v) = c.alpha {
        cfg.apply_kv("alpha", &format!("{v:e}"))?;
    }
    if let Some(v) = &c.special {
        cfg.apply_kv("special", v)?;
    }
    if let Some(v) = c.tol_ode {
        cfg.apply_kv("tol-ode", &format!("{v:e}"))?;
    }
    if let Some(v) = c.tol_bisect {
        cfg.apply_kv("tol-bisect", &format!("{v:e}"))?;
    }
    if let Some(v) = c.samples {
        cfg.apply_kv("samples", &v.to_string())?;
    }
    if let Some(v) = &c.out {
        cfg.apply_kv("out", v)?;
    }
    if let Some(v) = &c.format {
        cfg.apply_kv("format", v)?;
    }
    Ok(())
}

fn run() -> degen_kpp::Result<CommandOutput> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    match &cli.cmd {
        Cmd::Lambda { common } => {
            apply_common(&mut cfg, common)?;
            cli::cmd_lambda(&cfg)
        }
        Cmd::Classify { common } => {
            apply_common(&mut cfg, common)?;
            cli::cmd_classify(&cfg)
        }
        Cmd::Wave { common } => {
            apply_common(&mut cfg, common)?;
            cli::cmd_wave(&cfg)
        }
        Cmd::Figure {
            common,
            which,
            alphas,
        } => {
            apply_common(&mut cfg, common)?;
            if let Some(w) = which {
                cfg.apply_kv("which", w)?;
            }
            if let Some(a) = alphas {
                cfg.apply_kv("alphas", a)?;
            }
            cli::cmd_figure(&cfg)
        }
        Cmd::Verify { common, suite, eps } => {
            apply_common(&mut cfg, common)?;
            if let Some(s) = suite {
                cfg.apply_kv("suite", s)?;
            }
            if let Some(e) = eps {
                cfg.apply_kv("eps", &e.to_string())?;
            }
            cli::cmd_verify(&cfg)
        }
        Cmd::Scan { common, grid } => {
            apply_common(&mut cfg, common)?;
            cli::cmd_scan(&cfg, *grid)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.json).unwrap_or_else(|_| "{}".into())
            );
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
