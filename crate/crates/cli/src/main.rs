use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info};

use eev_core::harness::{self, RunConfig, SweepPlan};

#[derive(Parser)]
#[command(name = "eev", version, about = "Ensemble eddy-viscosity simulator and dissipation-bound diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides perturbation.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; defaults to $EEV_OUTPUT_ROOT, then the current directory.
    #[arg(long)]
    output_root: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single run: time series, ledger and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Reynolds sweep at fixed forcing.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated Reynolds numbers.
        #[arg(long, value_delimiter = ',', required = true)]
        re: Vec<f64>,
        /// tau in units of L/U_target.
        #[arg(long, default_value_t = SweepPlan::default().tau_factor)]
        tau_factor: f64,
        /// Run length in units of L/U_target.
        #[arg(long, default_value_t = SweepPlan::default().duration)]
        duration: f64,
    },
    /// Verification suite; nonzero exit on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also write verify.json into the run directory.
        #[arg(long)]
        write: bool,
    },
    /// Regenerate budget/ledger/sweep tables from a run or sweep directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.perturbation.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { common } => {
            let cfg = load(&common)?;
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(true);
            }
            let out = harness::run(&cfg, common.output_root.as_deref())?;
            let dir = out.dir.expect("run writes files");
            info!("wrote {} files to {}", out.summary.manifest.len(), dir.display());
            if let Some(lg) = out.summary.ledger("full").filter(|l| !l.partial) {
                println!(
                    "eps_norm={:.6} bound_coeff={:.6} finite_t_norm={:.6} margin={:.4} verdict={}",
                    lg.eps_norm, lg.coefficient, lg.finite_t_norm, lg.margin, lg.verdict
                );
            }
            Ok(true)
        }
        Command::Sweep { common, re, tau_factor, duration } => {
            let cfg = load(&common)?;
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(true);
            }
            let plan = SweepPlan { tau_factor, duration };
            let rep = harness::sweep(&cfg, &re, &plan, common.output_root.as_deref())?;
            println!("Re,eps_norm,bound_coeff,finite_t_norm,margin,verdict,status");
            for r in &rep.rows {
                println!(
                    "{:e},{:.6},{:.6},{:.6},{:.4},{},{}",
                    r.re, r.eps_norm, r.bound_coeff, r.finite_t_norm, r.margin, r.verdict, r.status
                );
            }
            if let Some(u) = rep.uniform {
                println!("uniform: max eps_norm {:.6} <= ceiling {:.6}: {}", u.max_eps_norm, u.ceiling, u.ok);
            }
            Ok(rep.all_verdicts)
        }
        Command::Verify { common, write } => {
            let cfg = load(&common)?;
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(true);
            }
            let rep = harness::verify(&cfg)?;
            for c in &rep.checks {
                println!("{:<8} {:<22} {}", c.status.label(), c.name, c.detail);
            }
            if write {
                let dir = cfg.resolved_output_dir(common.output_root.as_deref());
                std::fs::create_dir_all(&dir)?;
                harness::io::write_json(&dir.join("verify.json"), &rep)?;
            }
            Ok(rep.passed())
        }
        Command::Report { input } => {
            if !input.is_dir() {
                bail!("{} is not a directory", input.display());
            }
            let out = harness::report(&input)?;
            for p in &out.written {
                println!("{}", p.display());
            }
            Ok(out.mismatches == 0)
        }
    }
}
