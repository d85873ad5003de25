use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lindblad_core::bench::{self, ExperimentConfig};
use lindblad_core::stability::{region_scan, Axis};
use lindblad_core::SchemeId;

#[derive(Parser)]
#[command(name = "lindblad", version, about = "Positivity-preserving Lindblad integrators and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step-by-step diagnostics against the exact solution (needs `dt` or `N`).
    Simulate(ConfigArgs),
    /// Terminal error versus step count with fitted convergence slopes.
    Converge {
        #[command(flatten)]
        args: ConfigArgs,
        /// Also write the slope fits as CSV.
        #[arg(long)]
        slopes: Option<PathBuf>,
    },
    /// |<sX>| and |<sY>| per step for a two-level model at fixed step size.
    Decay(ConfigArgs),
    /// Worst terminal error next to the global error bound; fails on a violation.
    Audit(ConfigArgs),
    /// Spectral radius of the dephasing test problem over a grid of z = (a + ib) dt.
    Stability {
        #[arg(long)]
        scheme: SchemeId,
        /// Real-axis grid as start:end:step.
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary-axis grid as start:end:step.
        #[arg(long, allow_hyphen_values = true)]
        im: String,
        /// Also iterate each point and classify the observed decay.
        #[arg(long)]
        empirical: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo unraveling of a Kraus scheme (needs `dt` or `N`).
    Unravel(ConfigArgs),
    /// Built-in model kinds.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
}

#[derive(Subcommand)]
enum ModelsAction {
    /// Print every model kind with a JSON example.
    List,
}

#[derive(clap::Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output` in the config; `-` writes to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        let cfg = ExperimentConfig::load(&self.config)?;
        let out = self.output.clone().or_else(|| cfg.output.clone());
        Ok((cfg, out))
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, out) = args.load()?;
            let rows = bench::simulate(&cfg)?;
            bench::write_simulation_csv(sink(out.as_deref())?, &rows)?;
        }
        Command::Converge { args, slopes } => {
            let (cfg, out) = args.load()?;
            let report = bench::convergence_experiment(&cfg)?;
            bench::write_convergence_csv(sink(out.as_deref())?, &report.rows)?;
            for f in &report.slopes {
                eprintln!(
                    "{}: slope {:.4} fitted on N in [{}, {}] ({} points)",
                    f.scheme, f.slope, f.n_lo, f.n_hi, f.points
                );
            }
            if let Some(path) = slopes {
                bench::write_slopes_csv(sink(Some(&path))?, &report.slopes)?;
            }
        }
        Command::Decay(args) => {
            let (cfg, out) = args.load()?;
            let rows = bench::observable_decay_experiment(&cfg)?;
            bench::write_decay_csv(sink(out.as_deref())?, &rows)?;
        }
        Command::Audit(args) => {
            let (cfg, out) = args.load()?;
            let rows = bench::audit_rows(&cfg)?;
            bench::write_audit_csv(sink(out.as_deref())?, &rows)?;
            let bad: Vec<_> = rows.iter().filter(|r| r.violated()).collect();
            if !bad.is_empty() {
                for r in &bad {
                    eprintln!(
                        "violation: {} N={} error {:e} > bound {:e}",
                        r.scheme, r.n_steps, r.measured_error, r.global_bound
                    );
                }
                bail!("{} bound violation(s)", bad.len());
            }
        }
        Command::Stability { scheme, re, im, empirical, output } => {
            let points = region_scan(scheme, &Axis::parse(&re)?, &Axis::parse(&im)?, empirical)?;
            bench::write_stability_csv(sink(output.as_deref())?, &points)?;
        }
        Command::Unravel(args) => {
            let (cfg, out) = args.load()?;
            let report = bench::unravel_experiment(&cfg)?;
            bench::write_unravel_csv(sink(out.as_deref())?, &report)?;
            eprintln!(
                "{} trajectories, {} steps of {}: max |estimate - reference| / std_err = {:.3}",
                report.estimate.n_traj, report.n_steps, report.scheme, report.max_z_score
            );
        }
        Command::Models { action: ModelsAction::List } => {
            for (kind, description, example) in bench::model_catalog() {
                println!("{kind}\n  {description}\n  {example}");
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
