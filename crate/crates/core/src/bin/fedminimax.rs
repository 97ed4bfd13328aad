use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedminimax::algorithms::{theorem_schedule_ncc, theorem_schedule_ncpl};
use fedminimax::harness::{
    emit_plots_from_rows, init_thread_pool, presets, read_summary, run_experiment, run_sweep, PlotKind, SUMMARY_CSV,
};
use fedminimax::{Error, Result};

/// Federated minimax optimization simulator.
#[derive(Parser)]
#[command(name = "fedminimax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (a TOML path or a preset name).
    Run {
        config: String,
        /// Output directory (defaults to the config's `output`, then `runs/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep config (a TOML path or a preset name).
    Sweep {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redraw plots from the `summary.csv` files under a run directory.
    Plot { dir: PathBuf },
    /// Check a config and print it fully resolved.
    Validate { config: String },
    /// Print theorem hyperparameters.
    Schedule {
        #[command(subcommand)]
        kind: ScheduleKind,
    },
    /// List the shipped presets.
    Presets,
}

#[derive(Subcommand)]
enum ScheduleKind {
    /// FedSGDA-M schedule for NC-PL problems.
    Ncpl {
        #[arg(long)]
        kappa: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long = "T0")]
        t0: f64,
    },
    /// FedSGDA+ schedule for NC-C problems.
    Ncc {
        #[arg(long = "L")]
        l: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "T")]
        t: usize,
    },
}

fn load(config: &str) -> Result<presets::Preset> {
    let path = Path::new(config);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        presets::parse(&text, config)
    } else if presets::source(config).is_some() {
        presets::load(config)
    } else {
        Err(Error::config(config, "no such file or preset"))
    }
}

fn out_dir(explicit: Option<PathBuf>, configured: Option<&PathBuf>, name: &str) -> PathBuf {
    explicit
        .or_else(|| configured.cloned())
        .unwrap_or_else(|| Path::new("runs").join(if name.is_empty() { "experiment" } else { name }))
}

fn plot_dir(dir: &Path) -> Result<usize> {
    let mut count = 0;
    let summary = dir.join(SUMMARY_CSV);
    if summary.exists() {
        let rows = read_summary(std::fs::File::open(&summary)?)?;
        for kind in PlotKind::ALL {
            let files = emit_plots_from_rows(&rows, kind, dir)?;
            println!("{}", files.svg.display());
        }
        count += 1;
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        count += plot_dir(&sub)?;
    }
    Ok(count)
}

fn execute(cli: Cli) -> Result<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Run { config, out } => {
            let presets::Preset::Experiment(cfg) = load(&config)? else {
                return Err(Error::config(config, "this is a sweep config; use `sweep`"));
            };
            let dir = out_dir(out, cfg.output.as_ref(), &cfg.name);
            let output = run_experiment(&cfg, Some(&dir))?;
            println!(
                "{} trajectories written to {}",
                output.trajectories.len(),
                dir.display()
            );
            plot_dir(&dir)?;
        }
        Command::Sweep { config, out } => {
            let presets::Preset::Sweep(spec) = load(&config)? else {
                return Err(Error::config(config, "this is a single experiment; use `run`"));
            };
            let dir = out_dir(out, spec.base.output.as_ref(), &spec.base.name);
            let output = run_sweep(&spec, Some(&dir))?;
            println!("{} cells written to {}", output.cells.len(), dir.display());
            print!("{}", String::from_utf8_lossy(&output.csv));
        }
        Command::Plot { dir } => {
            if plot_dir(&dir)? == 0 {
                return Err(Error::InvalidArgument(format!(
                    "no {SUMMARY_CSV} under {}",
                    dir.display()
                )));
            }
        }
        Command::Validate { config } => match load(&config)? {
            presets::Preset::Experiment(cfg) => {
                let problem = cfg.problem.build()?;
                print!("{}", cfg.resolve(problem.as_ref())?.to_toml());
            }
            presets::Preset::Sweep(spec) => {
                for point in spec.points() {
                    let cfg = spec.cell_config(&point)?;
                    let problem = cfg.problem.build()?;
                    cfg.resolve(problem.as_ref())?;
                }
                println!("sweep ok: {} cells", spec.points().len());
            }
        },
        Command::Schedule { kind } => {
            let text = match kind {
                ScheduleKind::Ncpl { kappa, l, n, b, nu, t0 } => {
                    toml::to_string(&theorem_schedule_ncpl(kappa, l, n, b, nu, t0)?)
                }
                ScheduleKind::Ncc { l, n, t } => toml::to_string(&theorem_schedule_ncc(l, n, t)?),
            };
            print!("{}", text.expect("schedules serialize to TOML"));
        }
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
