use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paratransfer::config::{load_file, merge, resolve};
use paratransfer::{execute, init_workers, ExperimentKind, Failure, Settings};

/// Parallel state transfer on programmable hypercube and complete-graph networks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// Mode propagator K(t) of a network document.
    Evolve(Common),
    /// Per-pair fidelities of one subcube split over an η grid.
    FidelitySweep(Common),
    /// Mean qubit fidelity and oscillator bound against η for several d.
    Figure2(Common),
    /// Distribution rate against network size for the MP, QC and complete schemes.
    Figure3(Common),
    /// Rounds and transfers of a routing schedule.
    Schedule(Common),
    /// Per-round and total distribution rate of one schedule.
    Rate(Common),
    /// Runs the experiment named by the config's `experiment` key.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, common) = match cli.command {
        Command::Evolve(c) => (Some(ExperimentKind::Evolve), c),
        Command::FidelitySweep(c) => (Some(ExperimentKind::FidelitySweep), c),
        Command::Figure2(c) => (Some(ExperimentKind::Figure2), c),
        Command::Figure3(c) => (Some(ExperimentKind::Figure3), c),
        Command::Schedule(c) => (Some(ExperimentKind::Schedule), c),
        Command::Rate(c) => (Some(ExperimentKind::Rate), c),
        Command::Run { config } => (
            None,
            Common {
                config: Some(config),
                settings: Settings::default(),
            },
        ),
    };
    let file = common.config.as_deref().map(load_file).transpose()?;
    let (settings, origin) = merge(common.settings, file);
    let kind = match kind {
        Some(k) => k,
        None => {
            let name = settings
                .experiment
                .as_deref()
                .ok_or_else(|| Failure::config(format!("{}: experiment is required", origin.anchor("experiment"))))?;
            ExperimentKind::parse(name).ok_or_else(|| {
                Failure::config(format!("{}: unknown experiment {name:?}", origin.anchor("experiment")))
            })?
        }
    };
    let job = resolve(kind, &settings, &origin)?;
    init_workers()?;
    execute(&job)
}
