//! Command-line front end for `l2gcn`: argument parsing, run configuration,
//! the `train`/`search`/`bench`/`probe`/`gen-sbm` commands and their
//! artifacts.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use config::{
    apply_controller, apply_probe, resolve, CommonArgs, ControllerArgs, ProbeArgs, SbmArgs, TrainerKind, TrainingArgs,
};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "l2gcn",
    version,
    about = "Layer-wise GCN training, controller search, benchmarks and WL probe"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write metrics.json, loss_curve.csv and model.json.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sbm: SbmArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long, value_enum)]
        trainer: Option<TrainerKind>,
    },
    /// Learn a stopping policy, deploy it, and train with the found schedule.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sbm: SbmArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[command(flatten)]
        controller: ControllerArgs,
    },
    /// Run several trainers on the same data and compare their costs.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sbm: SbmArgs,
        #[command(flatten)]
        training: TrainingArgs,
        /// Trainers to compare; the first is the ratio reference.
        #[arg(long, value_enum, value_delimiter = ',')]
        trainers: Option<Vec<TrainerKind>>,
        /// Add a process peak-RSS column.
        #[arg(long)]
        rss: bool,
    },
    /// Estimate model capacity per depth and write capacity.csv.
    Probe {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Only run the known-answer WL suite.
        #[arg(long)]
        wl_selftest: bool,
    },
    /// Write a synthetic SBM dataset directory.
    GenSbm {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sbm: SbmArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train { .. } => "train",
            Command::Search { .. } => "search",
            Command::Bench { .. } => "bench",
            Command::Probe { .. } => "probe",
            Command::GenSbm { .. } => "gen-sbm",
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            common,
            sbm,
            training,
            trainer,
        } => {
            let mut cfg = resolve(common, Some(sbm), Some(training))?;
            if let Some(t) = trainer {
                cfg.trainer = *t;
            }
            commands::cmd_train(&cfg).map(drop)
        }
        Command::Search {
            common,
            sbm,
            training,
            controller,
        } => {
            let mut cfg = resolve(common, Some(sbm), Some(training))?;
            apply_controller(&mut cfg, controller);
            commands::cmd_search(&cfg).map(drop)
        }
        Command::Bench {
            common,
            sbm,
            training,
            trainers,
            rss,
        } => {
            let mut cfg = resolve(common, Some(sbm), Some(training))?;
            if let Some(t) = trainers {
                cfg.bench_trainers = t.clone();
            }
            cfg.sample_rss |= *rss;
            commands::cmd_bench(&cfg).map(drop)
        }
        Command::Probe {
            common,
            probe,
            wl_selftest,
        } => {
            let mut cfg = resolve(common, None, None)?;
            apply_probe(&mut cfg, probe, common.seed);
            if *wl_selftest {
                commands::cmd_wl_selftest(&cfg).map(drop)
            } else {
                commands::cmd_probe(&cfg).map(drop)
            }
        }
        Command::GenSbm { common, sbm } => {
            let cfg = resolve(common, Some(sbm), None)?;
            commands::cmd_gen_sbm(&cfg).map(drop)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr as one JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json(None));
            return err.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json(Some(cli.command.name())));
            e.exit_code()
        }
    }
}
