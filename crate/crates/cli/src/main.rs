use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poplift::pipeline::{
    load_config, run_pipeline_with, run_stage, with_jobs, PipelineConfig, PipelineError, Stage,
};
use poplift::recommenders::Algorithm;

/// Train collaborative-filtering recommenders and audit their lists for
/// popularity lift and miscalibration across user cohorts.
#[derive(Debug, Parser)]
#[command(name = "poplift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage and write run_manifest.json
    Run(Options),
    /// Split the ratings into train.csv and test.csv
    Split(Options),
    /// Fit the selected algorithms on train.csv
    Train(Options),
    /// Write top-N lists for every training user
    Recommend(Options),
    /// Write per-user audit CSVs from recommendation files
    Audit(Options),
    /// Write cohort, significance and genre-frequency reports
    Report(Options),
}

#[derive(Debug, Args)]
struct Options {
    /// Pipeline config file (TOML)
    #[arg(long, short)]
    config: PathBuf,
    /// Override the split seed and every model seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Restrict to these algorithms (repeatable)
    #[arg(long = "algo", value_name = "NAME")]
    algorithms: Vec<Algorithm>,
}

impl Options {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut config = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            config.override_seed(seed);
        }
        if let Some(out) = &self.out {
            config.output = out.clone();
        }
        if !self.algorithms.is_empty() {
            config.override_algorithms(self.algorithms.clone())?;
        }
        Ok(config)
    }
}

fn report_notes(stage: Stage, notes: &[String]) {
    for note in notes {
        eprintln!("[{stage}] {note}");
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    let (stage, options) = match command {
        Command::Run(o) => (None, o),
        Command::Split(o) => (Some(Stage::Split), o),
        Command::Train(o) => (Some(Stage::Train), o),
        Command::Recommend(o) => (Some(Stage::Recommend), o),
        Command::Audit(o) => (Some(Stage::Audit), o),
        Command::Report(o) => (Some(Stage::Report), o),
    };
    let config = options.config()?;
    with_jobs(options.jobs, || match stage {
        Some(stage) => {
            report_notes(stage, &run_stage(stage, &config)?);
            Ok(())
        }
        None => {
            let manifest = run_pipeline_with(&config, |timing| {
                eprintln!("[{}] done in {:.2}s", timing.stage, timing.seconds);
                for note in &timing.notes {
                    eprintln!("[{}] {note}", timing.stage);
                }
            })?;
            eprintln!(
                "finished in {:.2}s; outputs in {}",
                manifest.total_seconds,
                config.output.display()
            );
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
