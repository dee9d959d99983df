use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use signalcast::pipeline::{PipelineConfig, Runner, Stage};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Ingest,
    Topics,
    BuildSeries,
    Adf,
    Granger,
    GridSearch,
    FitArima,
    Forecast,
    FitVar,
    Backtest,
    EmitPlots,
    Pipeline,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Stage {
        match c {
            Command::Ingest => Stage::Ingest,
            Command::Topics => Stage::Topics,
            Command::BuildSeries => Stage::BuildSeries,
            Command::Adf => Stage::Adf,
            Command::Granger => Stage::Granger,
            Command::GridSearch => Stage::GridSearch,
            Command::FitArima => Stage::FitArima,
            Command::Forecast => Stage::Forecast,
            Command::FitVar => Stage::FitVar,
            Command::Backtest => Stage::Backtest,
            Command::EmitPlots => Stage::EmitPlots,
            Command::Pipeline => Stage::Pipeline,
        }
    }
}

/// Forecast case counts from microblog topic and sentiment signals.
#[derive(Debug, Parser)]
#[command(name = "signalcast", version)]
struct Cli {
    /// Stage to run; `pipeline` runs every stage in order.
    #[arg(value_enum)]
    command: Command,
    /// JSON pipeline configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("SIGNALCAST_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
    let result = PipelineConfig::load_with(&cli.config, cli.seed).and_then(|mut cfg| {
        if let Some(out) = cli.out {
            cfg.output_dir = out;
        }
        Runner::new(cfg)?.run(cli.command.into())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
