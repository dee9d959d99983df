//! File-based pipeline stages behind the `signalcast` command.
//!
//! Each stage reads the artifacts of the stages before it from the output
//! directory and writes its own, plus a `manifest.json`, into a
//! subdirectory named after the stage.

mod artifacts;
mod config;
mod stages;

use std::fmt;
use std::str::FromStr;

pub use artifacts::{read_json, read_jsonl, write_atomic, write_json, FORMAT_VERSION};
pub use config::{GridSettings, LdaSettings, NormalizerKind, PipelineConfig, SentimentKind, TopicCount, VarSettings};
pub use stages::{LabeledDoc, Runner, Selection};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
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

impl Stage {
    /// Execution order of `pipeline`.
    pub const SEQUENCE: [Stage; 11] = [
        Stage::Ingest,
        Stage::Topics,
        Stage::BuildSeries,
        Stage::Adf,
        Stage::Granger,
        Stage::GridSearch,
        Stage::FitArima,
        Stage::Forecast,
        Stage::FitVar,
        Stage::Backtest,
        Stage::EmitPlots,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Topics => "topics",
            Stage::BuildSeries => "build-series",
            Stage::Adf => "adf",
            Stage::Granger => "granger",
            Stage::GridSearch => "grid-search",
            Stage::FitArima => "fit-arima",
            Stage::Forecast => "forecast",
            Stage::FitVar => "fit-var",
            Stage::Backtest => "backtest",
            Stage::EmitPlots => "emit-plots",
            Stage::Pipeline => "pipeline",
        }
    }

    /// Fixed offset added to the pipeline seed for this stage.
    pub fn seed_offset(self) -> u64 {
        match self {
            Stage::Topics => 1,
            Stage::GridSearch | Stage::FitArima | Stage::Backtest => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Stage::SEQUENCE
            .iter()
            .chain(&[Stage::Pipeline])
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage `{s}`")))
    }
}
