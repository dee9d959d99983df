//! Forecasting daily case counts from microblog discourse.
//!
//! The crate turns a corpus of geotagged posts into a date × topic × sentiment
//! count tensor, ranks its components by Granger causality against a target
//! series, and fits ARIMA / ARIMAX / VAR models with backtest metrics.
//!
//! Modules follow the pipeline order:
//!
//! - [`ingest`]: CSV parsing, selection rules, cleaning, bigram merging
//! - [`topics`]: vocabulary, collapsed-Gibbs LDA, c_v coherence, k selection
//! - [`sentiment`]: pluggable three-class sentiment providers
//! - [`series`]: count tensor, lagged dataset, differencing, trend rescaling
//! - [`stattests`]: ADF, Granger F-tests, feature ranking
//! - [`arima`]: CSS estimation, order grid search, interval forecasts
//! - [`var`]: VAR estimation, order selection, forecasting
//! - [`eval`]: RMSE / MAPE / R2 and the train/test backtest
//! - [`pipeline`]: file-based stages behind the `signalcast` binary

pub mod arima;
pub mod error;
pub mod eval;
pub mod ingest;
mod linalg;
pub mod pipeline;
pub mod sentiment;
pub mod series;
pub mod stattests;
pub mod topics;
pub mod var;

pub use error::{Error, Result};
pub use linalg::{ols, OlsFit};
