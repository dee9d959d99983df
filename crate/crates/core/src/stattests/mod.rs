//! Stationarity and causality tests plus the Granger-based feature ranking.

mod adf;
mod features;
mod granger;

pub use adf::{adf_test, default_max_lag, ensure_stationary, mackinnon_p_value, AdfResult, Stationary};
pub use features::{select_features, write_ranking_csv, FeatureConfig, FeatureRank, FeatureSelection};
pub use granger::{granger_test, GrangerResult, LagTest};
