use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adf::ensure_stationary;
use super::granger::granger_test;
use crate::error::{Error, Result};
use crate::sentiment::label_name;
use crate::series::ComponentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub max_lag: usize,
    pub alpha: f64,
    pub min_count: usize,
    pub max_d: usize,
    /// Significance used by the stationarity loop.
    pub adf_alpha: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            max_lag: 14,
            alpha: 0.05,
            min_count: 10,
            max_d: 2,
            adf_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub name: String,
    /// Position of the component in the input.
    pub index: usize,
    pub significant_count: usize,
    /// Differencing order applied to the component.
    pub d: usize,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    /// Components at or above `min_count`, best first.
    pub ranked: Vec<FeatureRank>,
    /// Every tested component in the same order, before the cut.
    pub all: Vec<FeatureRank>,
    /// Components that could not be tested, with the reason.
    pub skipped: Vec<(String, String)>,
    pub y_d: usize,
}

/// Difference every component and `y` to stationarity (each to its own
/// order), Granger-test each component against `y` and rank by the number
/// of significant lags. Components that are constant, stay non-stationary
/// or give a singular regression are skipped and reported.
pub fn select_features(components: &[(String, Vec<f64>)], y: &[f64], config: &FeatureConfig) -> Result<FeatureSelection> {
    for (name, c) in components {
        if c.len() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "component {name} has {} values, y has {}",
                c.len(),
                y.len()
            )));
        }
    }
    let ys = ensure_stationary(y, config.max_d, config.adf_alpha)?;

    let outcomes: Vec<std::result::Result<FeatureRank, String>> = components
        .par_iter()
        .enumerate()
        .map(|(index, (name, c))| {
            let xs = ensure_stationary(c, config.max_d, config.adf_alpha).map_err(|e| e.to_string())?;
            let m = xs.series.len().min(ys.series.len());
            let x = &xs.series[xs.series.len() - m..];
            let yy = &ys.series[ys.series.len() - m..];
            let g = granger_test(x, yy, config.max_lag, config.alpha).map_err(|e| e.to_string())?;
            Ok(FeatureRank {
                name: name.clone(),
                index,
                significant_count: g.significant_count,
                d: xs.d,
                p_values: g.p_values(),
            })
        })
        .collect();

    let mut all = Vec::new();
    let mut skipped = Vec::new();
    for ((name, _), outcome) in components.iter().zip(outcomes) {
        match outcome {
            Ok(rank) => all.push(rank),
            Err(reason) => {
                log::warn!("skipping {name}: {reason}");
                skipped.push((name.clone(), reason));
            }
        }
    }
    all.sort_by(|a, b| b.significant_count.cmp(&a.significant_count).then(a.index.cmp(&b.index)));
    let ranked = all
        .iter()
        .filter(|r| r.significant_count >= config.min_count)
        .cloned()
        .collect();
    Ok(FeatureSelection {
        ranked,
        all,
        skipped,
        y_d: ys.d,
    })
}

/// `component,topic,sentiment,significant_count,p_values`, p-values joined
/// with `;`. Topic and sentiment are blank for non-tensor series.
pub fn write_ranking_csv(path: &Path, ranks: &[FeatureRank]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["component", "topic", "sentiment", "significant_count", "p_values"])?;
    for r in ranks {
        let (topic, sentiment) = match r.name.parse::<ComponentId>() {
            Ok(id) => (id.topic.to_string(), label_name(id.sentiment).to_string()),
            Err(_) => (String::new(), String::new()),
        };
        let p = r.p_values.iter().map(|p| format!("{p:.6e}")).collect::<Vec<_>>().join(";");
        w.write_record([r.name.as_str(), &topic, &sentiment, &r.significant_count.to_string(), &p])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
