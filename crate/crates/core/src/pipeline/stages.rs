use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, FixedOffset, NaiveDate};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::artifacts::{read_json, read_jsonl, require, write_atomic, write_json, write_jsonl, Manifest, FORMAT_VERSION};
use super::config::{NormalizerKind, PipelineConfig, SentimentKind, TopicCount};
use super::Stage;
use crate::arima::{
    fit_arima, forecast, grid_search, residual_acf, write_forecast_csv, ArimaFit, ArimaSpec, FitOptions, GridSearch,
};
use crate::error::{Error, Result};
use crate::eval::{backtest, Backtest, BacktestModel};
use crate::ingest::{
    detect_and_merge_bigrams, parse_corpus, select_tweets_counted, write_rejections, Cleaner, CleanDoc, IdentityNormalizer,
    Normalizer, ParseOptions, StopwordList, SuffixStripper,
};
use crate::sentiment::{Lexicon, PassThrough, SentimentProvider, Sidecar};
use crate::series::{
    build_tensor, difference, lag_features, volumetric_series, CaseSeries, ComponentId, DocLabel, LaggedDataset,
    SeriesTensor, VolumeMode,
};
use crate::stattests::{ensure_stationary, select_features, write_ranking_csv, FeatureConfig};
use crate::topics::{assign_topic, build_vocabulary, coherence_cv, fit_lda, select_k, KScore, LdaConfig, SelectConfig};
use crate::var::{forecast_var, select_var_order, write_var_forecast_csv, VarFit};

/// A cleaned document with its sentiment label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub tweet_id: String,
    pub date: NaiveDate,
    pub tokens: Vec<String>,
    pub sentiment: u8,
}

/// Outcome of the Granger stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected components, best first.
    pub selected: Vec<String>,
    pub counts: Vec<usize>,
    /// Differencing order that made the response stationary.
    pub y_d: usize,
    pub skipped: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BestSpecs {
    arima: ArimaSpec,
    arimax: Option<ArimaSpec>,
    exog_columns: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VarArtifact {
    fit: VarFit,
    /// Differencing applied to every variable before fitting.
    d: usize,
}

pub struct Runner {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Runner {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.output_dir.clone();
        Ok(Runner { cfg, out })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    fn path(&self, stage: &str, file: &str) -> PathBuf {
        self.out.join(stage).join(file)
    }

    fn seed(&self, stage: Stage) -> u64 {
        self.cfg.seed.wrapping_add(stage.seed_offset())
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        write_json(&self.out.join("resolved_config.json"), &self.cfg)?;
        match stage {
            Stage::Pipeline => {
                for s in Stage::SEQUENCE {
                    self.run_one(s)?;
                }
                Ok(())
            }
            s => self.run_one(s),
        }
    }

    fn run_one(&self, stage: Stage) -> Result<()> {
        log::info!("stage {stage}");
        let (inputs, outputs, summary) = match stage {
            Stage::Ingest => self.ingest()?,
            Stage::Topics => self.topics()?,
            Stage::BuildSeries => self.build_series()?,
            Stage::Adf => self.adf()?,
            Stage::Granger => self.granger()?,
            Stage::GridSearch => self.grid_search()?,
            Stage::FitArima => self.fit_arima()?,
            Stage::Forecast => self.forecast()?,
            Stage::FitVar => self.fit_var()?,
            Stage::Backtest => self.backtest()?,
            Stage::EmitPlots => self.emit_plots()?,
            Stage::Pipeline => unreachable!("expanded by run"),
        };
        let show = |ps: Vec<PathBuf>| -> Vec<String> { ps.iter().map(|p| p.display().to_string()).collect() };
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            stage: stage.name(),
            seed: self.seed(stage),
            inputs: show(inputs),
            outputs: show(outputs),
            summary,
        };
        write_json(&self.path(stage.name(), "manifest.json"), &manifest)
    }

    // ---- ingest -------------------------------------------------------

    fn provider(&self) -> Result<Box<dyn SentimentProvider>> {
        Ok(match self.cfg.sentiment {
            SentimentKind::Passthrough => Box::new(PassThrough),
            SentimentKind::Lexicon => match &self.cfg.lexicon {
                Some(p) => Box::new(Lexicon::from_file(p)?),
                None => Box::new(Lexicon::english()),
            },
            SentimentKind::Sidecar => {
                let path = self.cfg.sentiment_labels.as_ref().expect("validated");
                Box::new(Sidecar::from_csv(path)?)
            }
        })
    }

    fn ingest(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let parsed = parse_corpus(
            &cfg.tweets,
            &ParseOptions {
                window: Some(cfg.window),
                ..ParseOptions::default()
            },
        )?;
        let (selected, counts) = select_tweets_counted(&parsed.records, cfg.min_terms);
        let provider = self.provider()?;
        let labels: HashMap<String, u8> = selected
            .par_iter()
            .map(|r| provider.classify(r).map(|l| (r.id.clone(), l.label)))
            .collect::<Result<_>>()?;

        let stopwords = match &cfg.stopwords {
            Some(p) => StopwordList::from_file(p)?,
            None => StopwordList::english(),
        };
        let normalizer: Box<dyn Normalizer> = match cfg.normalizer {
            NormalizerKind::Identity => Box::new(IdentityNormalizer),
            NormalizerKind::Suffix => Box::new(SuffixStripper),
        };
        let cleaner = Cleaner::new(stopwords, normalizer, FixedOffset::east_opt(0).unwrap());
        let (docs, empty) = cleaner.clean_all(&selected);
        let (bigrams, docs) = detect_and_merge_bigrams(&docs, cfg.bigram_min_freq)?;
        let labeled: Vec<LabeledDoc> = docs
            .into_iter()
            .map(|d| LabeledDoc {
                sentiment: labels[&d.tweet_id],
                tweet_id: d.tweet_id,
                date: d.date,
                tokens: d.tokens,
            })
            .collect();
        if labeled.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let docs_path = self.path("ingest", "docs.jsonl");
        let rej_path = self.path("ingest", "rejections.csv");
        write_jsonl(&docs_path, &labeled)?;
        write_atomic(&rej_path, |tmp| write_rejections(tmp, &parsed.rejections))?;
        let summary = json!({
            "parsed": parsed.records.len(),
            "rejected_rows": parsed.rejections.len(),
            "duplicates": counts.duplicates,
            "too_few_terms": counts.too_few_terms,
            "not_geotagged": counts.not_geotagged,
            "empty_after_cleaning": empty.len(),
            "bigrams": bigrams.len(),
            "documents": labeled.len(),
        });
        Ok((vec![cfg.tweets.clone()], vec![docs_path, rej_path], summary))
    }

    // ---- topics -------------------------------------------------------

    fn topics(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let docs_path = require(&self.path("ingest", "docs.jsonl"), "ingest")?;
        let labeled: Vec<LabeledDoc> = read_jsonl(&docs_path)?;
        let docs: Vec<CleanDoc> = labeled
            .iter()
            .map(|d| CleanDoc {
                tweet_id: d.tweet_id.clone(),
                date: d.date,
                tokens: d.tokens.clone(),
            })
            .collect();
        let build = build_vocabulary(&docs, cfg.vocab_min_freq)?;
        let seed = self.seed(Stage::Topics);
        let top_n = cfg.lda.top_n.min(build.vocab.len());

        let (model, table) = match cfg.topics {
            TopicCount::Fixed(k) => {
                let lda = LdaConfig {
                    k,
                    alpha: cfg.lda.alpha,
                    beta: cfg.lda.beta,
                    iterations: cfg.lda.iterations,
                    seed,
                };
                let model = fit_lda(&build.vocab, &build.corpus, &lda)?;
                let score = coherence_cv(&model, &docs, top_n, cfg.lda.coherence_window)?;
                let table = vec![KScore {
                    k,
                    mean: score.value,
                    per_seed: vec![score.value],
                }];
                (model, table)
            }
            TopicCount::Auto(_) => {
                let sel = select_k(
                    &build.vocab,
                    &build.corpus,
                    &docs,
                    &SelectConfig {
                        k_min: cfg.k_range.0,
                        k_max: cfg.k_range.1,
                        per_k_seeds: cfg.lda.per_k_seeds,
                        alpha: cfg.lda.alpha,
                        beta: cfg.lda.beta,
                        iterations: cfg.lda.iterations,
                        seed,
                        top_n,
                        window: cfg.lda.coherence_window,
                    },
                )?;
                (sel.best, sel.table)
            }
        };

        let assigned: Vec<Option<(usize, f64)>> = docs
            .par_iter()
            .map(|d| match assign_topic(&model, d) {
                Ok(a) => Ok(Some((a.topic, a.probabilities[a.topic]))),
                Err(Error::NoKnownTokens) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;

        let assign_path = self.path("topics", "assignments.csv");
        let mut unassigned = 0;
        write_atomic(&assign_path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["tweet_id", "date", "topic", "sentiment", "probability"])?;
            for (d, a) in labeled.iter().zip(&assigned) {
                match a {
                    Some((t, p)) => w.write_record([
                        d.tweet_id.clone(),
                        d.date.to_string(),
                        t.to_string(),
                        d.sentiment.to_string(),
                        format!("{p:.6}"),
                    ])?,
                    None => unassigned += 1,
                }
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;

        let coh_path = self.path("topics", "coherence.csv");
        write_atomic(&coh_path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["k", "mean", "per_seed"])?;
            for s in &table {
                let per: Vec<String> = s.per_seed.iter().map(|v| format!("{v:.6}")).collect();
                w.write_record([s.k.to_string(), format!("{:.6}", s.mean), per.join(";")])?;
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;

        let words_path = self.path("topics", "top_words.csv");
        write_atomic(&words_path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["topic", "rank", "word", "weight"])?;
            for t in 0..model.k {
                let dist = model.topic_word_distribution(t);
                for (rank, id) in model.top_terms(t, top_n).into_iter().enumerate() {
                    w.write_record([
                        t.to_string(),
                        (rank + 1).to_string(),
                        model.vocab.term(id).to_string(),
                        format!("{:.6}", dist[id]),
                    ])?;
                }
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;

        let model_path = self.path("topics", "model.json");
        write_json(&model_path, &model)?;
        let summary = json!({
            "k": model.k,
            "vocabulary": build.vocab.len(),
            "documents": docs.len(),
            "unassigned": unassigned,
            "coherence": table.iter().map(|s| json!({"k": s.k, "mean": s.mean})).collect::<Vec<_>>(),
        });
        write_json(&self.path("topics", "summary.json"), &summary)?;
        Ok((vec![docs_path], vec![assign_path, coh_path, words_path, model_path], summary))
    }

    // ---- series -------------------------------------------------------

    fn build_series(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let assign_path = require(&self.path("topics", "assignments.csv"), "topics")?;
        let summary_path = require(&self.path("topics", "summary.json"), "topics")?;
        let topic_summary: serde_json::Value = read_json(&summary_path)?;
        let k = topic_summary["k"]
            .as_u64()
            .ok_or_else(|| Error::InvalidInput("topics summary lacks k".into()))? as usize;

        let mut labels = Vec::new();
        let mut rdr = csv::Reader::from_path(&assign_path)?;
        for row in rdr.records() {
            let row = row?;
            let parse = |i: usize| {
                row[i]
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad assignment field `{}`", &row[i])))
            };
            labels.push(DocLabel {
                date: crate::series::parse_date(&row[1])?,
                topic: parse(2)?,
                sentiment: parse(3)? as u8,
            });
        }
        let built = build_tensor(&labels, cfg.window, k)?;
        let cases = CaseSeries::read_csv(&cfg.cases)?.restrict(cfg.window)?;
        let lagged = lag_features(&built.tensor, &cases, cfg.max_lag)?;
        let overall = volumetric_series(&labels, cfg.window, VolumeMode::Overall);

        let tensor_path = self.path("build-series", "tensor.csv");
        let cases_path = self.path("build-series", "cases.csv");
        let lagged_path = self.path("build-series", "lagged.csv");
        let overall_path = self.path("build-series", "overall_posts.csv");
        write_atomic(&tensor_path, |tmp| built.tensor.write_csv(tmp))?;
        write_atomic(&cases_path, |tmp| cases.write_csv(tmp, "new_cases"))?;
        write_atomic(&lagged_path, |tmp| lagged.write_csv(tmp))?;
        write_atomic(&overall_path, |tmp| overall.write_csv(tmp, "posts"))?;
        let summary = json!({
            "days": built.tensor.days(),
            "components": built.tensor.component_ids().len(),
            "lagged_rows": lagged.len(),
            "lagged_columns": lagged.names.len(),
        });
        Ok((
            vec![assign_path, cfg.cases.clone()],
            vec![tensor_path, cases_path, lagged_path, overall_path],
            summary,
        ))
    }

    /// Tensor components and response up to and including the split date.
    fn training_series(&self) -> Result<(Vec<(String, Vec<f64>)>, Vec<f64>, Vec<PathBuf>)> {
        let tensor_path = require(&self.path("build-series", "tensor.csv"), "build-series")?;
        let cases_path = require(&self.path("build-series", "cases.csv"), "build-series")?;
        let tensor = SeriesTensor::read_csv(&tensor_path)?;
        let cases = CaseSeries::read_csv(&cases_path)?;
        let n_train = (self.cfg.split_date() - tensor.start).num_days() as usize + 1;
        let comps = tensor
            .components()
            .into_iter()
            .map(|(id, s)| (id.to_string(), s[..n_train].to_vec()))
            .collect();
        Ok((comps, cases.values[..n_train].to_vec(), vec![tensor_path, cases_path]))
    }

    fn adf(&self) -> Result<StageOutput> {
        let (comps, y, inputs) = self.training_series()?;
        let path = self.path("adf", "adf.csv");
        let mut series = vec![("y".to_string(), y)];
        series.extend(comps);
        let rows: Vec<Vec<String>> = series
            .par_iter()
            .map(|(name, s)| match ensure_stationary(s, self.cfg.max_d, self.cfg.alpha) {
                Ok(st) => vec![
                    name.clone(),
                    st.d.to_string(),
                    st.adf.statistic.to_string(),
                    st.adf.p_value.to_string(),
                    st.adf.chosen_lag.to_string(),
                    "true".into(),
                    String::new(),
                ],
                Err(Error::NonStationary { d, adf }) => vec![
                    name.clone(),
                    d.to_string(),
                    adf.statistic.to_string(),
                    adf.p_value.to_string(),
                    adf.chosen_lag.to_string(),
                    "false".into(),
                    "still non-stationary".into(),
                ],
                Err(e) => vec![name.clone(), String::new(), String::new(), String::new(), String::new(), "false".into(), e.to_string()],
            })
            .collect();
        write_atomic(&path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["series", "d", "statistic", "p_value", "chosen_lag", "stationary", "note"])?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;
        let stationary = rows.iter().filter(|r| r[5] == "true").count();
        Ok((inputs, vec![path], json!({"series": rows.len(), "stationary": stationary})))
    }

    fn granger(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let (comps, y, inputs) = self.training_series()?;
        let sel = select_features(
            &comps,
            &y,
            &FeatureConfig {
                max_lag: cfg.max_lag,
                alpha: cfg.alpha,
                min_count: cfg.min_count,
                max_d: cfg.max_d,
                adf_alpha: cfg.alpha,
            },
        )?;
        let rank_path = self.path("granger", "ranking.csv");
        write_atomic(&rank_path, |tmp| write_ranking_csv(tmp, &sel.all))?;
        let selection = Selection {
            selected: sel.ranked.iter().map(|r| r.name.clone()).collect(),
            counts: sel.ranked.iter().map(|r| r.significant_count).collect(),
            y_d: sel.y_d,
            skipped: sel.skipped.clone(),
        };
        let sel_path = self.path("granger", "selection.json");
        write_json(&sel_path, &selection)?;
        let summary = json!({"tested": sel.all.len(), "selected": selection.selected, "y_d": sel.y_d});
        Ok((inputs, vec![rank_path, sel_path], summary))
    }

    // ---- models -------------------------------------------------------

    fn lagged(&self) -> Result<(LaggedDataset, usize, PathBuf)> {
        let path = require(&self.path("build-series", "lagged.csv"), "build-series")?;
        let lagged = LaggedDataset::read_csv(&path, self.cfg.max_lag)?;
        let split = self.cfg.split_date();
        let n_train = lagged.dates.iter().take_while(|d| **d <= split).count();
        if n_train == 0 || n_train == lagged.len() {
            return Err(Error::DateMismatch(format!(
                "split {split} leaves no training or no test rows in the lagged data"
            )));
        }
        Ok((lagged, n_train, path))
    }

    fn selection(&self) -> Result<(Selection, PathBuf)> {
        let path = require(&self.path("granger", "selection.json"), "granger")?;
        Ok((read_json(&path)?, path))
    }

    fn exog_columns(&self, lagged: &LaggedDataset, sel: &Selection) -> Result<Vec<(String, Vec<f64>)>> {
        let all = lagged.component_columns(&sel.selected)?;
        Ok(match &self.cfg.arimax_lags {
            None => all,
            Some(lags) => all
                .into_iter()
                .filter(|(name, _)| lags.iter().any(|l| name.ends_with(&format!("_lag{l}"))))
                .collect(),
        })
    }

    fn fit_options(&self) -> FitOptions {
        let opts = FitOptions {
            seed: self.seed(Stage::FitArima),
            ..FitOptions::default()
        };
        if self.cfg.restarts {
            opts.with_restarts()
        } else {
            opts
        }
    }

    fn grid_search(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let (lagged, n_train, lagged_path) = self.lagged()?;
        let (sel, sel_path) = self.selection()?;
        let y = &lagged.y[..n_train];
        let exog: Vec<(String, Vec<f64>)> = self
            .exog_columns(&lagged, &sel)?
            .into_iter()
            .map(|(n, c)| (n, c[..n_train].to_vec()))
            .collect();
        let opts = self.fit_options();
        let p = cfg.grid.p.0..=cfg.grid.p.1;
        let q = cfg.grid.q.0..=cfg.grid.q.1;

        let arima = grid_search(y, &[], p.clone(), sel.y_d, q.clone(), &opts)?;
        let arima_path = self.path("grid-search", "arima.csv");
        write_atomic(&arima_path, |tmp| write_grid_csv(tmp, &arima))?;
        let mut outputs = vec![arima_path];

        let arimax = if exog.is_empty() {
            log::warn!("no component selected; skipping ARIMAX");
            None
        } else {
            let g = grid_search(y, &exog, p, sel.y_d, q, &opts)?;
            let path = self.path("grid-search", "arimax.csv");
            write_atomic(&path, |tmp| write_grid_csv(tmp, &g))?;
            outputs.push(path);
            Some(g)
        };
        let best = BestSpecs {
            arima: arima.ranked[0].spec,
            arimax: arimax.as_ref().map(|g| g.ranked[0].spec),
            exog_columns: exog.iter().map(|(n, _)| n.clone()).collect(),
        };
        let best_path = self.path("grid-search", "best.json");
        write_json(&best_path, &best)?;
        outputs.push(best_path);
        let summary = json!({
            "arima": {"spec": best.arima.to_string(), "aic": arima.ranked[0].aic, "failures": arima.failures.len()},
            "arimax": arimax.as_ref().map(|g| json!({
                "spec": g.ranked[0].spec.to_string(), "aic": g.ranked[0].aic, "failures": g.failures.len()
            })),
            "exog_columns": best.exog_columns.len(),
        });
        Ok((vec![lagged_path, sel_path], outputs, summary))
    }

    fn best(&self) -> Result<(BestSpecs, PathBuf)> {
        let path = require(&self.path("grid-search", "best.json"), "grid-search")?;
        Ok((read_json(&path)?, path))
    }

    fn exog_by_name(lagged: &LaggedDataset, names: &[String], range: std::ops::Range<usize>) -> Result<Vec<(String, Vec<f64>)>> {
        names
            .iter()
            .map(|n| {
                lagged
                    .column(n)
                    .map(|c| (n.clone(), c[range.clone()].to_vec()))
                    .ok_or_else(|| Error::InvalidInput(format!("lagged data lacks column `{n}`")))
            })
            .collect()
    }

    fn fit_arima(&self) -> Result<StageOutput> {
        let (best, best_path) = self.best()?;
        let (lagged, n_train, lagged_path) = self.lagged()?;
        let y = &lagged.y[..n_train];
        let opts = self.fit_options();
        let mut outputs = Vec::new();
        let mut summary = serde_json::Map::new();
        let mut models = vec![("arima", best.arima, Vec::new())];
        if let Some(spec) = best.arimax {
            models.push(("arimax", spec, Self::exog_by_name(&lagged, &best.exog_columns, 0..n_train)?));
        }
        for (name, spec, exog) in models {
            let fit = fit_arima(y, spec, &exog, &opts)?;
            let acf = residual_acf(&fit, 20.min(fit.n_effective - 1))?;
            let fit_path = self.path("fit-arima", &format!("{name}_fit.json"));
            let report_path = self.path("fit-arima", &format!("{name}_report.json"));
            let acf_path = self.path("fit-arima", &format!("{name}_acf.csv"));
            write_json(&fit_path, &fit)?;
            write_json(&report_path, &fit.report())?;
            write_atomic(&acf_path, |tmp| {
                let mut w = csv::Writer::from_path(tmp)?;
                w.write_record(["lag", "acf", "band", "flagged"])?;
                for (i, r) in acf.acf.iter().enumerate() {
                    let lag = i + 1;
                    w.write_record([lag.to_string(), r.to_string(), acf.band.to_string(), acf.flagged.contains(&lag).to_string()])?;
                }
                w.flush().map_err(|e| Error::io(tmp, e))
            })?;
            summary.insert(
                name.into(),
                json!({"spec": spec.to_string(), "aic": fit.aic, "converged": fit.converged, "acf_flagged": acf.flagged}),
            );
            outputs.extend([fit_path, report_path, acf_path]);
        }
        Ok((vec![best_path, lagged_path], outputs, summary.into()))
    }

    fn forecast(&self) -> Result<StageOutput> {
        let (lagged, n_train, lagged_path) = self.lagged()?;
        let mut inputs = vec![lagged_path];
        let mut outputs = Vec::new();
        let horizon = lagged.len() - n_train;
        let dates = &lagged.dates[n_train..];
        for name in ["arima", "arimax"] {
            let fit_path = self.path("fit-arima", &format!("{name}_fit.json"));
            if name == "arimax" && !fit_path.exists() {
                continue;
            }
            let fit_path = require(&fit_path, "fit-arima")?;
            let fit: ArimaFit = read_json(&fit_path)?;
            let future = Self::exog_by_name(&lagged, &fit.exog_names, n_train..lagged.len())?;
            let f = forecast(&fit, horizon, &self.cfg.significances, &future)?;
            let path = self.path("forecast", &format!("{name}.csv"));
            write_atomic(&path, |tmp| write_forecast_csv(tmp, dates, &f))?;
            inputs.push(fit_path);
            outputs.push(path);
        }
        Ok((inputs, outputs, json!({"horizon": horizon})))
    }

    fn fit_var(&self) -> Result<StageOutput> {
        let cfg = &self.cfg;
        let (lagged, n_train, lagged_path) = self.lagged()?;
        let (sel, sel_path) = self.selection()?;
        let mut names = vec!["y".to_string()];
        let mut cols = vec![lagged.y[..n_train].to_vec()];
        for c in &sel.selected {
            let name = crate::series::lag_name(c, 0);
            let col = lagged
                .column(&name)
                .ok_or_else(|| Error::InvalidInput(format!("lagged data lacks column `{name}`")))?;
            names.push(c.clone());
            cols.push(col[..n_train].to_vec());
        }
        let d = if cfg.var.difference { sel.y_d } else { 0 };
        let diffed: Vec<Vec<f64>> = cols.iter().map(|c| difference(c, d)).collect::<Result<_>>()?;
        let t_len = diffed[0].len();
        let n = names.len();
        // Largest order the common sample can support.
        let feasible = (0..=cfg.var.p_max)
            .rev()
            .find(|&p| t_len > p && t_len - p > n * p + 1)
            .unwrap_or(0);
        if feasible < cfg.var.p_max {
            log::warn!("VAR p_max lowered from {} to {feasible} for {t_len} rows", cfg.var.p_max);
        }
        let data = DMatrix::from_fn(t_len, n, |r, c| diffed[c][r]);
        let sel_var = select_var_order(&data, feasible, &names)?;
        let mut values = forecast_var(&sel_var.best, &sel_var.best.last_obs, cfg.var.horizon)?;
        for k in (0..d).rev() {
            for (c, col) in cols.iter().enumerate() {
                let mut last = *difference(col, k)?.last().expect("non-empty");
                for h in 0..values.nrows() {
                    last += values[(h, c)];
                    values[(h, c)] = last;
                }
            }
        }
        let split = cfg.split_date();
        let dates: Vec<NaiveDate> = (1..=cfg.var.horizon).map(|h| split + Duration::days(h as i64)).collect();

        let fit_path = self.path("fit-var", "fit.json");
        let order_path = self.path("fit-var", "order.csv");
        let fc_path = self.path("fit-var", "forecast.csv");
        write_json(&fit_path, &VarArtifact { fit: sel_var.best.clone(), d })?;
        write_atomic(&order_path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["p", "aic"])?;
            for (p, aic) in &sel_var.table {
                w.write_record([p.to_string(), aic.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;
        write_atomic(&fc_path, |tmp| write_var_forecast_csv(tmp, &dates, &names, &values))?;
        Ok((
            vec![lagged_path, sel_path],
            vec![fit_path, order_path, fc_path],
            json!({"p": sel_var.best.p, "variables": names, "p_max": feasible, "differenced": d}),
        ))
    }

    fn backtest(&self) -> Result<StageOutput> {
        let (best, best_path) = self.best()?;
        let (lagged, n_train, lagged_path) = self.lagged()?;
        let y = CaseSeries::new(lagged.dates[0], lagged.y.clone());
        let split = self.cfg.split_date();
        let opts = self.fit_options();
        let sig = &self.cfg.significances;
        let mut inputs = vec![best_path, lagged_path];

        let mut runs: Vec<(&str, Backtest)> = vec![(
            "arima",
            backtest(&y, &[], split, &BacktestModel::Arima(best.arima), sig, &opts)?,
        )];
        if let Some(spec) = best.arimax {
            let exog = Self::exog_by_name(&lagged, &best.exog_columns, 0..lagged.len())?;
            runs.push(("arimax", backtest(&y, &exog, split, &BacktestModel::Arima(spec), sig, &opts)?));
        }
        let var_path = self.path("fit-var", "fit.json");
        if var_path.exists() {
            let var: VarArtifact = read_json(&var_path)?;
            if var.d == 0 {
                let names: Vec<String> = var.fit.variable_names[1..].to_vec();
                let exog: Vec<(String, Vec<f64>)> = names
                    .iter()
                    .map(|n| {
                        let col = crate::series::lag_name(n, 0);
                        lagged
                            .column(&col)
                            .map(|c| (n.clone(), c.to_vec()))
                            .ok_or_else(|| Error::InvalidInput(format!("lagged data lacks `{col}`")))
                    })
                    .collect::<Result<_>>()?;
                runs.push(("var", backtest(&y, &exog, split, &BacktestModel::Var { p: var.fit.p }, sig, &opts)?));
            } else {
                log::info!("VAR was fitted on differences; skipping its level backtest");
            }
            inputs.push(var_path);
        }

        let mut models = serde_json::Map::new();
        for (name, bt) in &runs {
            let spec = bt.arima.as_ref().map(|f| f.spec.to_string()).or(bt.var.as_ref().map(|v| format!("VAR({})", v.p)));
            models.insert(
                name.to_string(),
                json!({"spec": spec, "point": bt.point_metrics, "bands": bt.band_metrics}),
            );
        }
        let rmse = |name: &str| runs.iter().find(|(n, _)| *n == name).map(|(_, b)| b.point_metrics.rmse);
        let improvement = match (rmse("arima"), rmse("arimax")) {
            (Some(a), Some(x)) if a > 0.0 => Some((a - x) / a * 100.0),
            _ => None,
        };
        let metrics = json!({
            "format_version": FORMAT_VERSION,
            "train_rows": n_train,
            "test_rows": lagged.len() - n_train,
            "models": models,
            "arimax_rmse_improvement_pct": improvement,
        });
        let metrics_path = self.path("backtest", "metrics.json");
        write_json(&metrics_path, &metrics)?;

        let pred_path = self.path("backtest", "predictions.csv");
        write_atomic(&pred_path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            let mut header = vec!["date".to_string(), "actual".to_string()];
            header.extend(runs.iter().map(|(n, _)| format!("{n}_point")));
            w.write_record(&header)?;
            let first = &runs[0].1;
            for (h, date) in first.test_dates.iter().enumerate() {
                let mut row = vec![date.to_string(), first.actual[h].to_string()];
                row.extend(runs.iter().map(|(_, b)| b.forecast.point[h].to_string()));
                w.write_record(&row)?;
            }
            w.flush().map_err(|e| Error::io(tmp, e))
        })?;
        Ok((inputs, vec![metrics_path, pred_path], metrics))
    }

    fn emit_plots(&self) -> Result<StageOutput> {
        let cases_path = require(&self.path("build-series", "cases.csv"), "build-series")?;
        let cases = CaseSeries::read_csv(&cases_path)?;
        let actual: HashMap<NaiveDate, f64> = cases.dates().into_iter().zip(cases.values.iter().copied()).collect();
        let mut inputs = vec![cases_path];
        let mut outputs = Vec::new();

        for name in ["arima", "arimax"] {
            let path = self.path("forecast", &format!("{name}.csv"));
            if name == "arimax" && !path.exists() {
                continue;
            }
            let path = require(&path, "forecast")?;
            let mut rdr = csv::Reader::from_path(&path)?;
            let headers = rdr.headers()?.clone();
            let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
            for (ci, h) in headers.iter().enumerate() {
                let Some(pct) = h.strip_prefix("upper_") else { continue };
                let out = self.path("emit-plots", &format!("{name}_{pct}.csv"));
                write_atomic(&out, |tmp| {
                    let mut w = csv::Writer::from_path(tmp)?;
                    w.write_record(["date", "actual", "predicted", "point"])?;
                    for r in &rows {
                        let date = crate::series::parse_date(&r[0])?;
                        let a = actual.get(&date).map(|v| v.to_string()).unwrap_or_default();
                        w.write_record([&r[0], a.as_str(), &r[ci], &r[1]])?;
                    }
                    w.flush().map_err(|e| Error::io(tmp, e))
                })?;
                outputs.push(out);
            }
            inputs.push(path);
        }

        let var_path = self.path("fit-var", "forecast.csv");
        if var_path.exists() {
            let mut rdr = csv::Reader::from_path(&var_path)?;
            let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
            let out = self.path("emit-plots", "var_forecast.csv");
            write_atomic(&out, |tmp| {
                let mut w = csv::Writer::from_path(tmp)?;
                w.write_record(["date", "actual", "predicted"])?;
                for r in &rows {
                    let date = crate::series::parse_date(&r[0])?;
                    let a = actual.get(&date).map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([&r[0], a.as_str(), &r[1]])?;
                }
                w.flush().map_err(|e| Error::io(tmp, e))
            })?;
            inputs.push(var_path);
            outputs.push(out);
        }
        if outputs.is_empty() {
            return Err(Error::MissingArtifact {
                path: self.path("forecast", "arima.csv"),
                stage: "forecast",
            });
        }
        Ok((inputs, outputs.clone(), json!({"files": outputs.len()})))
    }
}

type StageOutput = (Vec<PathBuf>, Vec<PathBuf>, serde_json::Value);

fn write_grid_csv(path: &Path, g: &GridSearch) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "p", "d", "q", "aic", "bic", "converged", "error"])?;
    for (i, f) in g.ranked.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            f.spec.p.to_string(),
            f.spec.d.to_string(),
            f.spec.q.to_string(),
            f.aic.to_string(),
            f.bic.to_string(),
            f.converged.to_string(),
            String::new(),
        ])?;
    }
    for (spec, e) in &g.failures {
        w.write_record([
            String::new(),
            spec.p.to_string(),
            spec.d.to_string(),
            spec.q.to_string(),
            String::new(),
            String::new(),
            String::new(),
            e.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[allow(dead_code)]
fn component_label(name: &str) -> Option<ComponentId> {
    name.parse().ok()
}
