//! Daily series: the date × topic × sentiment count tensor, its lagged
//! feature table, differencing, volume baselines and trend-block rescaling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StudyWindow;
use crate::sentiment::label_name;

pub const SENTIMENTS: usize = 3;

/// One labelled document reduced to what the tensor needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocLabel {
    pub date: NaiveDate,
    pub topic: usize,
    pub sentiment: u8,
}

/// A (topic, sentiment) slice of the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentId {
    pub topic: usize,
    pub sentiment: u8,
}

impl ComponentId {
    /// Position in the topic-major flattening.
    pub fn index(&self) -> usize {
        self.topic * SENTIMENTS + self.sentiment as usize
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "topic{}_{}", self.topic, label_name(self.sentiment))
    }
}

impl FromStr for ComponentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad component name `{s}`"));
        let rest = s.strip_prefix("topic").ok_or_else(bad)?;
        let (t, sent) = rest.split_once('_').ok_or_else(bad)?;
        let topic = t.parse().map_err(|_| bad())?;
        let sentiment = match sent {
            "negative" => 0,
            "neutral" => 1,
            "positive" => 2,
            _ => return Err(bad()),
        };
        Ok(ComponentId { topic, sentiment })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTensor {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub topics: usize,
    /// Row-major `T × J × 3`.
    counts: Vec<u32>,
}

impl SeriesTensor {
    pub fn zeros(window: StudyWindow, topics: usize) -> Self {
        SeriesTensor {
            start: window.start,
            end: window.end,
            topics,
            counts: vec![0; window.days() * topics * SENTIMENTS],
        }
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.days()).map(|t| self.start + Duration::days(t as i64)).collect()
    }

    pub fn get(&self, day: usize, topic: usize, sentiment: usize) -> u32 {
        self.counts[(day * self.topics + topic) * SENTIMENTS + sentiment]
    }

    fn get_mut(&mut self, day: usize, topic: usize, sentiment: usize) -> &mut u32 {
        &mut self.counts[(day * self.topics + topic) * SENTIMENTS + sentiment]
    }

    pub fn component_ids(&self) -> Vec<ComponentId> {
        (0..self.topics)
            .flat_map(|topic| (0..SENTIMENTS as u8).map(move |sentiment| ComponentId { topic, sentiment }))
            .collect()
    }

    pub fn component(&self, id: ComponentId) -> Vec<f64> {
        (0..self.days())
            .map(|t| self.get(t, id.topic, id.sentiment as usize) as f64)
            .collect()
    }

    /// All J × 3 component series in topic-major order.
    pub fn components(&self) -> Vec<(ComponentId, Vec<f64>)> {
        self.component_ids().into_iter().map(|id| (id, self.component(id))).collect()
    }

    pub fn daily_totals(&self) -> Vec<f64> {
        let per_day = self.topics * SENTIMENTS;
        self.counts
            .chunks(per_day.max(1))
            .map(|c| c.iter().map(|&x| x as f64).sum())
            .take(self.days())
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let ids = self.component_ids();
        let mut header = vec!["date".to_string()];
        header.extend(ids.iter().map(|c| c.to_string()));
        w.write_record(&header)?;
        for (t, date) in self.dates().into_iter().enumerate() {
            let mut row = vec![date.to_string()];
            row.extend(ids.iter().map(|c| self.get(t, c.topic, c.sentiment as usize).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("date") {
            return Err(Error::MissingColumn("date".into()));
        }
        let ids: Vec<ComponentId> = headers.iter().skip(1).map(str::parse).collect::<Result<_>>()?;
        let topics = ids.iter().map(|c| c.topic + 1).max().unwrap_or(0);
        if ids.len() != topics * SENTIMENTS {
            return Err(Error::InvalidInput(format!("{} has an incomplete component set", path.display())));
        }
        let mut dates = Vec::new();
        let mut rows = Vec::new();
        for row in rdr.records() {
            let row = row?;
            dates.push(parse_date(&row[0])?);
            let vals: Vec<u32> = row
                .iter()
                .skip(1)
                .map(|v| v.trim().parse().map_err(|_| Error::InvalidInput(format!("bad count `{v}`"))))
                .collect::<Result<_>>()?;
            rows.push(vals);
        }
        check_contiguous(&dates)?;
        let (start, end) = match (dates.first(), dates.last()) {
            (Some(&s), Some(&e)) => (s, e),
            _ => return Err(Error::InvalidInput(format!("{} has no rows", path.display()))),
        };
        let mut tensor = SeriesTensor::zeros(StudyWindow::new(start, end)?, topics);
        for (t, vals) in rows.iter().enumerate() {
            for (c, v) in ids.iter().zip(vals) {
                *tensor.get_mut(t, c.topic, c.sentiment as usize) = *v;
            }
        }
        Ok(tensor)
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::InvalidInput(format!("bad date `{s}`")))
}

fn check_contiguous(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] - w[0] != Duration::days(1) {
            return Err(Error::InvalidInput(format!("dates not contiguous between {} and {}", w[0], w[1])));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TensorBuild {
    pub tensor: SeriesTensor,
    /// Indices of documents dated outside the window.
    pub out_of_window: Vec<usize>,
}

/// Exact daily counts per (topic, sentiment); days without documents are
/// explicit zeros.
pub fn build_tensor(docs: &[DocLabel], window: StudyWindow, topics: usize) -> Result<TensorBuild> {
    let mut tensor = SeriesTensor::zeros(window, topics);
    let mut out_of_window = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        if d.topic >= topics {
            return Err(Error::InvalidInput(format!("topic {} not below J = {topics}", d.topic)));
        }
        if d.sentiment as usize >= SENTIMENTS {
            return Err(Error::InvalidInput(format!("sentiment {} not in 0..=2", d.sentiment)));
        }
        if !window.contains(d.date) {
            out_of_window.push(i);
            continue;
        }
        let t = (d.date - window.start).num_days() as usize;
        *tensor.get_mut(t, d.topic, d.sentiment as usize) += 1;
    }
    Ok(TensorBuild { tensor, out_of_window })
}

/// Daily target counts on contiguous dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl CaseSeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Self {
        CaseSeries { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.values.len() as i64 - 1)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.len()).map(|t| self.start + Duration::days(t as i64)).collect()
    }

    /// Restrict to a window fully covered by the series.
    pub fn restrict(&self, window: StudyWindow) -> Result<CaseSeries> {
        if window.start < self.start || window.end > self.end() {
            return Err(Error::DateMismatch(format!(
                "series covers {}..={}, window is {}..={}",
                self.start,
                self.end(),
                window.start,
                window.end
            )));
        }
        let off = (window.start - self.start).num_days() as usize;
        Ok(CaseSeries::new(window.start, self.values[off..off + window.days()].to_vec()))
    }

    /// CSV with columns `date,new_cases`; dates must be contiguous and
    /// ascending, counts non-negative.
    pub fn read_csv(path: &Path) -> Result<CaseSeries> {
        Self::read_column(path, "new_cases")
    }

    pub fn read_column(path: &Path, column: &str) -> Result<CaseSeries> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let date_col = headers.iter().position(|h| h == "date").ok_or_else(|| Error::MissingColumn("date".into()))?;
        let val_col = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::MissingColumn(column.into()))?;
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for row in rdr.records() {
            let row = row?;
            dates.push(parse_date(&row[date_col])?);
            let v: f64 = row[val_col]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad value `{}`", &row[val_col])))?;
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!("negative or NaN value {v}")));
            }
            values.push(v);
        }
        check_contiguous(&dates)?;
        let start = *dates.first().ok_or_else(|| Error::InvalidInput(format!("{} has no rows", path.display())))?;
        Ok(CaseSeries { start, values })
    }

    pub fn write_csv(&self, path: &Path, column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["date", column])?;
        for (d, v) in self.dates().iter().zip(&self.values) {
            w.write_record([d.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Target aligned with lagged copies of every component. Rows before
/// `max_lag` are dropped so no column has missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedDataset {
    pub dates: Vec<NaiveDate>,
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub max_lag: usize,
}

pub fn lag_name(component: &str, lag: usize) -> String {
    format!("{component}_lag{lag}")
}

impl LaggedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    /// Lag columns `0..=max_lag` of the named components, in order.
    pub fn component_columns(&self, components: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
        let mut out = Vec::new();
        for c in components {
            for l in 0..=self.max_lag {
                let name = lag_name(c, l);
                let col = self
                    .column(&name)
                    .ok_or_else(|| Error::InvalidInput(format!("no column `{name}` in lagged dataset")))?;
                out.push((name, col.to_vec()));
            }
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["date".to_string(), "y".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (t, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.to_string(), self.y[t].to_string()];
            row.extend(self.columns.iter().map(|c| c[t].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path, max_lag: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("date") || headers.get(1) != Some("y") {
            return Err(Error::MissingColumn("date,y".into()));
        }
        let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut ds = LaggedDataset {
            dates: Vec::new(),
            y: Vec::new(),
            columns: vec![Vec::new(); names.len()],
            names,
            max_lag,
        };
        for row in rdr.records() {
            let row = row?;
            ds.dates.push(parse_date(&row[0])?);
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad value `{s}`")));
            ds.y.push(parse(&row[1])?);
            for (c, v) in ds.columns.iter_mut().zip(row.iter().skip(2)) {
                c.push(parse(v)?);
            }
        }
        check_contiguous(&ds.dates)?;
        Ok(ds)
    }
}

/// Lagged copies `0..=max_lag` of named daily series sharing `y`'s dates.
pub fn lag_series(start: NaiveDate, series: &[(String, Vec<f64>)], y: &[f64], max_lag: usize) -> Result<LaggedDataset> {
    let n = y.len();
    if n <= max_lag {
        return Err(Error::TooShort { needed: max_lag, got: n });
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (name, s) in series {
        if s.len() != n {
            return Err(Error::LengthMismatch(format!("`{name}` has {} values, target has {n}", s.len())));
        }
        for l in 0..=max_lag {
            names.push(lag_name(name, l));
            columns.push(s[max_lag - l..n - l].to_vec());
        }
    }
    Ok(LaggedDataset {
        dates: (max_lag..n).map(|t| start + Duration::days(t as i64)).collect(),
        y: y[max_lag..].to_vec(),
        names,
        columns,
        max_lag,
    })
}

/// Lagged dataset over every tensor component.
pub fn lag_features(tensor: &SeriesTensor, y: &CaseSeries, max_lag: usize) -> Result<LaggedDataset> {
    if tensor.start != y.start || tensor.days() != y.len() {
        return Err(Error::DateMismatch(format!(
            "tensor covers {}..={}, target covers {}..={}",
            tensor.start,
            tensor.end,
            y.start,
            y.end()
        )));
    }
    let series: Vec<(String, Vec<f64>)> = tensor.components().into_iter().map(|(id, s)| (id.to_string(), s)).collect();
    lag_series(tensor.start, &series, &y.values, max_lag)
}

/// `d`-fold first differencing.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if series.len() <= d {
        return Err(Error::TooShort {
            needed: d,
            got: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// First element of the series at each differencing level `0..d`.
pub fn difference_heads(series: &[f64], d: usize) -> Result<Vec<f64>> {
    (0..d).map(|level| difference(series, level).map(|s| s[0])).collect()
}

/// Inverse of [`difference`] given the heads from [`difference_heads`].
pub fn undifference(diffed: &[f64], heads: &[f64]) -> Vec<f64> {
    let mut out = diffed.to_vec();
    for &head in heads.iter().rev() {
        let mut level = Vec::with_capacity(out.len() + 1);
        level.push(head);
        for x in &out {
            let last = *level.last().unwrap();
            level.push(last + x);
        }
        out = level;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMode {
    Overall,
    Topic(usize),
}

/// Daily post counts over the window, either all posts or those whose
/// assigned topic is `j`.
pub fn volumetric_series(docs: &[DocLabel], window: StudyWindow, mode: VolumeMode) -> CaseSeries {
    let mut values = vec![0.0; window.days()];
    for d in docs {
        if !window.contains(d.date) {
            continue;
        }
        if let VolumeMode::Topic(j) = mode {
            if d.topic != j {
                continue;
            }
        }
        values[(d.date - window.start).num_days() as usize] += 1.0;
    }
    CaseSeries::new(window.start, values)
}

/// A block of daily search-interest values on its own 0–100 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendBlock {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl TrendBlock {
    fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.values.len() as i64 - 1)
    }

    fn at(&self, day: NaiveDate) -> Option<f64> {
        if day < self.start || day > self.end() {
            None
        } else {
            Some(self.values[(day - self.start).num_days() as usize])
        }
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let s = CaseSeries::read_column(path, "value")?;
        Ok(TrendBlock {
            start: s.start,
            values: s.values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledTrend {
    pub series: CaseSeries,
    /// Cumulative factor applied to each block (1 for the first).
    pub factors: Vec<f64>,
}

/// Bring every block onto the first block's scale. A block's factor is the
/// mean of previous/current over overlap days where both are nonzero,
/// composed with the previous block's factor. On overlap days the earlier
/// block's value is kept.
pub fn rescale_trend_blocks(blocks: &[TrendBlock]) -> Result<RescaledTrend> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidInput("no trend blocks".into()))?;
    if blocks.iter().any(|b| b.values.is_empty()) {
        return Err(Error::InvalidInput("empty trend block".into()));
    }
    let mut factors = vec![1.0];
    let mut merged: Vec<f64> = first.values.clone();
    for (i, pair) in blocks.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.start <= prev.start || cur.start > prev.end() {
            return Err(Error::InvalidInput(format!(
                "block {} does not overlap block {} (starts {}, previous ends {})",
                i + 1,
                i,
                cur.start,
                prev.end()
            )));
        }
        let mut ratios = Vec::new();
        let mut day = cur.start;
        while day <= prev.end().min(cur.end()) {
            let (p, c) = (prev.at(day).unwrap(), cur.at(day).unwrap());
            if p != 0.0 && c != 0.0 {
                ratios.push(p / c);
            }
            day += Duration::days(1);
        }
        if ratios.is_empty() {
            return Err(Error::InvalidInput(format!("overlap of blocks {i} and {} is all zero", i + 1)));
        }
        let factor = factors[i] * ratios.iter().sum::<f64>() / ratios.len() as f64;
        factors.push(factor);
        let merged_end = first.start + Duration::days(merged.len() as i64 - 1);
        let mut day = merged_end + Duration::days(1);
        while day <= cur.end() {
            merged.push(cur.at(day).unwrap() * factor);
            day += Duration::days(1);
        }
    }
    Ok(RescaledTrend {
        series: CaseSeries::new(first.start, merged),
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + Duration::days(n)
    }

    fn window(days: i64) -> StudyWindow {
        StudyWindow::new(day(0), day(days - 1)).unwrap()
    }

    #[test]
    fn same_cell_counts() {
        let docs = vec![DocLabel { date: day(1), topic: 1, sentiment: 2 }; 3];
        let t = build_tensor(&docs, window(3), 2).unwrap().tensor;
        for d in 0..3 {
            for j in 0..2 {
                for k in 0..3 {
                    let want = if (d, j, k) == (1, 1, 2) { 3 } else { 0 };
                    assert_eq!(t.get(d, j, k), want);
                }
            }
        }
    }

    #[test]
    fn empty_docs_zero_tensor() {
        let t = build_tensor(&[], window(5), 18).unwrap().tensor;
        assert_eq!(t.days(), 5);
        assert_eq!(t.components().len(), 54);
        assert!(t.daily_totals().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn random_docs_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let docs: Vec<DocLabel> = (0..1000)
            .map(|_| DocLabel {
                date: day(rng.gen_range(-2..32)),
                topic: rng.gen_range(0..5),
                sentiment: rng.gen_range(0..3),
            })
            .collect();
        let w = window(30);
        let build = build_tensor(&docs, w, 5).unwrap();
        let mut brute: HashMap<(NaiveDate, usize, u8), u32> = HashMap::new();
        let mut outside = 0;
        for d in &docs {
            if d.date < w.start || d.date > w.end {
                outside += 1;
            } else {
                *brute.entry((d.date, d.topic, d.sentiment)).or_default() += 1;
            }
        }
        assert_eq!(build.out_of_window.len(), outside);
        for (t, date) in build.tensor.dates().into_iter().enumerate() {
            for j in 0..5 {
                for k in 0..3u8 {
                    let want = brute.get(&(date, j, k)).copied().unwrap_or(0);
                    assert_eq!(build.tensor.get(t, j, k as usize), want);
                }
            }
        }
        let overall = volumetric_series(&docs, w, VolumeMode::Overall);
        assert_eq!(overall.values, build.tensor.daily_totals());
        let topic3 = volumetric_series(&docs, w, VolumeMode::Topic(3));
        for (t, date) in build.tensor.dates().into_iter().enumerate() {
            let want = docs.iter().filter(|d| d.date == date && d.topic == 3).count() as f64;
            assert_eq!(topic3.values[t], want);
            let marg: u32 = (0..3).map(|k| build.tensor.get(t, 3, k)).sum();
            assert_eq!(topic3.values[t], marg as f64);
        }
    }

    #[test]
    fn invalid_labels_rejected() {
        let bad_topic = [DocLabel { date: day(0), topic: 2, sentiment: 0 }];
        assert!(build_tensor(&bad_topic, window(1), 2).is_err());
        let bad_sent = [DocLabel { date: day(0), topic: 0, sentiment: 3 }];
        assert!(build_tensor(&bad_sent, window(1), 2).is_err());
    }

    #[test]
    fn lag_one_columns() {
        let s = vec![("c".to_string(), vec![1.0, 2.0, 3.0, 4.0])];
        let ds = lag_series(day(0), &s, &[10.0, 20.0, 30.0, 40.0], 1).unwrap();
        assert_eq!(ds.column("c_lag0").unwrap(), &[2.0, 3.0, 4.0]);
        assert_eq!(ds.column("c_lag1").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(ds.y, vec![20.0, 30.0, 40.0]);
        assert_eq!(ds.dates[0], day(1));
    }

    #[test]
    fn lag_zero_is_flat_tensor() {
        let docs = vec![DocLabel { date: day(2), topic: 0, sentiment: 1 }];
        let t = build_tensor(&docs, window(4), 2).unwrap().tensor;
        let y = CaseSeries::new(day(0), vec![1.0, 2.0, 3.0, 4.0]);
        let ds = lag_features(&t, &y, 0).unwrap();
        assert_eq!(ds.names.len(), 6);
        assert_eq!(ds.y, y.values);
        assert_eq!(ds.column("topic0_neutral_lag0").unwrap(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn full_scale_column_count() {
        let t = build_tensor(&[], window(40), 18).unwrap().tensor;
        let y = CaseSeries::new(day(0), vec![0.0; 40]);
        let ds = lag_features(&t, &y, 14).unwrap();
        assert_eq!(ds.columns.len(), 54 * 15);
        assert_eq!(ds.len(), 26);
        assert!(lag_features(&t, &CaseSeries::new(day(1), vec![0.0; 40]), 14).is_err());
    }

    #[test]
    fn differencing_examples() {
        assert_eq!(difference(&[1.0, 3.0, 6.0], 1).unwrap(), vec![2.0, 3.0]);
        assert_eq!(difference(&[1.0, 3.0, 6.0, 10.0], 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(difference(&[5.0, 1.0], 0).unwrap(), vec![5.0, 1.0]);
        assert!(difference(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn rescale_single_point() {
        let b1 = TrendBlock { start: day(0), values: vec![10.0, 30.0, 50.0] };
        let b2 = TrendBlock { start: day(2), values: vec![25.0, 40.0, 10.0] };
        let r = rescale_trend_blocks(&[b1, b2]).unwrap();
        assert_eq!(r.factors, vec![1.0, 2.0]);
        assert_eq!(r.series.values, vec![10.0, 30.0, 50.0, 80.0, 20.0]);
    }

    #[test]
    fn rescale_identity() {
        let b1 = TrendBlock { start: day(0), values: vec![1.0, 2.0, 3.0] };
        let b2 = TrendBlock { start: day(1), values: vec![2.0, 3.0, 4.0] };
        let r = rescale_trend_blocks(&[b1, b2]).unwrap();
        assert_eq!(r.factors, vec![1.0, 1.0]);
        assert_eq!(r.series.values, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rescale_errors() {
        let b1 = TrendBlock { start: day(0), values: vec![1.0, 0.0] };
        let gap = TrendBlock { start: day(5), values: vec![1.0] };
        assert!(rescale_trend_blocks(&[b1.clone(), gap]).is_err());
        let zero = TrendBlock { start: day(1), values: vec![3.0, 4.0] };
        assert!(rescale_trend_blocks(&[b1, zero]).is_err());
        assert!(rescale_trend_blocks(&[]).is_err());
    }

    #[test]
    fn component_names_round_trip() {
        let c = ComponentId { topic: 16, sentiment: 0 };
        assert_eq!(c.to_string(), "topic16_negative");
        assert_eq!("topic16_negative".parse::<ComponentId>().unwrap(), c);
        assert!("topic_x".parse::<ComponentId>().is_err());
    }

    proptest! {
        #[test]
        fn difference_round_trip(xs in proptest::collection::vec(-1000i32..1000, 3..40), d in 0usize..3) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let diffed = difference(&xs, d).unwrap();
            let heads = difference_heads(&xs, d).unwrap();
            prop_assert_eq!(undifference(&diffed, &heads), xs);
        }

        #[test]
        fn lag_columns_are_shifts(xs in proptest::collection::vec(0u32..50, 6..30), max_lag in 0usize..5) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let y = vec![0.0; xs.len()];
            let ds = lag_series(day(0), &[("c".into(), xs.clone())], &y, max_lag).unwrap();
            let base = ds.column("c_lag0").unwrap();
            for l in 0..=max_lag {
                let col = ds.column(&lag_name("c", l)).unwrap();
                for t in 0..col.len() {
                    prop_assert_eq!(col[t], xs[t + max_lag - l]);
                    if t >= l {
                        prop_assert_eq!(col[t], base[t - l]);
                    }
                }
            }
        }
    }
}
