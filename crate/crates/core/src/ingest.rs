//! Corpus ingestion: CSV parsing, post selection, cleaning and bigram merging.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub small_region: String,
    pub larger_region: String,
    pub precomputed_sentiment: Option<u8>,
}

impl TweetRecord {
    /// Calendar day of the post in the given timezone.
    pub fn day(&self, offset: FixedOffset) -> NaiveDate {
        self.timestamp.with_timezone(&offset).date_naive()
    }
}

/// Inclusive range of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl StudyWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidInput(format!("window end {end} precedes start {start}")));
        }
        Ok(StudyWindow { start, end })
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

/// Column names of the tweets CSV.
#[derive(Debug, Clone)]
pub struct CorpusSchema {
    pub id: String,
    pub created_at: String,
    pub text: String,
    pub small_region: String,
    pub larger_region: String,
    pub sentiment: String,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        CorpusSchema {
            id: "id".into(),
            created_at: "created_at".into(),
            text: "text".into(),
            small_region: "small_region".into(),
            larger_region: "larger_region".into(),
            sentiment: "sentiment".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub schema: CorpusSchema,
    pub window: Option<StudyWindow>,
    pub offset: Option<FixedOffset>,
}

/// A data row that could not be turned into a record. Rows are numbered
/// from 1, excluding the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub row_number: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub records: Vec<TweetRecord>,
    pub rejections: Vec<Rejection>,
}

pub fn parse_corpus(path: &Path, options: &ParseOptions) -> Result<ParsedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_reader(file, options)
}

pub fn parse_corpus_reader<R: Read>(reader: R, options: &ParseOptions) -> Result<ParsedCorpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let schema = &options.schema;
    let need = |name: &str| col(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let id_col = need(&schema.id)?;
    let ts_col = need(&schema.created_at)?;
    let text_col = need(&schema.text)?;
    let small_col = need(&schema.small_region)?;
    let large_col = need(&schema.larger_region)?;
    let sent_col = col(&schema.sentiment);
    let offset = options.offset.unwrap_or_else(utc);

    let mut out = ParsedCorpus::default();
    let mut ids = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_number = i + 1;
        let reject = |reason: String| Rejection { row_number, reason };
        let field = |c: usize| row.get(c).unwrap_or("");

        let id = field(id_col).trim().to_string();
        if id.is_empty() {
            out.rejections.push(reject("empty id".into()));
            continue;
        }
        let timestamp = match parse_timestamp(field(ts_col)) {
            Some(ts) => ts,
            None => {
                out.rejections.push(reject(format!("unparseable timestamp `{}`", field(ts_col))));
                continue;
            }
        };
        if let Some(window) = &options.window {
            let day = timestamp.with_timezone(&offset).date_naive();
            if !window.contains(day) {
                out.rejections.push(reject(format!("day {day} outside study window")));
                continue;
            }
        }
        let precomputed_sentiment = match sent_col.map(field).map(str::trim) {
            None | Some("") => None,
            Some(s) => match s.parse::<u8>() {
                Ok(v) if v <= 2 => Some(v),
                _ => {
                    out.rejections.push(reject(format!("invalid sentiment label `{s}`")));
                    continue;
                }
            },
        };
        if !ids.insert(id.clone()) {
            out.rejections.push(reject(format!("duplicate id `{id}`")));
            continue;
        }
        out.records.push(TweetRecord {
            id,
            timestamp,
            text: field(text_col).to_string(),
            small_region: field(small_col).trim().to_string(),
            larger_region: field(large_col).trim().to_string(),
            precomputed_sentiment,
        });
    }
    Ok(out)
}

pub fn write_rejections(path: &Path, rejections: &[Rejection]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row_number", "reason"])?;
    for r in rejections {
        w.write_record([r.row_number.to_string(), r.reason.clone()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn utc() -> FixedOffset {
    FixedOffset::east_opt(0).unwrap()
}

/// ISO-8601 timestamp; values without an offset are read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    const NAIVE: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    let trimmed = s.trim_end_matches('Z');
    for fmt in NAIVE {
        if let Ok(naive) = NaiveDateTime::parse_from_str(trimmed, fmt) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc())
}

/// Counts of records removed by each selection rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub duplicates: usize,
    pub too_few_terms: usize,
    pub not_geotagged: usize,
}

/// Apply the selection rules: exact-duplicate texts removed (earliest
/// timestamp, then smallest id, survives), fewer than `min_terms`
/// whitespace-separated terms removed, records without any region removed.
pub fn select_tweets(records: &[TweetRecord], min_terms: usize) -> Vec<TweetRecord> {
    select_tweets_counted(records, min_terms).0
}

pub fn select_tweets_counted(records: &[TweetRecord], min_terms: usize) -> (Vec<TweetRecord>, SelectionCounts) {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.timestamp.cmp(&rb.timestamp).then_with(|| ra.id.cmp(&rb.id))
    });
    let mut first = vec![false; records.len()];
    let mut seen: HashSet<&str> = HashSet::new();
    for i in order {
        if seen.insert(records[i].text.as_str()) {
            first[i] = true;
        }
    }

    let mut counts = SelectionCounts::default();
    let mut kept = Vec::new();
    for (r, is_first) in records.iter().zip(first) {
        if !is_first {
            counts.duplicates += 1;
        } else if r.text.split_whitespace().count() < min_terms {
            counts.too_few_terms += 1;
        } else if r.small_region.is_empty() && r.larger_region.is_empty() {
            counts.not_geotagged += 1;
        } else {
            kept.push(r.clone());
        }
    }
    (kept, counts)
}

/// Split a `"small, larger"` place name on its last comma. A comma-free name
/// is treated as a small region.
pub fn split_region(full_name: &str) -> (String, String) {
    match full_name.rfind(',') {
        Some(i) => (full_name[..i].trim().to_string(), full_name[i + 1..].trim().to_string()),
        None => (full_name.trim().to_string(), String::new()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    terms: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let terms: HashSet<String> = terms.into_iter().map(|t| t.into().to_lowercase()).collect();
        if terms.is_empty() {
            return Err(Error::InvalidInput("stopword list is empty".into()));
        }
        Ok(StopwordList { terms })
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::new(DEFAULT_STOPWORDS.lines().map(str::trim).filter(|l| !l.is_empty())).unwrap()
    }

    /// One term per line; blank lines and `#` comments ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub trait Normalizer: Send + Sync {
    fn normalize(&self, term: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityNormalizer;

impl Normalizer for IdentityNormalizer {
    fn normalize(&self, term: &str) -> String {
        term.to_string()
    }
}

/// Strips one of `ing`, `ed`, `es` (after ss/x/z/ch/sh) or `s` (not `ss`),
/// keeping at least three characters of stem.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStripper;

impl Normalizer for SuffixStripper {
    fn normalize(&self, term: &str) -> String {
        let n = term.chars().count();
        let stem_ok = |suffix: &str| n >= suffix.len() + 3 && term.ends_with(suffix);
        if stem_ok("ing") {
            return term[..term.len() - 3].to_string();
        }
        if stem_ok("ed") {
            return term[..term.len() - 2].to_string();
        }
        if stem_ok("es") {
            let stem = &term[..term.len() - 2];
            if ["ss", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) {
                return stem.to_string();
            }
        }
        if stem_ok("s") && !term.ends_with("ss") {
            return term[..term.len() - 1].to_string();
        }
        term.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDoc {
    pub tweet_id: String,
    pub date: NaiveDate,
    pub tokens: Vec<String>,
}

/// Whitespace tokens that are links or mentions.
pub fn is_url_or_mention(token: &str) -> bool {
    let t = token.to_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.") || t.starts_with('@')
}

/// Lowercase, drop links and mentions, turn every character that is not a
/// letter, digit or underscore into a separator.
pub fn raw_terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        if is_url_or_mention(word) {
            continue;
        }
        let lowered = word.to_lowercase();
        let mapped: String = lowered
            .chars()
            .map(|c| if c.is_alphanumeric() || c == '_' { c } else { ' ' })
            .collect();
        out.extend(mapped.split_whitespace().map(str::to_string));
    }
    out
}

/// Clean a record, bucketing its date in UTC. See [`Cleaner`] for other
/// timezones.
pub fn clean_and_tokenize(record: &TweetRecord, stopwords: &StopwordList, normalizer: &dyn Normalizer) -> Result<CleanDoc> {
    clean_with_offset(record, stopwords, normalizer, utc())
}

fn clean_with_offset(
    record: &TweetRecord,
    stopwords: &StopwordList,
    normalizer: &dyn Normalizer,
    offset: FixedOffset,
) -> Result<CleanDoc> {
    let mut tokens = Vec::new();
    for term in raw_terms(&record.text) {
        if stopwords.contains(&term) {
            continue;
        }
        let norm = normalizer.normalize(&term);
        if norm.is_empty() || stopwords.contains(&norm) {
            continue;
        }
        tokens.push(norm);
    }
    if tokens.is_empty() {
        return Err(Error::EmptyDocument(record.id.clone()));
    }
    Ok(CleanDoc {
        tweet_id: record.id.clone(),
        date: record.day(offset),
        tokens,
    })
}

pub struct Cleaner {
    pub stopwords: StopwordList,
    pub normalizer: Box<dyn Normalizer>,
    pub offset: FixedOffset,
}

impl Cleaner {
    pub fn new(stopwords: StopwordList, normalizer: Box<dyn Normalizer>, offset: FixedOffset) -> Self {
        Cleaner {
            stopwords,
            normalizer,
            offset,
        }
    }

    pub fn clean(&self, record: &TweetRecord) -> Result<CleanDoc> {
        clean_with_offset(record, &self.stopwords, self.normalizer.as_ref(), self.offset)
    }

    /// Clean every record in parallel. Records that end up empty are
    /// returned by id in the second vector, in input order.
    pub fn clean_all(&self, records: &[TweetRecord]) -> (Vec<CleanDoc>, Vec<String>) {
        let results: Vec<Result<CleanDoc>> = records.par_iter().map(|r| self.clean(r)).collect();
        let mut docs = Vec::with_capacity(results.len());
        let mut empty = Vec::new();
        for (res, r) in results.into_iter().zip(records) {
            match res {
                Ok(d) => docs.push(d),
                Err(_) => empty.push(r.id.clone()),
            }
        }
        (docs, empty)
    }
}

pub type Bigram = (String, String);

/// Merge adjacent token pairs seen at least `min_freq` times corpus-wide
/// into `a_b` tokens, scanning each document once left to right without
/// overlapping merges.
pub fn detect_and_merge_bigrams(docs: &[CleanDoc], min_freq: usize) -> Result<(BTreeSet<Bigram>, Vec<CleanDoc>)> {
    if min_freq == 0 {
        return Err(Error::InvalidInput("bigram min_freq must be at least 1".into()));
    }
    let counts: HashMap<(&str, &str), usize> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc, d| {
            for w in d.tokens.windows(2) {
                *acc.entry((w[0].as_str(), w[1].as_str())).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let frequent: HashSet<(&str, &str)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_freq)
        .map(|(k, _)| k)
        .collect();

    let rewritten = docs
        .par_iter()
        .map(|d| {
            let mut tokens = Vec::with_capacity(d.tokens.len());
            let mut i = 0;
            while i < d.tokens.len() {
                if i + 1 < d.tokens.len() && frequent.contains(&(d.tokens[i].as_str(), d.tokens[i + 1].as_str())) {
                    tokens.push(format!("{}_{}", d.tokens[i], d.tokens[i + 1]));
                    i += 2;
                } else {
                    tokens.push(d.tokens[i].clone());
                    i += 1;
                }
            }
            CleanDoc {
                tweet_id: d.tweet_id.clone(),
                date: d.date,
                tokens,
            }
        })
        .collect();
    let set = frequent.into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    Ok((set, rewritten))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn rec(id: &str, secs: i64, text: &str, small: &str, large: &str) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            timestamp: Utc.timestamp_opt(1_600_000_000 + secs, 0).unwrap(),
            text: text.into(),
            small_region: small.into(),
            larger_region: large.into(),
            precomputed_sentiment: None,
        }
    }

    const TEN: &str = "one two three four five six seven eight nine ten";

    #[test]
    fn parses_well_formed_rows() {
        let csv = "id,created_at,text,small_region,larger_region\n\
                   1,2021-08-01T10:00:00Z,hello world,Melbourne,Victoria\n\
                   2,2021-08-01T11:00:00+00:00,\"quoted, text\",Sydney,New South Wales\n\
                   3,2021-08-02 09:30:00,plain,Perth,\n";
        let parsed = parse_corpus_reader(csv.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert!(parsed.rejections.is_empty());
        assert_eq!(parsed.records[1].text, "quoted, text");
        assert_eq!(parsed.records[2].larger_region, "");
    }

    #[test]
    fn bad_timestamp_is_reported() {
        let csv = "id,created_at,text,small_region,larger_region\n\
                   1,2021-08-01T10:00:00Z,a,x,y\n\
                   2,2021-08-01T10:00:00Z,b,x,y\n\
                   3,not-a-date,c,x,y\n\
                   4,2021-08-01T10:00:00Z,d,x,y\n\
                   5,2021-08-01T10:00:00Z,e,x,y\n";
        let parsed = parse_corpus_reader(csv.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 4);
        assert_eq!(parsed.rejections.len(), 1);
        assert_eq!(parsed.rejections[0].row_number, 3);
    }

    #[test]
    fn header_only_is_empty() {
        let csv = "id,created_at,text,small_region,larger_region\n";
        let parsed = parse_corpus_reader(csv.as_bytes(), &ParseOptions::default()).unwrap();
        assert!(parsed.records.is_empty());
        assert!(parsed.rejections.is_empty());
    }

    #[test]
    fn missing_column_errors() {
        let csv = "id,created_at,text,small_region\n";
        let err = parse_corpus_reader(csv.as_bytes(), &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "larger_region"));
    }

    #[test]
    fn ragged_row_errors() {
        let csv = "id,created_at,text,small_region,larger_region\n1,2021-08-01,a\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes(), &ParseOptions::default()),
            Err(Error::Csv(_))
        ));
    }

    #[test]
    fn missing_file_errors() {
        let err = parse_corpus(Path::new("/definitely/not/here.csv"), &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn window_and_sentiment_checks() {
        let csv = "id,created_at,text,small_region,larger_region,sentiment\n\
                   1,2021-08-01T10:00:00Z,a,x,y,2\n\
                   2,2021-09-01T10:00:00Z,b,x,y,1\n\
                   3,2021-08-02T10:00:00Z,c,x,y,7\n\
                   1,2021-08-03T10:00:00Z,d,x,y,\n";
        let d = |s| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let options = ParseOptions {
            window: Some(StudyWindow::new(d("2021-08-01"), d("2021-08-31")).unwrap()),
            ..Default::default()
        };
        let parsed = parse_corpus_reader(csv.as_bytes(), &options).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].precomputed_sentiment, Some(2));
        let rows: Vec<usize> = parsed.rejections.iter().map(|r| r.row_number).collect();
        assert_eq!(rows, vec![2, 3, 4]);
    }

    #[test]
    fn duplicates_keep_earliest() {
        let records = vec![rec("b", 10, TEN, "x", ""), rec("a", 5, TEN, "x", ""), rec("c", 5, TEN, "x", "")];
        let (kept, counts) = select_tweets_counted(&records, 10);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "a");
        assert_eq!(counts.duplicates, 2);
    }

    #[test]
    fn short_and_ungeotagged_excluded() {
        let nine = "one two three four five six seven eight nine";
        let records = vec![
            rec("1", 0, nine, "x", "y"),
            rec("2", 0, &format!("{TEN} a"), "", ""),
            rec("3", 0, &format!("{TEN} b"), "", "Victoria"),
        ];
        let (kept, counts) = select_tweets_counted(&records, 10);
        assert_eq!(kept.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), vec!["3"]);
        assert_eq!(counts.too_few_terms, 1);
        assert_eq!(counts.not_geotagged, 1);
    }

    #[test]
    fn region_split() {
        assert_eq!(split_region("Melbourne, Victoria"), ("Melbourne".into(), "Victoria".into()));
        assert_eq!(split_region("New South Wales"), ("New South Wales".into(), "".into()));
        assert_eq!(split_region(""), ("".into(), "".into()));
        assert_eq!(split_region("A, B, C"), ("A, B".into(), "C".into()));
    }

    #[test]
    fn cleaning_rules() {
        let stop = StopwordList::new(["rising"]).unwrap();
        let r = rec("1", 0, "Covid CASES rising http://t.co/x @user", "x", "");
        let doc = clean_and_tokenize(&r, &stop, &IdentityNormalizer).unwrap();
        assert_eq!(doc.tokens, vec!["covid", "cases"]);

        let empty = StopwordList::new(["zzz"]).unwrap();
        let r = rec("2", 0, "aaa aaa aaa", "x", "");
        assert_eq!(clean_and_tokenize(&r, &empty, &IdentityNormalizer).unwrap().tokens, vec!["aaa"; 3]);

        let r = rec("3", 0, "the and of", "x", "");
        let err = clean_and_tokenize(&r, &StopwordList::english(), &IdentityNormalizer).unwrap_err();
        assert!(matches!(err, Error::EmptyDocument(id) if id == "3"));
    }

    #[test]
    fn hashtags_and_punctuation_split() {
        let stop = StopwordList::new(["zzz"]).unwrap();
        let r = rec("1", 0, "#covid-19 lockdown!! www.example.com HTTPS://x.y", "x", "");
        let doc = clean_and_tokenize(&r, &stop, &IdentityNormalizer).unwrap();
        assert_eq!(doc.tokens, vec!["covid", "19", "lockdown"]);
    }

    #[test]
    fn suffix_stripper() {
        let s = SuffixStripper;
        assert_eq!(s.normalize("cases"), "case");
        assert_eq!(s.normalize("boxes"), "box");
        assert_eq!(s.normalize("testing"), "test");
        assert_eq!(s.normalize("tested"), "test");
        assert_eq!(s.normalize("glass"), "glass");
        assert_eq!(s.normalize("classes"), "class");
        assert_eq!(s.normalize("is"), "is");
        assert_eq!(s.normalize("sing"), "sing");
    }

    #[test]
    fn bundled_stopwords() {
        let s = StopwordList::english();
        assert!(s.len() > 150);
        assert!(s.contains("the"));
        assert!(!s.contains("covid"));
        assert!(StopwordList::new(Vec::<String>::new()).is_err());
    }

    fn doc(tokens: &[&str]) -> CleanDoc {
        CleanDoc {
            tweet_id: "d".into(),
            date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn frequent_bigram_merged() {
        let mut docs = vec![doc(&["hotel", "quarantine", "again"]); 600];
        docs.push(doc(&["hotel", "room"]));
        let (set, out) = detect_and_merge_bigrams(&docs, 500).unwrap();
        assert!(set.contains(&("hotel".to_string(), "quarantine".to_string())));
        assert!(set.contains(&("quarantine".to_string(), "again".to_string())));
        assert_eq!(out[0].tokens, vec!["hotel_quarantine", "again"]);
        assert_eq!(out[600].tokens, vec!["hotel", "room"]);
    }

    #[test]
    fn rare_bigrams_leave_docs_unchanged() {
        let docs = vec![doc(&["a", "b", "c"]), doc(&["a", "b"])];
        let (set, out) = detect_and_merge_bigrams(&docs, 3).unwrap();
        assert!(set.is_empty());
        assert_eq!(out, docs);
    }

    #[test]
    fn merging_does_not_overlap() {
        let docs = vec![doc(&["a", "b", "a", "b"])];
        let (_, out) = detect_and_merge_bigrams(&docs, 1).unwrap();
        assert_eq!(out[0].tokens, vec!["a_b", "a_b"]);
        let docs = vec![doc(&["a", "a", "a"])];
        let (_, out) = detect_and_merge_bigrams(&docs, 1).unwrap();
        assert_eq!(out[0].tokens, vec!["a_a", "a"]);
    }

    proptest! {
        #[test]
        fn selection_is_idempotent(
            rows in proptest::collection::vec((0i64..50, 0usize..4, 5usize..14, any::<bool>()), 0..40)
        ) {
            let words = ["alpha", "beta", "gamma", "delta"];
            let records: Vec<TweetRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, &(t, w, n, geo))| {
                    let text = vec![words[w]; n].join(" ");
                    rec(&format!("{i}"), t, &text, if geo { "x" } else { "" }, "")
                })
                .collect();
            let once = select_tweets(&records, 10);
            let twice = select_tweets(&once, 10);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn cleaned_tokens_are_plain(text in "[ -~]{0,80}") {
            let r = rec("p", 0, &text, "x", "");
            let stop = StopwordList::english();
            if let Ok(doc) = clean_and_tokenize(&r, &stop, &IdentityNormalizer) {
                for t in &doc.tokens {
                    prop_assert!(!t.is_empty());
                    prop_assert!(t.chars().all(|c| c.is_alphanumeric() || c == '_'));
                    prop_assert!(t.chars().all(|c| !c.is_uppercase()));
                    prop_assert!(!t.starts_with("http") || !t.contains("://"));
                    prop_assert!(!stop.contains(t));
                }
            }
        }

        #[test]
        fn merge_preserves_unigram_stream(
            docs in proptest::collection::vec(proptest::collection::vec(0usize..3, 0..12), 1..10),
            min_freq in 1usize..5
        ) {
            let words = ["x", "y", "z"];
            let docs: Vec<CleanDoc> = docs
                .iter()
                .map(|d| doc(&d.iter().map(|&i| words[i]).collect::<Vec<_>>()))
                .collect();
            let (_, out) = detect_and_merge_bigrams(&docs, min_freq).unwrap();
            for (before, after) in docs.iter().zip(&out) {
                let split: Vec<String> = after
                    .tokens
                    .iter()
                    .flat_map(|t| t.split('_').map(str::to_string).collect::<Vec<_>>())
                    .collect();
                prop_assert_eq!(&split, &before.tokens);
            }
        }
    }
}
