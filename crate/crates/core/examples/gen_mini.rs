//! Writes the bundled mini-corpus: three topics with disjoint vocabularies,
//! where the negative posts of the "symptoms" topic drive the case series
//! at lags 1 to 3.
//!
//! cargo run -p signalcast --example gen_mini -- [OUT_DIR]

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

const SYMPTOMS: [&str; 20] = [
    "fever", "cough", "headache", "fatigue", "chills", "sore", "throat", "breathless", "aches", "nausea",
    "congestion", "dizzy", "shivering", "wheezing", "sweats", "migraine", "sneezing", "tired", "clinic", "symptoms",
];
const POLICY: [&str; 20] = [
    "lockdown", "mandate", "curfew", "restrictions", "governor", "announced", "reopening", "schools", "masks",
    "policy", "border", "closure", "guidelines", "officials", "council", "regulation", "capacity", "venues",
    "exemption", "enforcement",
];
const VACCINE: [&str; 20] = [
    "vaccine", "dose", "booster", "pfizer", "moderna", "appointment", "pharmacy", "jab", "immunity", "trial",
    "shipment", "eligible", "rollout", "injection", "arm", "clinics", "supply", "vials", "registration", "second",
];
const FILLER: [&str; 6] = ["the", "and", "is", "of", "to", "a"];
const REGIONS: [&str; 4] = ["Springfield", "Riverton", "Lakeside", "Hillview"];

fn text(rng: &mut ChaCha8Rng, vocab: &[&str], phrase: Option<&str>) -> String {
    let len = rng.gen_range(10..=14);
    let mut words: Vec<String> = (0..len).map(|_| vocab.choose(rng).unwrap().to_string()).collect();
    for _ in 0..2 {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, FILLER.choose(rng).unwrap().to_string());
    }
    if let Some(p) = phrase {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, p.to_string());
    }
    if rng.gen_bool(0.1) {
        words.push("https://t.co/x".into());
    }
    words.join(" ")
}

fn main() -> std::io::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "crates/core/data/mini".into());
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20_210_301);
    let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
    let days = 200usize;
    let vocabs: [&[&str]; 3] = [&SYMPTOMS, &POLICY, &VACCINE];

    // Daily intensity of the driving component: AR(1) around 15.
    let shock = Normal::new(0.0, 3.0).unwrap();
    let mut lambda = 15.0;
    let mut driver = Vec::with_capacity(days);
    for _ in 0..days {
        lambda = 15.0 + 0.8 * (lambda - 15.0) + shock.sample(&mut rng);
        let n = Poisson::new(f64::max(lambda, 1.0)).unwrap().sample(&mut rng) as u64;
        driver.push(n);
    }

    let mut tweets = csv::Writer::from_path(out.join("tweets.csv"))?;
    tweets.write_record(["id", "created_at", "text", "small_region", "larger_region", "sentiment"])?;
    let mut next_id = 1u64;
    let mut push = |w: &mut csv::Writer<File>, ts: String, text: String, region: &str, sentiment: String| {
        let id = next_id.to_string();
        next_id += 1;
        w.write_record([id, ts, text, region.to_string(), "Statewide".to_string(), sentiment])
    };
    // Keeps the three topics roughly equal in daily volume.
    let background = [Poisson::new(4.0).unwrap(), Poisson::new(7.5).unwrap()];
    let mut kept_texts = Vec::new();
    for (t, &n_driver) in driver.iter().enumerate() {
        let day = start + Duration::days(t as i64);
        for topic in 0..3 {
            for sentiment in 0..3u8 {
                let n = if topic == 0 && sentiment == 0 { n_driver } else { background[(topic > 0) as usize].sample(&mut rng) as u64 };
                for _ in 0..n {
                    let ts = format!("{day}T{:02}:{:02}:00Z", rng.gen_range(0..24), rng.gen_range(0..60));
                    let phrase = (topic == 1).then_some("social distancing");
                    let body = text(&mut rng, vocabs[topic], phrase);
                    let region = REGIONS.choose(&mut rng).unwrap();
                    if kept_texts.len() < 20 && rng.gen_bool(0.01) {
                        kept_texts.push((ts.clone(), body.clone()));
                    }
                    push(&mut tweets, ts, body, region, sentiment.to_string())?;
                }
            }
        }
    }
    // Rows the selection rules must drop.
    for (ts, body) in &kept_texts {
        push(&mut tweets, ts.clone(), body.clone(), "Riverton", "1".into())?;
    }
    for i in 0..10 {
        let day = start + Duration::days(10 + i);
        push(&mut tweets, format!("{day}T12:00:00Z"), "fever cough again today".into(), "Lakeside", "0".into())?;
        push(&mut tweets, format!("{day}T13:00:00Z"), text(&mut rng, &SYMPTOMS, None), "", "0".into())?;
    }
    // Rows the parser must reject.
    push(&mut tweets, "not-a-date".into(), text(&mut rng, &POLICY, None), "Riverton", "1".into())?;
    push(&mut tweets, "2021-03-05T10:00:00Z".into(), text(&mut rng, &POLICY, None), "Riverton", "7".into())?;
    push(&mut tweets, "2020-12-31T10:00:00Z".into(), text(&mut rng, &VACCINE, None), "Riverton", "2".into())?;
    push(&mut tweets, "2021-12-31T10:00:00Z".into(), text(&mut rng, &VACCINE, None), "Riverton", "2".into())?;
    tweets.write_record(["", "2021-03-05T10:00:00Z", "no id here", "Riverton", "", "1"])?;
    tweets.write_record(["1", "2021-03-05T10:00:00Z", "reused id", "Riverton", "", "1"])?;
    tweets.flush()?;

    let noise = Normal::new(0.0, 5.0).unwrap();
    let mut cases = File::create(out.join("cases.csv"))?;
    writeln!(cases, "date,new_cases")?;
    for t in 0..days {
        let lag = |k: usize| if t >= k { driver[t - k] as f64 } else { 15.0 };
        let y = 40.0 + 4.0 * lag(1) + 3.0 * lag(2) + 2.0 * lag(3) + noise.sample(&mut rng);
        writeln!(cases, "{},{}", start + Duration::days(t as i64), y.round().max(0.0))?;
    }
    Ok(())
}
