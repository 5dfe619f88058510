//! Deterministic synthetic data.
//!
//! [`generate`] writes a small four-region world (two countries with two
//! regions each, 60 days, roughly 500 articles) in the real input formats:
//!
//! - Aldoria: article volume follows daily new cases (coupled);
//! - Brevia: cases arrive in the first week, articles only near the end
//!   (decoupled);
//! - Calmora, Dunmere: background activity, Calmora with one reporting
//!   correction in its raw case file.
//!
//! Four outage dates carry no articles anywhere. The generator records the
//! coefficients it planted, computed with its own direct formula over the
//! series it chose, so tests can check recovery through the full pipeline.
//!
//! [`large_inputs`] builds a random index-sized workload for performance
//! checks.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cases::{format_case_date, CaseSeries};
use crate::corpus::{GeocodedKeyword, SourceType};
use crate::gazetteer::{AdminLevel, Gazetteer, GazetteerEntry};
use crate::geo::{GeoPoint, LocationId};

pub const FIXTURE_SEED: u64 = 20_200_122;
pub const FIXTURE_DAYS: usize = 60;
pub const KEYWORDS_PER_ARTICLE: usize = 10;

const FILLER: [&str; 60] = [
    "hospital", "update", "officials", "reported", "testing", "schools", "market", "travel",
    "masks", "vaccine", "border", "patients", "doctors", "health", "ministry", "quarantine",
    "economy", "workers", "response", "supplies", "clinic", "nurses", "study", "research",
    "measures", "restrictions", "flights", "shops", "churches", "events", "concert", "football",
    "weather", "harvest", "festival", "election", "parliament", "budget", "tourism", "exports",
    "factory", "shipping", "railway", "bridge", "library", "museum", "theatre", "garden",
    "river", "mountain", "village", "council", "police", "court", "teachers", "students",
    "farmers", "fishermen", "bakery", "airport",
];

struct Region {
    id: u64,
    name: &'static str,
    country: &'static str,
    parent: u64,
    lat: f64,
    lon: f64,
    adjacent: &'static [u64],
    population: u64,
    area: f64,
}

const COUNTRIES: [(u64, &str, f64, f64, u64, f64); 2] = [
    (1, "Norland", 60.0, 10.0, 9_000_000, 320_000.0),
    (2, "Sudland", -30.0, 25.0, 14_000_000, 510_000.0),
];

const REGIONS: [Region; 4] = [
    Region { id: 11, name: "Aldoria", country: "Norland", parent: 1, lat: 61.2, lon: 8.4, adjacent: &[12], population: 5_200_000, area: 140_000.0 },
    Region { id: 12, name: "Brevia", country: "Norland", parent: 1, lat: 58.7, lon: 13.9, adjacent: &[], population: 3_800_000, area: 180_000.0 },
    Region { id: 21, name: "Calmora", country: "Sudland", parent: 2, lat: -28.4, lon: 22.1, adjacent: &[22], population: 8_100_000, area: 260_000.0 },
    Region { id: 22, name: "Dunmere", country: "Sudland", parent: 2, lat: -33.1, lon: 27.6, adjacent: &[], population: 5_900_000, area: 250_000.0 },
];

/// What the generator planted, for the tests that must recover it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: usize,
    pub query_terms: Vec<String>,
    pub gap_dates: Vec<NaiveDate>,
    pub coupled_region: String,
    pub decoupled_region: String,
    pub coupled_filtered_r: f64,
    pub coupled_unfiltered_r: f64,
    pub decoupled_filtered_r: f64,
    pub decoupled_unfiltered_r: f64,
    pub articles: usize,
    pub tweets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub gazetteer_jsonl: String,
    pub documents_jsonl: String,
    pub confirmed_csv: String,
    pub deaths_csv: String,
    pub recovered_csv: String,
    pub planted: Planted,
}

impl SyntheticCorpus {
    pub const FILES: [&'static str; 6] = [
        "gazetteer.jsonl",
        "documents.jsonl",
        "confirmed.csv",
        "deaths.csv",
        "recovered.csv",
        "planted.json",
    ];

    pub fn file_contents(&self) -> [(&'static str, String); 6] {
        [
            (Self::FILES[0], self.gazetteer_jsonl.clone()),
            (Self::FILES[1], self.documents_jsonl.clone()),
            (Self::FILES[2], self.confirmed_csv.clone()),
            (Self::FILES[3], self.deaths_csv.clone()),
            (Self::FILES[4], self.recovered_csv.clone()),
            (
                Self::FILES[5],
                serde_json::to_string_pretty(&self.planted).expect("planted serializes") + "\n",
            ),
        ]
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in self.file_contents() {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Direct two-pass correlation used only to record planted values.
fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn running_total(daily: &[u64]) -> Vec<f64> {
    let mut acc = 0u64;
    daily
        .iter()
        .map(|d| {
            acc += d;
            acc as f64
        })
        .collect()
}

fn planted_r(articles: &[u64], cases: &[u64], gaps: &[usize]) -> f64 {
    let (x, y) = (running_total(articles), running_total(cases));
    let keep = |i: &usize| !gaps.contains(i);
    let xs: Vec<f64> = (0..x.len()).filter(keep).map(|i| x[i]).collect();
    let ys: Vec<f64> = (0..y.len()).filter(keep).map(|i| y[i]).collect();
    direct_pearson(&xs, &ys)
}

fn logistic(cap: f64, mid: f64, scale: f64, t: usize) -> u64 {
    (cap / (1.0 + (-(t as f64 - mid) / scale).exp())).round() as u64
}

fn diff(cum: &[u64]) -> Vec<u64> {
    let mut prev = 0;
    cum.iter()
        .map(|&c| {
            let d = c - prev;
            prev = c;
            d
        })
        .collect()
}

struct Plan {
    /// cumulative confirmed per region (clean)
    confirmed: Vec<Vec<u64>>,
    /// articles mentioning the query term, per region per day
    on_topic: Vec<Vec<u64>>,
    /// articles without it
    off_topic: Vec<Vec<u64>>,
}

fn plan(rng: &mut ChaCha8Rng, gaps: &[usize]) -> Plan {
    let days = FIXTURE_DAYS;
    let mut confirmed: Vec<Vec<u64>> = Vec::new();
    let mut on_topic: Vec<Vec<u64>> = Vec::new();
    let mut off_topic: Vec<Vec<u64>> = Vec::new();

    // Aldoria: articles track new cases
    let cum: Vec<u64> = (0..days).map(|t| logistic(4000.0, 28.0, 5.0, t)).collect();
    let new = diff(&cum);
    on_topic.push(
        new.iter()
            .map(|&n| (n as f64 * 0.06 + rng.gen_range(0.0..1.5)).floor() as u64)
            .collect(),
    );
    off_topic.push((0..days).map(|_| rng.gen_bool(0.25) as u64).collect());
    confirmed.push(cum);

    // Brevia: cases early, coverage late
    let mut total = 0u64;
    let cum: Vec<u64> = (0..days)
        .map(|t| {
            total += if t < 6 {
                rng.gen_range(60..100)
            } else {
                rng.gen_bool(0.2) as u64
            };
            total
        })
        .collect();
    on_topic.push(
        (0..days)
            .map(|t| if t >= 48 { rng.gen_range(3..7) } else { 0 })
            .collect(),
    );
    off_topic.push(
        (0..days)
            .map(|t| if t >= 45 { rng.gen_bool(0.5) as u64 } else { 0 })
            .collect(),
    );
    confirmed.push(cum);

    // Calmora, Dunmere: background
    confirmed.push((0..days).map(|t| logistic(1500.0, 40.0, 6.0, t)).collect());
    confirmed.push((0..days).map(|t| 20 * t as u64 + 5).collect());
    for _ in 0..2 {
        on_topic.push((0..days).map(|_| rng.gen_range(0..3)).collect());
        off_topic.push((0..days).map(|_| rng.gen_range(0..2)).collect());
    }

    for series in on_topic.iter_mut().chain(off_topic.iter_mut()) {
        for &g in gaps {
            series[g] = 0;
        }
    }
    Plan {
        confirmed,
        on_topic,
        off_topic,
    }
}

fn article_body(rng: &mut ChaCha8Rng, region: &str, on_topic: bool) -> String {
    let mut words: Vec<&str> = Vec::with_capacity(KEYWORDS_PER_ARTICLE);
    words.push(region);
    if on_topic {
        words.push("coronavirus");
    }
    while words.len() < KEYWORDS_PER_ARTICLE {
        let w = FILLER[rng.gen_range(0..FILLER.len())];
        if !words.contains(&w) {
            words.push(w);
        }
    }
    // shuffle everything but keep the text readable-ish
    for i in (1..words.len()).rev() {
        let j = rng.gen_range(0..=i);
        words.swap(i, j);
    }
    words.join(" ")
}

fn case_csv(start: NaiveDate, rows: &[(&Region, Vec<u64>)]) -> String {
    let mut out = String::from("Province/State,Country/Region,Lat,Long");
    let days = rows.first().map_or(0, |r| r.1.len());
    for t in 0..days {
        write!(out, ",{}", format_case_date(start + Duration::days(t as i64))).unwrap();
    }
    out.push('\n');
    for (r, values) in rows {
        write!(out, "{},{},{},{}", r.name, r.country, r.lat, r.lon).unwrap();
        for v in values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn gazetteer_jsonl() -> String {
    let mut out = String::new();
    for (id, name, lat, lon, pop, area) in COUNTRIES {
        out.push_str(
            &serde_json::json!({"id": id, "name": name, "alt_names": [], "lat": lat, "lon": lon,
                "admin_level": "country", "parent": null, "adjacent": [], "population": pop,
                "area_km2": area})
            .to_string(),
        );
        out.push('\n');
    }
    for r in &REGIONS {
        out.push_str(
            &serde_json::json!({"id": r.id, "name": r.name, "alt_names": [], "lat": r.lat,
                "lon": r.lon, "admin_level": "state", "parent": r.parent, "adjacent": r.adjacent,
                "population": r.population, "area_km2": r.area})
            .to_string(),
        );
        out.push('\n');
    }
    out
}

fn try_generate(seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();
    let gap_days: Vec<usize> = vec![23, 24, 25, 47];
    let plan = plan(&mut rng, &gap_days);

    let mut docs = String::new();
    let mut articles = 0;
    for (ri, region) in REGIONS.iter().enumerate() {
        for t in 0..FIXTURE_DAYS {
            let n_on = plan.on_topic[ri][t];
            let n_off = plan.off_topic[ri][t];
            for k in 0..(n_on + n_off) {
                let on = k < n_on;
                let at = Utc.from_utc_datetime(&(start + Duration::days(t as i64)).and_hms_opt(0, 0, 0).unwrap())
                    + Duration::minutes(rng.gen_range(0..24 * 60));
                articles += 1;
                docs.push_str(
                    &serde_json::json!({
                        "id": format!("news-{articles:05}"),
                        "source_type": "news",
                        "title": "",
                        "body": article_body(&mut rng, region.name, on),
                        "published_at": at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        "url": format!("https://news.example/{}/{articles}", region.name.to_lowercase()),
                    })
                    .to_string(),
                );
                docs.push('\n');
            }
        }
    }

    let tweet_texts = [
        "stay safe everyone #coronavirus",
        "new covid-19 rules announced",
        "lovely weather at the river today",
        "#COVID-19 testing queue is long",
    ];
    let mut tweets = 0;
    for i in 0..40 {
        let region = &REGIONS[i % REGIONS.len()];
        let t = rng.gen_range(0..FIXTURE_DAYS);
        if gap_days.contains(&t) {
            continue;
        }
        let at = Utc.from_utc_datetime(&(start + Duration::days(t as i64)).and_hms_opt(12, 0, 0).unwrap());
        let geotag = (i % 10 != 9).then(|| {
            serde_json::json!({"lat": region.lat + rng.gen_range(-0.3..0.3),
                               "lon": region.lon + rng.gen_range(-0.3..0.3)})
        });
        tweets += 1;
        let mut doc = serde_json::json!({
            "id": format!("tweet-{tweets:04}"),
            "source_type": "tweet",
            "title": "",
            "body": tweet_texts[rng.gen_range(0..tweet_texts.len())],
            "published_at": at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        });
        if let Some(tag) = geotag {
            doc["geotag"] = tag;
        }
        docs.push_str(&doc.to_string());
        docs.push('\n');
    }

    // case files; Calmora's raw confirmed has one reporting correction
    let mut raw_confirmed = plan.confirmed.clone();
    raw_confirmed[2][35] = raw_confirmed[2][35].saturating_sub(12);
    let confirmed_rows: Vec<(&Region, Vec<u64>)> = REGIONS.iter().zip(raw_confirmed).collect();
    let deaths_rows: Vec<(&Region, Vec<u64>)> = REGIONS
        .iter()
        .zip(&plan.confirmed)
        .map(|(r, c)| (r, c.iter().map(|v| v * 3 / 100).collect()))
        .collect();
    // Brevia does not report recoveries
    let recovered_rows: Vec<(&Region, Vec<u64>)> = REGIONS
        .iter()
        .zip(&plan.confirmed)
        .filter(|(r, _)| r.name != "Brevia")
        .map(|(r, c)| {
            (r, (0..c.len()).map(|t| if t >= 14 { c[t - 14] * 7 / 10 } else { 0 }).collect())
        })
        .collect();

    let new_cases: Vec<Vec<u64>> = plan.confirmed.iter().map(|c| diff(c)).collect();
    let per_doc = KEYWORDS_PER_ARTICLE as u64;
    let unfiltered = |ri: usize| -> Vec<u64> {
        (0..FIXTURE_DAYS)
            .map(|t| per_doc * (plan.on_topic[ri][t] + plan.off_topic[ri][t]))
            .collect()
    };

    SyntheticCorpus {
        gazetteer_jsonl: gazetteer_jsonl(),
        documents_jsonl: docs,
        confirmed_csv: case_csv(start, &confirmed_rows),
        deaths_csv: case_csv(start, &deaths_rows),
        recovered_csv: case_csv(start, &recovered_rows),
        planted: Planted {
            seed,
            start,
            days: FIXTURE_DAYS,
            query_terms: vec!["coronavirus".into(), "covid-19".into()],
            gap_dates: gap_days.iter().map(|&g| start + Duration::days(g as i64)).collect(),
            coupled_region: REGIONS[0].name.into(),
            decoupled_region: REGIONS[1].name.into(),
            coupled_filtered_r: planted_r(&plan.on_topic[0], &new_cases[0], &gap_days),
            coupled_unfiltered_r: planted_r(&unfiltered(0), &new_cases[0], &gap_days),
            decoupled_filtered_r: planted_r(&plan.on_topic[1], &new_cases[1], &gap_days),
            decoupled_unfiltered_r: planted_r(&unfiltered(1), &new_cases[1], &gap_days),
            articles,
            tweets,
        },
    }
}

/// The bundled fixture. Seeds are advanced until the decoupled region's
/// planted coefficients are below 0.3 in magnitude.
pub fn generate(seed: u64) -> SyntheticCorpus {
    (seed..)
        .map(try_generate)
        .find(|c| c.planted.decoupled_filtered_r.abs() < 0.3 && c.planted.decoupled_unfiltered_r.abs() < 0.3)
        .expect("some seed satisfies the decoupling bound")
}

/// Random inputs for a large index.
pub struct LargeInputs {
    pub gazetteer: Gazetteer,
    pub cases: Vec<CaseSeries>,
    pub records: Vec<GeocodedKeyword>,
}

/// `locations` places (100 countries, the rest cities) over `days` days.
pub fn large_inputs(locations: usize, days: usize, seed: u64) -> LargeInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let countries = locations.clamp(1, 100);
    let mut entries = Vec::with_capacity(locations);
    for i in 0..locations {
        let id = LocationId(i as u64 + 1);
        let country = i < countries;
        entries.push(GazetteerEntry {
            id,
            canonical_name: format!("place-{}", i + 1),
            alt_names: Vec::new(),
            point: GeoPoint::new(rng.gen_range(-60.0..70.0), rng.gen_range(-180.0..180.0)).unwrap(),
            admin_level: if country { AdminLevel::Country } else { AdminLevel::City },
            parent: (!country).then(|| LocationId(rng.gen_range(1..=countries as u64))),
            adjacent: Vec::new(),
            population: rng.gen_range(1_000..5_000_000),
            area_km2: Some(rng.gen_range(10.0..50_000.0)),
        });
    }
    let gazetteer = Gazetteer::from_entries(entries).expect("generated gazetteer is valid");
    let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();

    let mut cases = Vec::new();
    let mut records = Vec::new();
    for e in gazetteer.entries() {
        if rng.gen_bool(0.7) {
            let rate = rng.gen_range(0..20u64);
            let mut c = 0;
            let mut confirmed = Vec::with_capacity(days);
            for _ in 0..days {
                c += rng.gen_range(0..=rate);
                confirmed.push(c);
            }
            let deaths = confirmed.iter().map(|v| v / 40).collect();
            let recovered = confirmed.iter().map(|v| v / 2).collect();
            cases.push(CaseSeries {
                location: e.id,
                start,
                confirmed,
                deaths,
                recovered,
            });
        }
        if rng.gen_bool(0.3) {
            for t in 0..days {
                for _ in 0..rng.gen_range(0..3) {
                    let keyword = ["coronavirus", "covid-19", "lockdown", "economy"][rng.gen_range(0..4)];
                    records.push(GeocodedKeyword {
                        keyword: keyword.into(),
                        location: e.id,
                        timestamp: Utc.from_utc_datetime(&(start + Duration::days(t as i64)).and_hms_opt(9, 0, 0).unwrap()),
                        source_type: if rng.gen_bool(0.8) { SourceType::News } else { SourceType::Tweet },
                        document: format!("d{}-{t}", e.id),
                    });
                }
            }
        }
    }
    LargeInputs {
        gazetteer,
        cases,
        records,
    }
}
