//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.
//!
//! ```text
//! cargo test -p epimap-service --test acceptance
//! ```

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::net::TcpStream;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use epimap::cases::CaseSeries;
use epimap::corpus::{GeocodedKeyword, SourceType};
use epimap::correlation::{evaluate_area, pearson, Area, DocFilter};
use epimap::gazetteer::{AdminLevel, Gazetteer, GazetteerEntry};
use epimap::geo::haversine_distance;
use epimap::index::{cluster_markers, AggregateMode};
use epimap::layout::{marker_color, marker_radius, MarkerColor};
use epimap::synth::{large_inputs, Planted};
use epimap::{GeoPoint, LocationId, StIndex, TimeWindow, VariableKind};
use epimap_service::{router, IndexSlot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("pearson-oracle", pearson_oracle),
        ("planted-recovery", planted_recovery),
        ("gap-date-exclusion", gap_date_exclusion),
        ("radius-color-law", radius_color_law),
        ("zoom-refinement", zoom_refinement),
        ("aggregation-consistency", aggregation_consistency),
        ("pick-oracle", pick_oracle),
        ("cross-product-determinism", cross_product_determinism),
        ("frames-p95-latency", frames_latency),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {name:<26} {} [{:.2?}]", o.detail, started.elapsed());
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

/// Two-pass textbook formula.
fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
        sx += (x[i] - mx) * (x[i] - mx);
        sy += (y[i] - my) * (y[i] - my);
    }
    num / (sx * sy).sqrt()
}

fn pearson_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst, mut worst_affine) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=10_000);
        let coupling: f64 = rng.gen_range(-1.0..1.0);
        let offset = rng.gen_range(-1e3..1e3);
        let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
        let x: Vec<f64> = (0..n).map(|_| offset + scale * rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| coupling * (v - offset) / scale + rng.gen_range(-1.0..1.0))
            .collect();
        let r = pearson(&x, &y).expect("random series have variance");
        worst = worst.max((r - naive_pearson(&x, &y)).abs());

        // affine maps on a well-conditioned copy
        let xs: Vec<f64> = x.iter().map(|v| (v - offset) / scale).collect();
        let base = pearson(&xs, &y).unwrap();
        let (a, b) = (rng.gen_range(0.5..4.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 }, rng.gen_range(-10.0..10.0));
        let (c, d) = (rng.gen_range(0.5..4.0), rng.gen_range(-10.0..10.0));
        let xa: Vec<f64> = xs.iter().map(|v| a * v + b).collect();
        let ya: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        let moved = pearson(&xa, &ya).unwrap();
        worst_affine = worst_affine.max((moved - a.signum() * base).abs());
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-9 && worst_affine <= 1e-12 && elapsed < StdDuration::from_secs(10),
        format!("max |impl-oracle| {worst:.1e} (<=1e-9), max affine drift {worst_affine:.1e} (<=1e-12), {elapsed:.2?} (<10s)"),
    )
}

fn planted() -> Planted {
    serde_json::from_str(&std::fs::read_to_string(common::fixture_dir("synthetic").join("planted.json")).unwrap()).unwrap()
}

fn planted_recovery() -> Outcome {
    let started = Instant::now();
    let idx = common::snapshot("synthetic", 0).build().unwrap();
    let p = planted();
    let gaps: BTreeSet<NaiveDate> = p.gap_dates.iter().copied().collect();
    let terms = DocFilter::Terms(p.query_terms.clone());
    let r = |region: &str, f: &DocFilter| {
        evaluate_area(&idx, Area::parse(region, &idx).unwrap(), f, &gaps).unwrap().coefficient
    };
    let a_f = r(&p.coupled_region, &terms);
    let a_u = r(&p.coupled_region, &DocFilter::None);
    let b_f = r(&p.decoupled_region, &terms);
    let b_u = r(&p.decoupled_region, &DocFilter::None);
    let elapsed = started.elapsed();
    let pass = (a_f - p.coupled_filtered_r).abs() <= 0.1
        && (a_u - p.coupled_unfiltered_r).abs() <= 0.1
        && b_f.abs() < 0.3
        && b_u.abs() < 0.3
        && elapsed < StdDuration::from_secs(5);
    outcome(
        pass,
        format!(
            "A filtered {a_f:.4} (planted {:.4}), A unfiltered {a_u:.4} (planted {:.4}), B filtered {b_f:.4}, B unfiltered {b_u:.4}, {elapsed:.2?} (<5s)",
            p.coupled_filtered_r, p.coupled_unfiltered_r
        ),
    )
}

/// Raw per-region daily series read straight from the fixture files.
struct RawFixture {
    start: NaiveDate,
    days: usize,
    /// region -> daily on-topic articles, daily keyword records
    articles: HashMap<String, (Vec<f64>, Vec<f64>)>,
    confirmed: HashMap<String, Vec<f64>>,
}

fn raw_fixture() -> RawFixture {
    let dir = common::fixture_dir("synthetic");
    let p = planted();
    let regions = ["Aldoria", "Brevia", "Calmora", "Dunmere"];
    let mut articles: HashMap<String, (Vec<f64>, Vec<f64>)> = regions
        .iter()
        .map(|r| (r.to_string(), (vec![0.0; p.days], vec![0.0; p.days])))
        .collect();
    for line in std::fs::read_to_string(dir.join("documents.jsonl")).unwrap().lines() {
        let doc: Value = serde_json::from_str(line).unwrap();
        if doc["source_type"] != "news" {
            continue;
        }
        let body = doc["body"].as_str().unwrap();
        let words: BTreeSet<String> = body.split_whitespace().map(str::to_lowercase).collect();
        let date = NaiveDate::parse_from_str(&doc["published_at"].as_str().unwrap()[..10], "%Y-%m-%d").unwrap();
        let day = (date - p.start).num_days() as usize;
        let region = regions.iter().find(|r| words.contains(&r.to_lowercase())).unwrap();
        let e = articles.get_mut(*region).unwrap();
        if p.query_terms.iter().any(|t| words.contains(t)) {
            e.0[day] += 1.0;
        }
        e.1[day] += words.len().min(10) as f64;
    }
    let mut confirmed = HashMap::new();
    for line in std::fs::read_to_string(dir.join("confirmed.csv")).unwrap().lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let levels: Vec<f64> = cells[4..].iter().map(|c| c.parse().unwrap()).collect();
        confirmed.insert(cells[0].to_string(), levels);
    }
    RawFixture {
        start: p.start,
        days: p.days,
        articles,
        confirmed,
    }
}

fn running(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn gap_date_exclusion() -> Outcome {
    let idx = common::snapshot("synthetic", 0).build().unwrap();
    let raw = raw_fixture();
    let p = planted();
    let gaps: BTreeSet<NaiveDate> = p.gap_dates.iter().copied().collect();
    let gap_days: BTreeSet<usize> = gaps.iter().map(|d| (*d - raw.start).num_days() as usize).collect();

    // the outage dates really are empty in the raw corpus
    let empty = raw
        .articles
        .values()
        .all(|(_, all)| gap_days.iter().all(|&d| all[d] == 0.0));

    let mut worst = 0.0f64;
    let mut checked = 0;
    let terms = DocFilter::Terms(p.query_terms.clone());
    // Calmora's raw file carries a reporting correction; compare the clean rows
    for region in ["Aldoria", "Brevia", "Dunmere"] {
        let cases = &raw.confirmed[region];
        let (on_topic, all) = &raw.articles[region];
        for (filter, daily) in [(&terms, on_topic), (&DocFilter::None, all)] {
            let x = running(daily);
            let keep: Vec<usize> = (0..raw.days).filter(|d| !gap_days.contains(d)).collect();
            let oracle_full = naive_pearson(&x, cases);
            let xs: Vec<f64> = keep.iter().map(|&d| x[d]).collect();
            let ys: Vec<f64> = keep.iter().map(|&d| cases[d]).collect();
            let oracle_excl = naive_pearson(&xs, &ys);

            let area = Area::parse(region, &idx).unwrap();
            let full = evaluate_area(&idx, area, filter, &BTreeSet::new()).unwrap().coefficient;
            let excl = evaluate_area(&idx, area, filter, &gaps).unwrap().coefficient;
            worst = worst
                .max((full - oracle_full).abs())
                .max((excl - oracle_excl).abs())
                .max(((excl - full) - (oracle_excl - oracle_full)).abs());
            checked += 1;
        }
    }
    outcome(
        empty && worst <= 1e-9,
        format!("{checked} region/filter pairs, gap dates empty: {empty}, max deviation {worst:.1e} (<=1e-9)"),
    )
}

fn radius_color_law() -> Outcome {
    let r1 = marker_radius(1.0).unwrap();
    let r8 = marker_radius(8.0).unwrap();
    let colors = [10.0, 11.0, 100.0, 101.0].map(marker_color);
    let pass = r1 == 40.0
        && r8 == 56.0
        && colors == [MarkerColor::Green, MarkerColor::Yellow, MarkerColor::Yellow, MarkerColor::Red];
    outcome(pass, format!("r(1)={r1}, r(8)={r8}, colors at 10/11/100/101 = {colors:?}"))
}

/// Cell index by repeated halving of the coordinate range.
fn bisect(value: f64, lo: f64, hi: f64, zoom: u8) -> u64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut idx = 0u64;
    for _ in 0..zoom {
        let mid = (lo + hi) / 2.0;
        idx <<= 1;
        if value >= mid {
            idx |= 1;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    idx
}

fn zoom_refinement() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<(LocationId, GeoPoint, f64)> = (0..10_000u64)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0)).unwrap();
            (LocationId(i + 1), p, rng.gen_range(1..1000) as f64)
        })
        .collect();
    let oracle_key = |p: GeoPoint, z: u8| (bisect(p.lat(), -90.0, 90.0, z) << z) | bisect(p.lon(), -180.0, 180.0, z);

    let entries: Vec<GazetteerEntry> = points
        .iter()
        .map(|(id, p, _)| GazetteerEntry {
            id: *id,
            canonical_name: format!("p{}", id.0),
            alt_names: Vec::new(),
            point: *p,
            admin_level: AdminLevel::Country,
            parent: None,
            adjacent: Vec::new(),
            population: 1,
            area_km2: None,
        })
        .collect();
    let g = Gazetteer::from_entries(entries).unwrap();
    let idx = StIndex::build(&[], &[], &[], &g, 12).unwrap();

    let mut problems = Vec::new();
    let mut previous: Option<Vec<epimap::index::Marker>> = None;
    for z in 0..=12u8 {
        // index membership against the oracle
        let cells = idx.cells(z).unwrap();
        let mut assigned = 0;
        for (key, members) in &cells {
            for id in members {
                assigned += 1;
                let p = points[(id.0 - 1) as usize].1;
                if oracle_key(p, z) != *key {
                    problems.push(format!("zoom {z}: {id:?} in cell {key}, oracle {}", oracle_key(p, z)));
                }
            }
        }
        if assigned != points.len() {
            problems.push(format!("zoom {z}: {assigned} memberships for {} points", points.len()));
        }

        let markers = cluster_markers(&points, z, VariableKind::Confirmed);
        for m in &markers {
            for id in &m.locations {
                if oracle_key(points[(id.0 - 1) as usize].1, z) != m.cell {
                    problems.push(format!("zoom {z}: marker {} holds {id:?}", m.cell));
                }
            }
        }
        if let Some(parents) = &previous {
            // children grouped under their parent cell must reproduce it exactly
            let mut grouped: BTreeMap<u64, (BTreeSet<LocationId>, f64)> = BTreeMap::new();
            for m in &markers {
                let (row, col) = (m.cell >> z, m.cell & ((1 << z) - 1));
                let parent = ((row >> 1) << (z - 1)) | (col >> 1);
                let e = grouped.entry(parent).or_default();
                for id in &m.locations {
                    if !e.0.insert(*id) {
                        problems.push(format!("zoom {z}: {id:?} in two children"));
                    }
                }
                e.1 += m.count;
            }
            if grouped.len() != parents.len() {
                problems.push(format!("zoom {z}: {} parent groups vs {} parents", grouped.len(), parents.len()));
            }
            for pm in parents {
                match grouped.get(&pm.cell) {
                    Some((ids, count)) => {
                        let want: BTreeSet<LocationId> = pm.locations.iter().copied().collect();
                        if *ids != want || *count != pm.count {
                            problems.push(format!("zoom {z}: children of {} differ", pm.cell));
                        }
                    }
                    None => problems.push(format!("zoom {z}: parent {} has no children", pm.cell)),
                }
            }
        }
        previous = Some(markers);
    }
    let elapsed = started.elapsed();
    outcome(
        problems.is_empty() && elapsed < StdDuration::from_secs(30),
        format!(
            "10^4 points, zooms 0..12, {} violations{}, {elapsed:.2?} (<30s)",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn midnight(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap())
}

fn day_window(start: NaiveDate, a: i64, b: i64) -> TimeWindow {
    TimeWindow::new(midnight(start + Duration::days(a)), midnight(start + Duration::days(b + 1))).unwrap()
}

fn aggregation_consistency() -> Outcome {
    const DAYS: usize = 60;
    let inputs = large_inputs(1000, DAYS, 21);
    let idx = StIndex::build(&inputs.cases, &inputs.records, &[], &inputs.gazetteer, 8).unwrap();
    let start = idx.start_date().unwrap();
    let ids: Vec<LocationId> = idx.location_ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let additive = [
        VariableKind::Confirmed,
        VariableKind::Deaths,
        VariableKind::Recovered,
        VariableKind::NewsCount,
        VariableKind::TweetCount,
    ];
    let mut mismatches = 0;
    for _ in 0..1000 {
        let loc = ids[rng.gen_range(0..ids.len())];
        let a = rng.gen_range(-5..DAYS as i64 + 5);
        let b = a + rng.gen_range(0..30);
        for v in additive {
            let instant = idx.aggregate_window(loc, v, &day_window(start, a, b), AggregateMode::Instant).unwrap();
            let cum = |d: i64| idx.aggregate_window(loc, v, &day_window(start, d, d), AggregateMode::Cumulative).unwrap();
            let daily_sum: f64 = (a..=b)
                .map(|d| idx.aggregate_window(loc, v, &day_window(start, d, d), AggregateMode::Instant).unwrap())
                .sum();
            if instant != cum(b) - cum(a - 1) || instant != daily_sum {
                mismatches += 1;
            }
        }
    }

    // constant daily inflow, constant active level, constant article rate
    let g = Gazetteer::from_entries(vec![GazetteerEntry {
        id: LocationId(1),
        canonical_name: "Flatland".into(),
        alt_names: Vec::new(),
        point: GeoPoint::new(0.0, 0.0).unwrap(),
        admin_level: AdminLevel::Country,
        parent: None,
        adjacent: Vec::new(),
        population: 1,
        area_km2: None,
    }])
    .unwrap();
    let (rate, level, per_day) = (13u64, 250u64, 3usize);
    let confirmed: Vec<u64> = (0..DAYS as u64).map(|t| level + rate * (t + 1)).collect();
    let recovered: Vec<u64> = (0..DAYS as u64).map(|t| rate * (t + 1)).collect();
    let series = CaseSeries {
        location: LocationId(1),
        start,
        deaths: vec![0; DAYS],
        confirmed,
        recovered,
    };
    let records: Vec<GeocodedKeyword> = (0..DAYS)
        .flat_map(|t| {
            (0..per_day).map(move |k| GeocodedKeyword {
                keyword: "flat".into(),
                location: LocationId(1),
                timestamp: midnight(start + Duration::days(t as i64)) + Duration::hours(k as i64),
                source_type: SourceType::News,
                document: format!("d{t}-{k}"),
            })
        })
        .collect();
    let flat = StIndex::build(&[series], &records, &[], &g, 2).unwrap();
    let mut rolling_bad = 0;
    for end in 7..DAYS as i64 {
        let w = day_window(start, end, end);
        let got = |v| flat.aggregate_window(LocationId(1), v, &w, AggregateMode::RollingAverage(7)).unwrap();
        rolling_bad += (got(VariableKind::Active) != level as f64) as usize;
        rolling_bad += (got(VariableKind::NewsCount) != per_day as f64) as usize;
        rolling_bad += (got(VariableKind::Recovered) != rate as f64) as usize;
    }
    outcome(
        mismatches == 0 && rolling_bad == 0,
        format!("10^3 pairs x 5 additive variables: {mismatches} mismatches; rolling(7) of constants: {rolling_bad} mismatches"),
    )
}

/// Window value of one variable computed from the raw inputs.
fn raw_value(
    cases: &HashMap<LocationId, &CaseSeries>,
    events: &HashMap<(LocationId, SourceType), Vec<i64>>,
    id: LocationId,
    v: VariableKind,
    a: i64,
    b: i64,
) -> f64 {
    let n = |s: &CaseSeries| s.len() as i64;
    let level = |s: &[u64], d: i64, len: i64| -> u64 {
        if d < 0 {
            0
        } else {
            s[d.min(len - 1) as usize]
        }
    };
    match v {
        VariableKind::Confirmed | VariableKind::Deaths | VariableKind::Recovered => {
            let Some(s) = cases.get(&id) else { return 0.0 };
            let col = match v {
                VariableKind::Confirmed => &s.confirmed,
                VariableKind::Deaths => &s.deaths,
                _ => &s.recovered,
            };
            let (lo, hi) = (a.max(0), b.min(n(s) - 1));
            if lo > hi {
                return 0.0;
            }
            (level(col, hi, n(s)) - level(col, lo - 1, n(s))) as f64
        }
        VariableKind::Active => {
            let Some(s) = cases.get(&id) else { return 0.0 };
            let len = n(s);
            (level(&s.confirmed, b, len) - level(&s.deaths, b, len) - level(&s.recovered, b, len)) as f64
        }
        VariableKind::NewsCount | VariableKind::TweetCount => {
            let src = if v == VariableKind::NewsCount { SourceType::News } else { SourceType::Tweet };
            events
                .get(&(id, src))
                .map_or(0, |days| days.iter().filter(|&&d| d >= a && d <= b).count()) as f64
        }
    }
}

fn pick_oracle() -> Outcome {
    const DAYS: usize = 50;
    let inputs = large_inputs(2000, DAYS, 33);
    let idx = StIndex::build(&inputs.cases, &inputs.records, &[], &inputs.gazetteer, 10).unwrap();
    let start = idx.start_date().unwrap();
    let cases: HashMap<LocationId, &CaseSeries> = inputs.cases.iter().map(|c| (c.location, c)).collect();
    let mut events: HashMap<(LocationId, SourceType), Vec<i64>> = HashMap::new();
    for r in &inputs.records {
        events
            .entry((r.location, r.source_type))
            .or_default()
            .push((r.timestamp.date_naive() - start).num_days());
    }
    let points: Vec<(LocationId, GeoPoint)> = inputs.gazetteer.entries().iter().map(|e| (e.id, e.point)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut agree, mut empty) = (0, 0);
    let mut first_bad = None;
    for q in 0..1000 {
        let p = GeoPoint::new(rng.gen_range(-90.0..90.0), rng.gen_range(-180.0..180.0)).unwrap();
        let a = rng.gen_range(-5..DAYS as i64);
        let b = a + rng.gen_range(0..10);
        let active: Vec<VariableKind> = VariableKind::ALL.into_iter().filter(|_| rng.gen_bool(0.3)).collect();
        let active = if active.is_empty() { vec![VariableKind::TweetCount] } else { active };

        let mut best: Option<(LocationId, f64)> = None;
        for (id, loc) in &points {
            if !active.iter().any(|&v| raw_value(&cases, &events, *id, v, a, b) != 0.0) {
                continue;
            }
            let d = haversine_distance(p, *loc);
            if best.is_none_or(|(bid, bd)| d < bd || (d == bd && *id < bid)) {
                best = Some((*id, d));
            }
        }
        let got = idx.pick_nearest_nonzero(p, &day_window(start, a, b), &active);
        let ok = match (&got, best) {
            (Ok(r), Some((id, d))) => {
                r.location == id
                    && r.distance_km == d
                    && active
                        .iter()
                        .all(|&v| r.values[&v] == raw_value(&cases, &events, id, v, a, b))
            }
            (Err(_), None) => {
                empty += 1;
                true
            }
            _ => false,
        };
        if ok {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("query {q}: {got:?} vs {best:?}"));
        }
    }
    outcome(
        agree == 1000,
        format!(
            "{agree}/1000 agree ({empty} with no nonzero location){}",
            first_bad.map(|b| format!("; first mismatch {b}")).unwrap_or_default()
        ),
    )
}

fn cross_product_determinism() -> Outcome {
    let dir = common::fixture_dir("synthetic");
    let p = planted();
    let mut expected_news = 0;
    let mut expected_tweets = 0;
    for line in std::fs::read_to_string(dir.join("documents.jsonl")).unwrap().lines() {
        let doc: Value = serde_json::from_str(line).unwrap();
        let body = doc["body"].as_str().unwrap().to_lowercase();
        if doc["source_type"] == "news" {
            let words: BTreeSet<&str> = body.split_whitespace().collect();
            // each article names exactly one region
            expected_news += words.len().min(10);
        } else if doc.get("geotag").is_some() {
            expected_tweets += p.query_terms.iter().filter(|t| body.contains(t.as_str())).count();
        }
    }

    let runs: Vec<_> = [1, 2, 3, 4, 8].into_iter().map(|w| common::snapshot("synthetic", w)).collect();
    let multiset = |s: &epimap::snapshot::IndexSnapshot| {
        let mut v: Vec<String> = s.records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        v.sort();
        v
    };
    let reference = multiset(&runs[0]);
    let identical = runs.iter().all(|r| multiset(r) == reference && *r == runs[0]);
    let news = runs[0].records.iter().filter(|r| r.source_type == SourceType::News).count();
    let tweets = runs[0].records.len() - news;
    outcome(
        identical && news == expected_news && tweets == expected_tweets,
        format!(
            "news records {news} (oracle {expected_news}), tweet records {tweets} (oracle {expected_tweets}), 5 runs with 1/2/3/4/8 workers identical: {identical}"
        ),
    )
}

fn http_get(addr: &str, path: &str) -> (u16, usize) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = Vec::new();
    stream.read_to_end(&mut buf).unwrap();
    let status = std::str::from_utf8(&buf[9..12]).unwrap().parse().unwrap();
    (status, buf.len())
}

fn frames_latency() -> Outcome {
    let inputs = large_inputs(10_000, 100, 4242);
    let idx = StIndex::build(&inputs.cases, &inputs.records, &[], &inputs.gazetteer, 12).unwrap();
    let start = idx.start_date().unwrap();

    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    rt.spawn(async move { axum::serve(listener, router(IndexSlot::new(idx))).await });

    // a continental viewport animated over 30 days
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let requests: Vec<String> = (0..220)
        .map(|_| {
            let s = rng.gen_range(-60.0..30.0);
            let w = rng.gen_range(-180.0..100.0);
            let from = start + Duration::days(rng.gen_range(0..70));
            let to = from + Duration::days(29);
            let vars = ["Confirmed,NewsCount", "Confirmed,Deaths,NewsCount", "Active,TweetCount"][rng.gen_range(0..3)];
            let mode = ["instant", "cumulative", "rolling:7"][rng.gen_range(0..3)];
            format!(
                "/frames?bbox={s:.3},{w:.3},{:.3},{:.3}&start={from}&end={to}&window=day&step=day&variables={vars}&mode={mode}",
                s + 40.0,
                w + 80.0
            )
        })
        .collect();
    let mut samples = Vec::new();
    let mut bytes = 0;
    let mut bad = 0;
    for (i, path) in requests.iter().enumerate() {
        let t = Instant::now();
        let (status, n) = http_get(&addr, path);
        let elapsed = t.elapsed();
        bad += (status != 200) as usize;
        // the first 20 requests warm caches and the allocator
        if i >= 20 {
            samples.push(elapsed);
            bytes += n;
        }
    }
    samples.sort();
    let p95 = samples[(samples.len() * 95).div_ceil(100) - 1];
    let p50 = samples[samples.len() / 2];
    outcome(
        bad == 0 && p95 < StdDuration::from_millis(50),
        format!(
            "p95 {p95:.2?} (<50ms), p50 {p50:.2?}, {} requests over loopback, mean body {} KiB, 30 frames each, {bad} non-200",
            samples.len(),
            bytes / samples.len() / 1024
        ),
    )
}
