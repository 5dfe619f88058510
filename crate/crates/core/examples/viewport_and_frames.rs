//! Builds the index from the fixture and runs viewport, frame and pick queries.
//!
//! ```text
//! cargo run -p epimap --example viewport_and_frames
//! ```

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;

use chrono::{TimeZone, Utc};
use epimap::cases::CaseVariable;
use epimap::corpus::PipelineConfig;
use epimap::index::{AggregateMode, FrameSpec, StepSize, WindowSize};
use epimap::snapshot::{ingest, DEFAULT_ZMAX};
use epimap::{BoundingBox, GeoPoint, TimeWindow, VariableKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let mut cases: Vec<(CaseVariable, Box<dyn Read>)> = Vec::new();
    for name in ["confirmed.csv", "deaths.csv", "recovered.csv"] {
        let var = CaseVariable::from_file_name(name).expect("known file name");
        cases.push((var, Box::new(File::open(dir.join(name))?)));
    }
    let snap = ingest(
        BufReader::new(File::open(dir.join("gazetteer.jsonl"))?),
        BufReader::new(File::open(dir.join("documents.jsonl"))?),
        cases,
        &PipelineConfig::default(),
        DEFAULT_ZMAX,
    )?;
    let idx = snap.build()?;
    let g = idx.gazetteer();

    let march = TimeWindow::new(
        Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2020, 3, 8, 0, 0, 0).unwrap(),
    )?;
    let north: BoundingBox = "40,-20,75,40".parse()?;
    println!("first week of March, northern viewport:");
    for v in [VariableKind::Confirmed, VariableKind::Active, VariableKind::NewsCount] {
        for (id, x) in idx.query_viewport(&north, &march, v, AggregateMode::Instant) {
            println!("  {:<10} {:<9} {x}", v.name(), g.entry(id)?.canonical_name);
        }
    }

    let spec = FrameSpec::new(
        Utc.with_ymd_and_hms(2020, 2, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2020, 3, 21, 0, 0, 0).unwrap(),
        WindowSize::Week,
        StepSize::Week,
        AggregateMode::Instant,
    )?;
    let filtered = idx.filtered(&["coronavirus"]);
    println!("\nweekly coronavirus articles, whole map:");
    for f in filtered.frames(&spec, &BoundingBox::WORLD, VariableKind::NewsCount) {
        let total: f64 = f.values.iter().map(|(_, x)| x).sum();
        println!("  {} .. {}  {total:>4}", f.window.start().date_naive(), f.window.end().date_naive());
    }

    let click = GeoPoint::new(0.0, 20.0)?;
    let pick = idx.pick_nearest_nonzero(click, &march, &[VariableKind::Confirmed, VariableKind::Deaths])?;
    println!(
        "\nclick at (0,20): {} at {:.0} km, {:?}",
        g.entry(pick.location)?.canonical_name,
        pick.distance_km,
        pick.values
    );
    Ok(())
}
