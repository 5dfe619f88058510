//! Correlation of articles against confirmed cases per region, with and
//! without the query-term filter and with the outage dates excluded.
//!
//! ```text
//! cargo run -p epimap --example correlation
//! ```

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;

use epimap::cases::CaseVariable;
use epimap::corpus::PipelineConfig;
use epimap::correlation::{evaluate_area, write_correlation_csv, Area, DocFilter};
use epimap::snapshot::{ingest, DEFAULT_ZMAX};
use epimap::synth::Planted;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let mut cases: Vec<(CaseVariable, Box<dyn Read>)> = Vec::new();
    for name in ["confirmed.csv", "deaths.csv", "recovered.csv"] {
        let var = CaseVariable::from_file_name(name).expect("known file name");
        cases.push((var, Box::new(File::open(dir.join(name))?)));
    }
    let idx = ingest(
        BufReader::new(File::open(dir.join("gazetteer.jsonl"))?),
        BufReader::new(File::open(dir.join("documents.jsonl"))?),
        cases,
        &PipelineConfig::default(),
        DEFAULT_ZMAX,
    )?
    .build()?;
    let planted: Planted = serde_json::from_reader(File::open(dir.join("planted.json"))?)?;
    let gaps: BTreeSet<_> = planted.gap_dates.iter().copied().collect();

    let mut rows = Vec::new();
    for name in ["World", "Norland", "Aldoria", "Brevia", "Calmora", "Dunmere"] {
        let area = Area::parse(name, &idx)?;
        for filter in [DocFilter::Terms(planted.query_terms.clone()), DocFilter::None] {
            rows.push(evaluate_area(&idx, area, &filter, &gaps)?);
        }
    }
    write_correlation_csv(&rows, std::io::stdout())?;
    println!(
        "\nplanted: {} {:.6}, {} {:.6}",
        planted.coupled_region, planted.coupled_filtered_r, planted.decoupled_region, planted.decoupled_filtered_r
    );
    Ok(())
}
