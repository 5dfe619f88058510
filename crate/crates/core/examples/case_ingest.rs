//! Parses the case files, repairs them and prints derived series for one region.
//!
//! ```text
//! cargo run -p epimap --example case_ingest [-- <region>]
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use epimap::cases::{join_case_tables, normalize, CaseTable, CaseVariable, Normalization};
use epimap::gazetteer::Gazetteer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let region = std::env::args().nth(1).unwrap_or_else(|| "Calmora".into());

    let mut g = Gazetteer::load(BufReader::new(File::open(dir.join("gazetteer.jsonl"))?))?;
    let mut tables = Vec::new();
    for name in ["confirmed.csv", "deaths.csv", "recovered.csv"] {
        let var = CaseVariable::from_file_name(name).expect("known file name");
        tables.push((var, CaseTable::parse(File::open(dir.join(name))?)?));
    }
    let series = join_case_tables(&tables, &mut g)?;

    let id = g.resolve_toponym(&region)?;
    let s = series.iter().find(|s| s.location == id).ok_or("no case row")?;
    let derived = s.derived();
    let per_capita = normalize(&s.confirmed, Normalization::PerCapita, id, &g)?;

    println!("{region}: {} days from {}", s.len(), s.start);
    println!("{:>10} {:>9} {:>7} {:>7} {:>9} {:>9}", "date", "confirmed", "new", "active", "recovered", "per 100k");
    for (t, date) in s.dates().enumerate() {
        println!(
            "{:>10} {:>9} {:>7} {:>7} {:>9} {:>9.2}",
            date, s.confirmed[t], derived.new_confirmed[t], derived.active[t], s.recovered[t], per_capita[t]
        );
    }
    Ok(())
}
