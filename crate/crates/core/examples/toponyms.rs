//! Toponym recognition, resolution and spatial synonyms.
//!
//! ```text
//! cargo run -p epimap --example toponyms [-- "free text"]
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use epimap::gazetteer::Gazetteer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let g = Gazetteer::load(BufReader::new(File::open(dir.join("gazetteer.jsonl"))?))?;
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "Flights from Aldoria to Dunmere resume; Sudland officials cautious".into());

    println!("{text}");
    for m in g.recognize_toponyms(&text) {
        let id = g.resolve_toponym(&m.name)?;
        let e = g.entry(id)?;
        let synonyms: Vec<String> = g
            .spatial_synonyms(id)?
            .iter()
            .map(|s| g.entry(*s).map(|e| e.canonical_name.clone()))
            .collect::<Result<_, _>>()?;
        println!(
            "  [{}..{}] {:?} -> #{} {} ({:?}, {:.2},{:.2}); synonyms: {}",
            m.start,
            m.end,
            m.name,
            id,
            e.canonical_name,
            e.admin_level,
            e.point.lat(),
            e.point.lon(),
            synonyms.join(", ")
        );
    }
    Ok(())
}
