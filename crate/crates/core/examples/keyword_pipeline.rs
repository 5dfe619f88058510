//! TF-IDF keywords and the keyword x toponym cross product for a few articles.
//!
//! ```text
//! cargo run -p epimap --example keyword_pipeline
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use epimap::corpus::{compute_tf_idf, extract_keywords, read_documents, run_pipeline, PipelineConfig, SourceType};
use epimap::gazetteer::Gazetteer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let g = Gazetteer::load(BufReader::new(File::open(dir.join("gazetteer.jsonl"))?))?;
    let docs = read_documents(BufReader::new(File::open(dir.join("documents.jsonl"))?))?;
    let news: Vec<_> = docs.iter().filter(|d| d.source_type == SourceType::News).cloned().collect();

    let scores = compute_tf_idf(&news);
    for (doc, s) in news.iter().zip(&scores).take(3) {
        println!("{}: {}", doc.id, doc.body);
        for k in s.iter().take(5) {
            println!("    {:<12} {:.4}", k.term, k.tf_idf);
        }
        println!("    top-3: {:?}", extract_keywords(s, 3)?);
    }

    let records = run_pipeline(&docs, &g, &PipelineConfig::default())?;
    let tweets = records.iter().filter(|r| r.source_type == SourceType::Tweet).count();
    println!(
        "\n{} documents -> {} records ({} from tweets)",
        docs.len(),
        records.len(),
        tweets
    );
    for r in records.iter().take(4) {
        let place = &g.entry(r.location)?.canonical_name;
        println!("    {} {:<12} {:<8} {}", r.document, r.keyword, place, r.timestamp);
    }
    Ok(())
}
