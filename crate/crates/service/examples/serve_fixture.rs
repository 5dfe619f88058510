//! Ingests the bundled synthetic fixture in memory and serves it.
//!
//! ```text
//! cargo run -p epimap-service --example serve_fixture [-- <port>]
//! curl 'http://127.0.0.1:8080/layers'
//! curl 'http://127.0.0.1:8080/frames?start=2020-02-20&end=2020-02-26&variables=Confirmed,NewsCount&keyword=coronavirus'
//! curl 'http://127.0.0.1:8080/pick?lat=61&lon=8&start=2020-03-01&end=2020-03-07'
//! curl 'http://127.0.0.1:8080/documents?location=Aldoria&start=2020-03-01&end=2020-03-02&synonyms=true'
//! curl 'http://127.0.0.1:8080/correlation?area=Aldoria&exclude=2020-02-14..2020-02-16,2020-03-09'
//! ```

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;

use epimap::cases::CaseVariable;
use epimap::corpus::PipelineConfig;
use epimap::snapshot::{ingest, DEFAULT_ZMAX};
use epimap_service::{router, IndexSlot};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let port: u16 = std::env::args().nth(1).map_or(Ok(8080), |p| p.parse())?;
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic");
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
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    println!("serving the synthetic fixture on http://{}", listener.local_addr()?);
    axum::serve(listener, router(IndexSlot::new(idx))).await?;
    Ok(())
}
