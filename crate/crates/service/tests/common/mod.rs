#![allow(dead_code)]

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use epimap::cases::CaseVariable;
use epimap::corpus::PipelineConfig;
use epimap::snapshot::{ingest, IndexSnapshot};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn fixture_dir(name: &str) -> PathBuf {
    match name {
        "synthetic" => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic"),
        other => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(other),
    }
}

pub fn snapshot(name: &str, workers: usize) -> IndexSnapshot {
    let dir = fixture_dir(name);
    let mut cases: Vec<(CaseVariable, Box<dyn Read>)> = Vec::new();
    for file in ["confirmed.csv", "deaths.csv", "recovered.csv"] {
        let path = dir.join(file);
        if path.exists() {
            let var = CaseVariable::from_file_name(file).unwrap();
            cases.push((var, Box::new(File::open(path).unwrap())));
        }
    }
    let config = PipelineConfig {
        workers,
        ..PipelineConfig::default()
    };
    ingest(
        BufReader::new(File::open(dir.join("gazetteer.jsonl")).unwrap()),
        BufReader::new(File::open(dir.join("documents.jsonl")).unwrap()),
        cases,
        &config,
        8,
    )
    .unwrap()
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let res = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = res.status();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

pub async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, body) = get(app, uri).await;
    let value = serde_json::from_slice(&body)
        .unwrap_or_else(|e| panic!("{uri}: body is not JSON ({e}): {}", String::from_utf8_lossy(&body)));
    (status, value)
}
