//! Versioned on-disk index snapshot and the offline ingest step producing it.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::cases::{join_case_tables, CaseSeries, CaseTable, CaseVariable};
use crate::corpus::{read_documents, run_pipeline, GeocodedKeyword, PipelineConfig};
use crate::gazetteer::{Gazetteer, GazetteerEntry};
use crate::index::{DocumentMeta, StIndex};
use crate::Error;

pub const SNAPSHOT_VERSION: u32 = 1;
pub const DEFAULT_ZMAX: u8 = 12;

/// Everything needed to rebuild an index deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSnapshot {
    pub v: u32,
    pub zmax: u8,
    pub gazetteer: Vec<GazetteerEntry>,
    pub cases: Vec<CaseSeries>,
    pub records: Vec<GeocodedKeyword>,
    pub documents: Vec<DocumentMeta>,
}

impl IndexSnapshot {
    pub fn write<W: Write>(&self, writer: W) -> Result<(), Error> {
        serde_json::to_writer(writer, self).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, Error> {
        let snap: IndexSnapshot =
            serde_json::from_reader(reader).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.v != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "snapshot version {} not supported (expected {SNAPSHOT_VERSION})",
                snap.v
            )));
        }
        Ok(snap)
    }

    pub fn build(&self) -> Result<StIndex, Error> {
        let g = Gazetteer::from_entries(self.gazetteer.clone())?;
        Ok(StIndex::build(&self.cases, &self.records, &self.documents, &g, self.zmax)?)
    }
}

/// Runs the whole offline pipeline: gazetteer, documents, case files.
pub fn ingest<G: BufRead, D: BufRead>(
    gazetteer: G,
    documents: D,
    case_files: Vec<(CaseVariable, Box<dyn Read>)>,
    config: &PipelineConfig,
    zmax: u8,
) -> Result<IndexSnapshot, Error> {
    let mut g = Gazetteer::load(gazetteer)?;
    let docs = read_documents(documents)?;
    let mut tables = Vec::with_capacity(case_files.len());
    for (var, reader) in case_files {
        tables.push((var, CaseTable::parse(reader)?));
    }
    // case rows may add entries; documents are resolved against the result
    let cases = join_case_tables(&tables, &mut g)?;
    let records = run_pipeline(&docs, &g, config)?;
    Ok(IndexSnapshot {
        v: SNAPSHOT_VERSION,
        zmax,
        gazetteer: g.entries().to_vec(),
        cases,
        records,
        documents: docs.iter().map(DocumentMeta::from).collect(),
    })
}
