//! Spatiotemporal tracking of keyword prevalence in geotagged news and
//! tweets alongside official epidemic case counts.
//!
//! The crate is organised bottom-up:
//!
//! - [`geo`]: points, boxes, half-open time windows, the six map variables
//! - [`cases`]: wide case CSV parsing, repair, active / daily-new / normalized series
//! - [`gazetteer`]: toponym recognition, resolution and spatial synonyms
//! - [`corpus`]: TF-IDF keywords and the keyword x toponym cross product
//! - [`index`]: prefix-sum index with a zoom pyramid (viewport, frames, clusters, pick)
//! - [`layout`]: marker radius/color and back-to-front geo-circle sets
//! - [`correlation`]: Pearson evaluation of articles against confirmed cases
//! - [`snapshot`]: the offline ingest step and its versioned output
//! - [`synth`]: deterministic synthetic corpus used by tests and examples

pub mod cases;
pub mod corpus;
pub mod correlation;
pub mod gazetteer;
pub mod geo;
pub mod index;
pub mod layout;
pub mod snapshot;
pub mod synth;

pub use geo::{BoundingBox, GeoPoint, LocationId, TimeWindow, VariableKind};
pub use index::StIndex;

/// Any failure surfaced by the ingest or query layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geo(#[from] geo::GeoError),
    #[error(transparent)]
    Cases(#[from] cases::CaseError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Gazetteer(#[from] gazetteer::GazetteerError),
    #[error(transparent)]
    Index(#[from] index::IndexError),
    #[error(transparent)]
    Correlation(#[from] correlation::CorrelationError),
    #[error(transparent)]
    Layout(#[from] layout::LayoutError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}
