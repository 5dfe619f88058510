//! HTTP query service over an immutable [`StIndex`].
//!
//! The router serves six read-only JSON endpoints. Every body carries a
//! top-level `"v"` schema version. The index lives in an [`IndexSlot`] that
//! can be swapped atomically while requests are in flight.

mod api;
mod params;

use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use epimap::snapshot::IndexSnapshot;
use epimap::StIndex;

pub use params::parse_query_date;

/// Schema version stamped on every response.
pub const API_VERSION: u32 = 1;

/// Shared holder for the current index.
#[derive(Clone, Default)]
pub struct IndexSlot(Arc<RwLock<Option<Arc<StIndex>>>>);

impl IndexSlot {
    pub fn new(idx: StIndex) -> Self {
        let slot = IndexSlot::default();
        slot.swap(idx);
        slot
    }

    pub fn empty() -> Self {
        IndexSlot::default()
    }

    /// Replaces the index; requests already running keep the old one.
    pub fn swap(&self, idx: StIndex) -> Option<Arc<StIndex>> {
        let mut guard = self.0.write().unwrap_or_else(|e| e.into_inner());
        guard.replace(Arc::new(idx))
    }

    pub fn current(&self) -> Option<Arc<StIndex>> {
        self.0.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

/// Reads a snapshot file and builds its index.
pub fn load_index(path: &Path) -> Result<StIndex, epimap::Error> {
    let file = std::fs::File::open(path)
        .map_err(|e| epimap::Error::Snapshot(format!("{}: {e}", path.display())))?;
    IndexSnapshot::read(std::io::BufReader::new(file))?.build()
}

pub fn router(slot: IndexSlot) -> Router {
    Router::new()
        .route("/layers", get(api::layers))
        .route("/download", get(api::download))
        .route("/frames", get(api::frames))
        .route("/pick", get(api::pick))
        .route("/documents", get(api::documents))
        .route("/correlation", get(api::correlation))
        .with_state(slot)
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "v": API_VERSION,
            "error": self.message,
            "status": self.status.as_u16(),
        });
        (self.status, Json(body)).into_response()
    }
}
