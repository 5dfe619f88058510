//! Visual encoding for markers and geo-circles.
//!
//! Radii follow `40 + log2(2n)^2` pixels with single-point markers pinned to
//! exactly 40 px. Disease variables draw as hollow dashed rings, document
//! counts as solid discs; every set is ordered largest radius first so it can
//! be painted back to front.

use serde::Serialize;
use thiserror::Error;

use crate::geo::{GeoPoint, VariableKind};

pub const SINGLE_POINT_RADIUS_PX: f64 = 40.0;
pub const RING_STROKE_PX: f64 = 2.0;
pub const RING_DASH_PX: [f64; 2] = [6.0, 3.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("marker must represent at least one point, got {0}")]
    EmptyMarker(f64),
    #[error("no nonzero values to lay out")]
    AllZero,
}

pub fn marker_radius(n: f64) -> Result<f64, LayoutError> {
    if n.is_nan() || n < 1.0 {
        return Err(LayoutError::EmptyMarker(n));
    }
    if n == 1.0 {
        return Ok(SINGLE_POINT_RADIUS_PX);
    }
    Ok(SINGLE_POINT_RADIUS_PX + (2.0 * n).log2().powi(2))
}

/// Radius for an arbitrary nonzero magnitude; fractional values below one
/// (e.g. small rolling averages) draw as a single point.
pub fn radius_for_value(v: f64) -> f64 {
    marker_radius(v.max(1.0)).expect("clamped to >= 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerColor {
    Green,
    Yellow,
    Red,
}

pub fn marker_color(n: f64) -> MarkerColor {
    if n <= 10.0 {
        MarkerColor::Green
    } else if n <= 100.0 {
        MarkerColor::Yellow
    } else {
        MarkerColor::Red
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleStyle {
    Hollow,
    Solid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoCircle {
    pub variable: VariableKind,
    pub radius_px: f64,
    pub style: CircleStyle,
    pub stroke_px: f64,
    pub color: &'static str,
    #[serde(skip)]
    pub emphasized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoCircleSet {
    pub center: GeoPoint,
    pub circles: Vec<GeoCircle>,
    pub label_count: Option<u64>,
}

impl GeoCircleSet {
    pub fn is_emphasized(&self) -> bool {
        self.circles.iter().any(|c| c.emphasized)
    }
}

/// One circle per nonzero value, sorted back to front. `label_count` carries
/// the document count only when exactly one document layer is active.
pub fn layout_geocircles(
    center: GeoPoint,
    values: &[(VariableKind, f64)],
    active_doc_layers: usize,
) -> Result<GeoCircleSet, LayoutError> {
    let mut circles: Vec<GeoCircle> = values
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(variable, v)| {
            let disease = variable.is_disease();
            GeoCircle {
                variable,
                radius_px: radius_for_value(v),
                style: if disease { CircleStyle::Hollow } else { CircleStyle::Solid },
                stroke_px: if disease { RING_STROKE_PX } else { 0.0 },
                color: variable.color(),
                emphasized: false,
            }
        })
        .collect();
    if circles.is_empty() {
        return Err(LayoutError::AllZero);
    }
    circles.sort_by(|a, b| {
        b.radius_px
            .total_cmp(&a.radius_px)
            .then(a.variable.cmp(&b.variable))
    });
    let label_count = (active_doc_layers == 1).then(|| {
        values
            .iter()
            .filter(|(v, _)| v.is_document())
            .map(|(_, n)| n.round() as u64)
            .sum()
    });
    Ok(GeoCircleSet {
        center,
        circles,
        label_count,
    })
}

/// Doubles the ring stroke once; emphasizing twice changes nothing.
pub fn emphasize(set: &GeoCircleSet) -> GeoCircleSet {
    let mut out = set.clone();
    for c in &mut out.circles {
        if !c.emphasized {
            c.stroke_px *= 2.0;
            c.emphasized = true;
        }
    }
    out
}
