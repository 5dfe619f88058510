//! Power-of-two lat/lon grid shared by the zoom pyramid and marker clustering.
//!
//! At zoom `z` a cell spans `360 / 2^z` degrees of longitude and `180 / 2^z`
//! degrees of latitude. Cell coordinates are derived from the fraction of
//! the full range scaled by `2^z`, which is exact in binary floating point,
//! so a cell at zoom `z + k` always nests inside exactly one cell at zoom `z`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geo::{BoundingBox, GeoPoint, LocationId, VariableKind};

pub const MAX_ZOOM: u8 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub zoom: u8,
    pub row: u32,
    pub col: u32,
}

impl Cell {
    /// Row-major index, unique within one zoom level.
    pub fn key(&self) -> u64 {
        ((self.row as u64) << self.zoom) | self.col as u64
    }

    pub fn parent(&self) -> Option<Cell> {
        (self.zoom > 0).then(|| Cell {
            zoom: self.zoom - 1,
            row: self.row >> 1,
            col: self.col >> 1,
        })
    }
}

fn axis_index(fraction: f64, zoom: u8) -> u32 {
    let cells = 1u64 << zoom;
    let i = (fraction * cells as f64).floor();
    (i.max(0.0) as u64).min(cells - 1) as u32
}

fn lon_fraction(lon: f64) -> f64 {
    (lon + 180.0) / 360.0
}

fn lat_fraction(lat: f64) -> f64 {
    (lat + 90.0) / 180.0
}

pub fn cell_of(p: GeoPoint, zoom: u8) -> Cell {
    Cell {
        zoom,
        row: axis_index(lat_fraction(p.lat()), zoom),
        col: axis_index(lon_fraction(p.lon()), zoom),
    }
}

/// Inclusive row/column ranges of the cells touching `b`.
pub fn cell_range(b: &BoundingBox, zoom: u8) -> ((u32, u32), (u32, u32)) {
    (
        (
            axis_index(lat_fraction(b.south()), zoom),
            axis_index(lat_fraction(b.north()), zoom),
        ),
        (
            axis_index(lon_fraction(b.west()), zoom),
            axis_index(lon_fraction(b.east()), zoom),
        ),
    )
}

/// An aggregate of nearby locations at one zoom level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub cell: u64,
    pub variable: VariableKind,
    pub locations: Vec<LocationId>,
    pub point: GeoPoint,
    pub count: f64,
}

/// Value-weighted mean position; falls back to the plain mean when every
/// weight is zero.
pub fn weighted_centroid(points: &[(GeoPoint, f64)]) -> Option<GeoPoint> {
    if points.is_empty() {
        return None;
    }
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    let (lat, lon) = if total > 0.0 {
        points.iter().fold((0.0, 0.0), |(la, lo), (p, w)| {
            (la + p.lat() * w / total, lo + p.lon() * w / total)
        })
    } else {
        let n = points.len() as f64;
        points
            .iter()
            .fold((0.0, 0.0), |(la, lo), (p, _)| (la + p.lat() / n, lo + p.lon() / n))
    };
    GeoPoint::new(lat.clamp(-90.0, 90.0), lon.clamp(-180.0, 180.0)).ok()
}

/// Merges every location sharing a grid cell at `zoom` into one marker.
/// Output is ordered by cell index; members keep input order.
pub fn cluster_markers(
    points: &[(LocationId, GeoPoint, f64)],
    zoom: u8,
    variable: VariableKind,
) -> Vec<Marker> {
    let mut cells: BTreeMap<u64, Vec<&(LocationId, GeoPoint, f64)>> = BTreeMap::new();
    for p in points {
        cells.entry(cell_of(p.1, zoom).key()).or_default().push(p);
    }
    cells
        .into_iter()
        .map(|(cell, members)| {
            let weighted: Vec<(GeoPoint, f64)> = members.iter().map(|m| (m.1, m.2)).collect();
            Marker {
                cell,
                variable,
                locations: members.iter().map(|m| m.0).collect(),
                point: weighted_centroid(&weighted).expect("cell has members"),
                count: members.iter().map(|m| m.2).sum(),
            }
        })
        .collect()
}
