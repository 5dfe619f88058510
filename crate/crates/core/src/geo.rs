//! Geometric and temporal primitives shared by every other module.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for all great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("bounding box has south {south} > north {north}")]
    InvertedLatitude { south: f64, north: f64 },
    #[error("bounding box crosses the antimeridian (west {west} > east {east})")]
    Antimeridian { west: f64, east: f64 },
    #[error("time window start {start} is not before end {end}")]
    EmptyWindow {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("unknown variable kind {0:?}")]
    UnknownVariable(String),
}

/// A WGS84 point in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Great-circle distance in kilometres (haversine form).
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Closed latitude/longitude box. Boxes crossing the antimeridian are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    south: f64,
    west: f64,
    north: f64,
    east: f64,
}

impl BoundingBox {
    pub const WORLD: BoundingBox = BoundingBox {
        south: -90.0,
        west: -180.0,
        north: 90.0,
        east: 180.0,
    };

    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, GeoError> {
        // corners must themselves be valid points
        GeoPoint::new(south, west)?;
        GeoPoint::new(north, east)?;
        if south > north {
            return Err(GeoError::InvertedLatitude { south, north });
        }
        if west > east {
            return Err(GeoError::Antimeridian { west, east });
        }
        Ok(BoundingBox {
            south,
            west,
            north,
            east,
        })
    }

    /// Degenerate box covering exactly one point.
    pub fn around(p: GeoPoint) -> Self {
        BoundingBox {
            south: p.lat,
            west: p.lon,
            north: p.lat,
            east: p.lon,
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.south <= p.lat && p.lat <= self.north && self.west <= p.lon && p.lon <= self.east
    }

    pub fn south(&self) -> f64 {
        self.south
    }
    pub fn west(&self) -> f64 {
        self.west
    }
    pub fn north(&self) -> f64 {
        self.north
    }
    pub fn east(&self) -> f64 {
        self.east
    }
}

pub fn bbox_contains(b: &BoundingBox, p: GeoPoint) -> bool {
    b.contains(p)
}

impl FromStr for BoundingBox {
    type Err = String;

    /// Parses `south,west,north,east`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad bbox {s:?}: {e}"))?;
        match parts[..] {
            [s, w, n, e] => BoundingBox::new(s, w, n, e).map_err(|e| e.to_string()),
            _ => Err(format!("bbox needs 4 comma-separated numbers, got {s:?}")),
        }
    }
}

/// Half-open UTC interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    start: DateTime<Utc>,
    end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self, GeoError> {
        if start >= end {
            return Err(GeoError::EmptyWindow { start, end });
        }
        Ok(TimeWindow { start, end })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.end
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

pub fn window_contains(w: &TimeWindow, t: DateTime<Utc>) -> bool {
    w.contains(t)
}

/// Stable location identifier, unique within one gazetteer.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct LocationId(pub u64);

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How a variable accumulates over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulation {
    /// Source data is a running total (confirmed, deaths, recovered).
    Cumulative,
    /// A level that can go up and down (active cases).
    Stock,
    /// Independent daily event counts (documents).
    Events,
}

/// The six dynamic variables shown on the map.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum VariableKind {
    Confirmed,
    Active,
    Deaths,
    Recovered,
    NewsCount,
    TweetCount,
}

impl VariableKind {
    pub const ALL: [VariableKind; 6] = [
        VariableKind::Confirmed,
        VariableKind::Active,
        VariableKind::Deaths,
        VariableKind::Recovered,
        VariableKind::NewsCount,
        VariableKind::TweetCount,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VariableKind::Confirmed => "Confirmed",
            VariableKind::Active => "Active",
            VariableKind::Deaths => "Deaths",
            VariableKind::Recovered => "Recovered",
            VariableKind::NewsCount => "NewsCount",
            VariableKind::TweetCount => "TweetCount",
        }
    }

    /// Fixed display color (CSS hex).
    pub fn color(self) -> &'static str {
        match self {
            VariableKind::Confirmed => "#d62728",
            VariableKind::Active => "#ff7f0e",
            VariableKind::Deaths => "#111111",
            VariableKind::Recovered => "#2ca02c",
            VariableKind::NewsCount => "#1f77b4",
            VariableKind::TweetCount => "#9467bd",
        }
    }

    pub fn is_document(self) -> bool {
        matches!(self, VariableKind::NewsCount | VariableKind::TweetCount)
    }

    pub fn is_disease(self) -> bool {
        !self.is_document()
    }

    pub fn accumulation(self) -> Accumulation {
        match self {
            VariableKind::Confirmed | VariableKind::Deaths | VariableKind::Recovered => {
                Accumulation::Cumulative
            }
            VariableKind::Active => Accumulation::Stock,
            VariableKind::NewsCount | VariableKind::TweetCount => Accumulation::Events,
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariableKind {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase();
        let alias = match wanted.as_str() {
            "news" => Some(VariableKind::NewsCount),
            "tweets" | "tweet" => Some(VariableKind::TweetCount),
            _ => None,
        };
        alias
            .or_else(|| {
                VariableKind::ALL
                    .into_iter()
                    .find(|v| v.name().to_ascii_lowercase() == wanted)
            })
            .ok_or_else(|| GeoError::UnknownVariable(s.to_string()))
    }
}
