//! Spatiotemporal index over (location, day, variable) counts.
//!
//! Every variable is stored as per-location prefix sums of its daily values
//! on one shared date axis, so any window aggregate is O(1). Locations are
//! bucketed into a grid per zoom level (the pyramid) which serves viewport
//! queries and marker clustering.

mod frames;
mod grid;

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::CaseSeries;
use crate::corpus::{GeocodedKeyword, SourceType};
use crate::gazetteer::{Gazetteer, GazetteerError};
use crate::geo::{haversine_distance, BoundingBox, GeoPoint, LocationId, TimeWindow, VariableKind};

pub use frames::{AggregateMode, FrameSpec, FrameSpecError, StepSize, WindowSize};
pub use grid::{cell_of, cell_range, cluster_markers, weighted_centroid, Cell, Marker, MAX_ZOOM};

use crate::geo::Accumulation;

/// Upper bound on grid cells visited by one viewport query.
const MAX_SCAN_CELLS: u64 = 1024;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("location {0} is not in the gazetteer")]
    UnknownLocation(LocationId),
    #[error("zoom {0} outside 0..={1}")]
    Zoom(u8, u8),
    #[error("no location with a nonzero value in the window")]
    NoNonzero,
    #[error("at least one variable is required")]
    NoVariables,
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
}

/// Metadata kept for document listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub id: String,
    pub source_type: SourceType,
    pub title: String,
    #[serde(default)]
    pub url: Option<String>,
    pub published_at: DateTime<Utc>,
}

impl From<&crate::corpus::Document> for DocumentMeta {
    fn from(d: &crate::corpus::Document) -> Self {
        DocumentMeta {
            id: d.id.clone(),
            source_type: d.source_type,
            title: d.title.clone(),
            url: d.url.clone(),
            published_at: d.published_at,
        }
    }
}

/// Per-location prefix sums of daily values; row length is `days + 1`.
#[derive(Debug, Clone)]
enum Table {
    Dense { width: usize, prefix: Vec<u64> },
    Sparse(HashMap<u32, Vec<u64>>),
}

impl Table {
    fn row(&self, loc: u32) -> Option<&[u64]> {
        match self {
            Table::Dense { width, prefix } => {
                let start = loc as usize * width;
                Some(&prefix[start..start + width])
            }
            Table::Sparse(rows) => rows.get(&loc).map(Vec::as_slice),
        }
    }
}

/// Daily values of one (variable, location) pair, plus the rules for days
/// outside the axis.
struct RowView<'a> {
    prefix: Option<&'a [u64]>,
    stock: bool,
}

impl RowView<'_> {
    fn days(&self) -> i64 {
        self.prefix.map_or(0, |p| p.len() as i64 - 1)
    }

    /// Sum of in-axis daily values over the inclusive day range.
    fn sum(&self, a: i64, b: i64) -> u64 {
        let Some(p) = self.prefix else { return 0 };
        let (a, b) = (a.max(0), b.min(self.days() - 1));
        if a > b {
            return 0;
        }
        p[b as usize + 1] - p[a as usize]
    }

    /// Stock level on day `t`; carried forward past the axis end.
    fn level(&self, t: i64) -> u64 {
        let n = self.days();
        if t < 0 || n == 0 {
            return 0;
        }
        let t = t.min(n - 1);
        self.sum(t, t)
    }

    fn instant(&self, a: i64, b: i64) -> f64 {
        if self.stock {
            self.level(b) as f64
        } else {
            self.sum(a, b) as f64
        }
    }

    fn cumulative(&self, b: i64) -> f64 {
        if self.stock {
            self.level(b) as f64
        } else {
            self.sum(0, b) as f64
        }
    }

    fn rolling(&self, b: i64, k: u32) -> f64 {
        let a = b - k as i64 + 1;
        let total = if self.stock {
            let n = self.days();
            let inside = self.sum(a, b.min(n - 1));
            let beyond = (b - (n - 1).max(a - 1)).max(0) as u64;
            inside + beyond * self.level(n - 1)
        } else {
            self.sum(a, b)
        };
        total as f64 / k as f64
    }

    fn aggregate(&self, a: i64, b: i64, mode: AggregateMode) -> f64 {
        match mode {
            AggregateMode::Instant => self.instant(a, b),
            AggregateMode::Cumulative => self.cumulative(b),
            AggregateMode::RollingAverage(k) => self.rolling(b, k.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct IndexedLocation {
    id: LocationId,
    point: GeoPoint,
}

/// Per-location, per-day record counts for one keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordDayCount {
    pub location: LocationId,
    pub date: NaiveDate,
    pub news: u64,
    pub tweets: u64,
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    loc: u32,
    day: u32,
    source: SourceType,
}

/// Value of one location in a query result.
pub type LocationValue = (LocationId, f64);

/// One window's values for each requested variable.
pub type MultiFrame = (TimeWindow, Vec<(VariableKind, Vec<LocationValue>)>);

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub window: TimeWindow,
    pub values: Vec<LocationValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PickResult {
    pub location: LocationId,
    pub distance_km: f64,
    pub values: BTreeMap<VariableKind, f64>,
}

#[derive(Debug, Clone)]
pub struct StIndex {
    start: Option<NaiveDate>,
    days: usize,
    zmax: u8,
    locations: Vec<IndexedLocation>,
    dense: HashMap<LocationId, u32>,
    tables: Vec<Table>,
    grids: Vec<HashMap<u64, Vec<u32>>>,
    gazetteer: Gazetteer,
    postings: HashMap<String, Vec<Posting>>,
    documents: Vec<DocumentMeta>,
    /// Per location: (published_at, document position), sorted.
    doc_refs: HashMap<u32, Vec<(DateTime<Utc>, usize)>>,
}

pub fn build_index(
    cases: &[CaseSeries],
    records: &[GeocodedKeyword],
    g: &Gazetteer,
    zmax: u8,
) -> Result<StIndex, IndexError> {
    StIndex::build(cases, records, &[], g, zmax)
}

impl StIndex {
    pub fn build(
        cases: &[CaseSeries],
        records: &[GeocodedKeyword],
        documents: &[DocumentMeta],
        g: &Gazetteer,
        zmax: u8,
    ) -> Result<Self, IndexError> {
        if zmax > MAX_ZOOM {
            return Err(IndexError::Zoom(zmax, MAX_ZOOM));
        }
        let locations: Vec<IndexedLocation> = g
            .entries()
            .iter()
            .map(|e| IndexedLocation {
                id: e.id,
                point: e.point,
            })
            .collect();
        let dense: HashMap<LocationId, u32> = locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id, i as u32))
            .collect();
        let lookup = |id: LocationId| dense.get(&id).copied().ok_or(IndexError::UnknownLocation(id));

        let first = cases
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.start)
            .chain(records.iter().map(|r| r.timestamp.date_naive()))
            .min();
        let last = cases
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.start + Duration::days(s.len() as i64 - 1))
            .chain(records.iter().map(|r| r.timestamp.date_naive()))
            .max();
        let days = match (first, last) {
            (Some(a), Some(b)) => (b - a).num_days() as usize + 1,
            _ => 0,
        };
        let width = days + 1;
        let day_of = |d: NaiveDate| (d - first.expect("axis exists")).num_days();

        let mut tables: Vec<Vec<u64>> = vec![vec![0; width * locations.len()]; VariableKind::ALL.len()];

        // case variables: stored as cumulative levels per day first
        for s in cases {
            let loc = lookup(s.location)? as usize;
            if s.is_empty() {
                continue;
            }
            let offset = day_of(s.start) as usize;
            let derived = s.derived();
            let columns = [
                (VariableKind::Confirmed, &s.confirmed),
                (VariableKind::Deaths, &s.deaths),
                (VariableKind::Recovered, &s.recovered),
                (VariableKind::Active, &derived.active),
            ];
            for (var, values) in columns {
                let row = &mut tables[var.index()][loc * width..(loc + 1) * width];
                let last = *values.last().expect("non-empty");
                for t in 0..days {
                    let v = if t < offset {
                        0
                    } else {
                        values.get(t - offset).copied().unwrap_or(last)
                    };
                    // row[t + 1] holds the level for now; converted below
                    row[t + 1] += v;
                }
            }
        }
        // cumulative levels already are prefix sums of daily-new; stocks need summing
        let active = &mut tables[VariableKind::Active.index()];
        for loc in 0..locations.len() {
            let row = &mut active[loc * width..(loc + 1) * width];
            for t in 1..width {
                row[t] += row[t - 1];
            }
        }

        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut event_days: Vec<Vec<u64>> = vec![vec![0; width * locations.len()]; 2];
        for r in records {
            let loc = lookup(r.location)?;
            let day = day_of(r.timestamp.date_naive()) as u32;
            let which = match r.source_type {
                SourceType::News => 0,
                SourceType::Tweet => 1,
            };
            event_days[which][loc as usize * width + day as usize + 1] += 1;
            postings.entry(r.keyword.to_lowercase()).or_default().push(Posting {
                loc,
                day,
                source: r.source_type,
            });
        }
        for (which, var) in [(0, VariableKind::NewsCount), (1, VariableKind::TweetCount)] {
            let mut counts = std::mem::take(&mut event_days[which]);
            for loc in 0..locations.len() {
                let row = &mut counts[loc * width..(loc + 1) * width];
                for t in 1..width {
                    row[t] += row[t - 1];
                }
            }
            tables[var.index()] = counts;
        }

        let mut grids = Vec::with_capacity(zmax as usize + 1);
        for z in 0..=zmax {
            let mut grid: HashMap<u64, Vec<u32>> = HashMap::new();
            for (i, l) in locations.iter().enumerate() {
                grid.entry(cell_of(l.point, z).key()).or_default().push(i as u32);
            }
            grids.push(grid);
        }

        let mut documents: Vec<DocumentMeta> = documents.to_vec();
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        documents.dedup_by(|a, b| a.id == b.id);
        let doc_pos: HashMap<&str, usize> = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();
        let mut doc_refs: HashMap<u32, Vec<(DateTime<Utc>, usize)>> = HashMap::new();
        for r in records {
            if let Some(&pos) = doc_pos.get(r.document.as_str()) {
                doc_refs
                    .entry(dense[&r.location])
                    .or_default()
                    .push((documents[pos].published_at, pos));
            }
        }
        for refs in doc_refs.values_mut() {
            refs.sort();
            refs.dedup();
        }

        Ok(StIndex {
            start: first,
            days,
            zmax,
            locations,
            dense,
            tables: tables
                .into_iter()
                .map(|prefix| Table::Dense { width, prefix })
                .collect(),
            grids,
            gazetteer: g.clone(),
            postings,
            documents,
            doc_refs,
        })
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn zmax(&self) -> u8 {
        self.zmax
    }

    /// First day of the date axis (`None` for an empty index).
    pub fn start_date(&self) -> Option<NaiveDate> {
        self.start
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start
            .map(|s| s.iter_days().take(self.days).collect())
            .unwrap_or_default()
    }

    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    pub fn location_ids(&self) -> impl Iterator<Item = LocationId> + '_ {
        self.locations.iter().map(|l| l.id)
    }

    pub fn point(&self, id: LocationId) -> Option<GeoPoint> {
        self.dense.get(&id).map(|&i| self.locations[i as usize].point)
    }

    /// Ids grouped by grid cell at `zoom`.
    pub fn cells(&self, zoom: u8) -> Result<BTreeMap<u64, Vec<LocationId>>, IndexError> {
        let grid = self.grids.get(zoom as usize).ok_or(IndexError::Zoom(zoom, self.zmax))?;
        Ok(grid
            .iter()
            .map(|(&k, locs)| (k, locs.iter().map(|&i| self.locations[i as usize].id).collect()))
            .collect())
    }

    /// Axis day index of a date (may be negative or past the end).
    pub fn day_index(&self, d: NaiveDate) -> i64 {
        self.start.map_or(0, |s| (d - s).num_days())
    }

    fn day_span(&self, w: &TimeWindow) -> (i64, i64) {
        let last = w.end() - Duration::nanoseconds(1);
        (
            self.day_index(w.start().date_naive()),
            self.day_index(last.date_naive()),
        )
    }

    /// All documents, no keyword restriction.
    pub fn unfiltered(&self) -> View<'_> {
        View {
            idx: self,
            docs: None,
        }
    }

    /// Document variables restricted to records whose keyword is one of
    /// `terms` (case-insensitive exact match).
    pub fn filtered<S: AsRef<str>>(&self, terms: &[S]) -> View<'_> {
        let width = self.days + 1;
        let mut rows: [HashMap<u32, Vec<u64>>; 2] = Default::default();
        let wanted: HashSet<String> = terms.iter().map(|t| t.as_ref().to_lowercase()).collect();
        for term in &wanted {
            for p in self.postings.get(term).into_iter().flatten() {
                let which = (p.source == SourceType::Tweet) as usize;
                rows[which].entry(p.loc).or_insert_with(|| vec![0; width])[p.day as usize + 1] += 1;
            }
        }
        for table in &mut rows {
            for row in table.values_mut() {
                for t in 1..width {
                    row[t] += row[t - 1];
                }
            }
        }
        let [news, tweets] = rows;
        View {
            idx: self,
            docs: Some([Table::Sparse(news), Table::Sparse(tweets)]),
        }
    }

    pub fn aggregate_window(
        &self,
        loc: LocationId,
        v: VariableKind,
        w: &TimeWindow,
        mode: AggregateMode,
    ) -> Result<f64, IndexError> {
        self.unfiltered().aggregate_window(loc, v, w, mode)
    }

    pub fn query_viewport(
        &self,
        bbox: &BoundingBox,
        w: &TimeWindow,
        v: VariableKind,
        mode: AggregateMode,
    ) -> Vec<LocationValue> {
        self.unfiltered().query_viewport(bbox, w, v, mode)
    }

    pub fn frames(&self, spec: &FrameSpec, bbox: &BoundingBox, v: VariableKind) -> Vec<Frame> {
        self.unfiltered().frames(spec, bbox, v)
    }

    pub fn pick_nearest_nonzero(
        &self,
        p: GeoPoint,
        w: &TimeWindow,
        active: &[VariableKind],
    ) -> Result<PickResult, IndexError> {
        self.unfiltered().pick_nearest_nonzero(p, w, active)
    }

    /// Dense indices of locations inside `bbox`, ascending.
    fn candidates(&self, bbox: &BoundingBox) -> Vec<u32> {
        let zoom = (0..=self.zmax)
            .rev()
            .find(|&z| {
                let ((r0, r1), (c0, c1)) = cell_range(bbox, z);
                (r1 - r0 + 1) as u64 * (c1 - c0 + 1) as u64 <= MAX_SCAN_CELLS
            })
            .unwrap_or(0);
        let grid = &self.grids[zoom as usize];
        let ((r0, r1), (c0, c1)) = cell_range(bbox, zoom);
        let mut out = Vec::new();
        if grid.len() as u64 <= (r1 - r0 + 1) as u64 * (c1 - c0 + 1) as u64 {
            // fewer occupied cells than the range covers
            for (&key, locs) in grid {
                let (row, col) = ((key >> zoom) as u32, (key & ((1u64 << zoom) - 1)) as u32);
                if (r0..=r1).contains(&row) && (c0..=c1).contains(&col) {
                    out.extend(locs.iter().copied());
                }
            }
        } else {
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let key = Cell { zoom, row, col }.key();
                    if let Some(locs) = grid.get(&key) {
                        out.extend(locs.iter().copied());
                    }
                }
            }
        }
        out.retain(|&i| bbox.contains(self.locations[i as usize].point));
        out.sort_unstable();
        out
    }

    /// Documents tagged at any of `locations` and published inside `w`,
    /// newest first.
    pub fn documents_at(&self, locations: &[LocationId], w: &TimeWindow) -> Vec<&DocumentMeta> {
        let mut seen = HashSet::new();
        let mut hits: Vec<&DocumentMeta> = locations
            .iter()
            .filter_map(|id| self.dense.get(id))
            .filter_map(|d| self.doc_refs.get(d))
            .flatten()
            .filter(|(t, _)| w.contains(*t))
            .filter(|(_, pos)| seen.insert(*pos))
            .map(|(_, pos)| &self.documents[*pos])
            .collect();
        hits.sort_by(|a, b| b.published_at.cmp(&a.published_at).then(a.id.cmp(&b.id)));
        hits
    }

    /// Record counts for one keyword per (location, day) over an inclusive
    /// date range.
    pub fn keyword_counts(&self, keyword: &str, from: NaiveDate, to: NaiveDate) -> Vec<KeywordDayCount> {
        let (a, b) = (self.day_index(from), self.day_index(to));
        let mut acc: BTreeMap<(LocationId, u32), (u64, u64)> = BTreeMap::new();
        for p in self.postings.get(&keyword.to_lowercase()).into_iter().flatten() {
            if (p.day as i64) < a || (p.day as i64) > b {
                continue;
            }
            let e = acc.entry((self.locations[p.loc as usize].id, p.day)).or_default();
            match p.source {
                SourceType::News => e.0 += 1,
                SourceType::Tweet => e.1 += 1,
            }
        }
        let start = self.start.unwrap_or_default();
        acc.into_iter()
            .map(|((location, day), (news, tweets))| KeywordDayCount {
                location,
                date: start + Duration::days(day as i64),
                news,
                tweets,
            })
            .collect()
    }
}

/// Read-only query surface over an index, optionally with keyword-filtered
/// document layers.
pub struct View<'a> {
    idx: &'a StIndex,
    docs: Option<[Table; 2]>,
}

impl<'a> View<'a> {
    pub fn index(&self) -> &'a StIndex {
        self.idx
    }

    fn table(&self, v: VariableKind) -> &Table {
        match (&self.docs, v) {
            (Some([news, _]), VariableKind::NewsCount) => news,
            (Some([_, tweets]), VariableKind::TweetCount) => tweets,
            _ => &self.idx.tables[v.index()],
        }
    }

    fn row(&self, loc: u32, v: VariableKind) -> RowView<'_> {
        RowView {
            prefix: self.table(v).row(loc),
            stock: v.accumulation() == Accumulation::Stock,
        }
    }

    fn value(&self, loc: u32, v: VariableKind, span: (i64, i64), mode: AggregateMode) -> f64 {
        self.row(loc, v).aggregate(span.0, span.1, mode)
    }

    pub fn aggregate_window(
        &self,
        loc: LocationId,
        v: VariableKind,
        w: &TimeWindow,
        mode: AggregateMode,
    ) -> Result<f64, IndexError> {
        let d = *self.idx.dense.get(&loc).ok_or(IndexError::UnknownLocation(loc))?;
        Ok(self.value(d, v, self.idx.day_span(w), mode))
    }

    /// Nonzero values of every location inside `bbox`, ordered by id.
    pub fn query_viewport(
        &self,
        bbox: &BoundingBox,
        w: &TimeWindow,
        v: VariableKind,
        mode: AggregateMode,
    ) -> Vec<LocationValue> {
        let candidates = self.idx.candidates(bbox);
        self.values_for(&candidates, w, v, mode)
    }

    /// Locations inside `bbox` whose value is exactly zero.
    pub fn query_viewport_zero(
        &self,
        bbox: &BoundingBox,
        w: &TimeWindow,
        v: VariableKind,
        mode: AggregateMode,
    ) -> Vec<LocationId> {
        let span = self.idx.day_span(w);
        self.idx
            .candidates(bbox)
            .into_iter()
            .filter(|&d| self.value(d, v, span, mode) == 0.0)
            .map(|d| self.idx.locations[d as usize].id)
            .collect()
    }

    fn values_for(
        &self,
        candidates: &[u32],
        w: &TimeWindow,
        v: VariableKind,
        mode: AggregateMode,
    ) -> Vec<LocationValue> {
        let span = self.idx.day_span(w);
        candidates
            .iter()
            .filter_map(|&d| {
                let value = self.value(d, v, span, mode);
                (value != 0.0).then(|| (self.idx.locations[d as usize].id, value))
            })
            .collect()
    }

    pub fn frames(&self, spec: &FrameSpec, bbox: &BoundingBox, v: VariableKind) -> Vec<Frame> {
        let candidates = self.idx.candidates(bbox);
        spec.windows()
            .into_iter()
            .map(|window| Frame {
                values: self.values_for(&candidates, &window, v, spec.mode),
                window,
            })
            .collect()
    }

    /// Frames for several variables at once, sharing one candidate scan.
    pub fn frames_multi(
        &self,
        spec: &FrameSpec,
        bbox: &BoundingBox,
        vars: &[VariableKind],
    ) -> Vec<MultiFrame> {
        let candidates = self.idx.candidates(bbox);
        spec.windows()
            .into_iter()
            .map(|window| {
                let per_var = vars
                    .iter()
                    .map(|&v| (v, self.values_for(&candidates, &window, v, spec.mode)))
                    .collect();
                (window, per_var)
            })
            .collect()
    }

    /// Closest location with a nonzero instant value for any active variable;
    /// ties go to the smaller id.
    pub fn pick_nearest_nonzero(
        &self,
        p: GeoPoint,
        w: &TimeWindow,
        active: &[VariableKind],
    ) -> Result<PickResult, IndexError> {
        if active.is_empty() {
            return Err(IndexError::NoVariables);
        }
        let span = self.idx.day_span(w);
        let mut best: Option<(u32, f64)> = None;
        for (d, l) in self.idx.locations.iter().enumerate() {
            let dist = haversine_distance(p, l.point);
            if best.is_some_and(|(_, bd)| dist >= bd) {
                continue;
            }
            let nonzero = active
                .iter()
                .any(|&v| self.value(d as u32, v, span, AggregateMode::Instant) != 0.0);
            if nonzero {
                best = Some((d as u32, dist));
            }
        }
        let (d, distance_km) = best.ok_or(IndexError::NoNonzero)?;
        Ok(PickResult {
            location: self.idx.locations[d as usize].id,
            distance_km,
            values: active
                .iter()
                .map(|&v| (v, self.value(d, v, span, AggregateMode::Instant)))
                .collect(),
        })
    }

    /// Daily values summed over a set of locations, one entry per axis day.
    pub fn area_daily(&self, locations: &[LocationId], v: VariableKind) -> Result<Vec<u64>, IndexError> {
        let mut out = vec![0u64; self.idx.days];
        for id in locations {
            let d = *self.idx.dense.get(id).ok_or(IndexError::UnknownLocation(*id))?;
            let row = self.row(d, v);
            for (t, slot) in out.iter_mut().enumerate() {
                *slot += row.sum(t as i64, t as i64);
            }
        }
        Ok(out)
    }
}
