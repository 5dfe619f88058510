//! Official case counts: wide CSV parsing, series repair, and the derived
//! active / daily-new / normalized variables.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gazetteer::{name_key, AdminLevel, Gazetteer, GazetteerEntry, GazetteerError};
use crate::geo::{GeoPoint, LocationId};

/// Per-capita values are expressed per this many inhabitants.
pub const PER_CAPITA_BASIS: f64 = 100_000.0;

const FIXED_COLUMNS: [&str; 4] = ["Province/State", "Country/Region", "Lat", "Long"];

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("malformed header, column {column}: {message}")]
    Header { column: usize, message: String },
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Cell {
        row: u64,
        column: usize,
        value: String,
    },
    #[error("row {row}: duplicate location {name:?}")]
    DuplicateRow { row: u64, name: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Width {
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("series lengths differ: {0:?}")]
    LengthMismatch(Vec<usize>),
    #[error("location {location}: no usable {what} for normalization")]
    MissingDenominator {
        location: LocationId,
        what: &'static str,
    },
    #[error("row for {0:?} has no coordinates and no matching gazetteer entry")]
    Unplaceable(String),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
}

/// The three cumulative variables published as separate files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseVariable {
    Confirmed,
    Deaths,
    Recovered,
}

impl CaseVariable {
    /// Guesses the variable from a file name such as
    /// `time_series_covid19_deaths_global.csv`.
    pub fn from_file_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        [
            ("confirmed", CaseVariable::Confirmed),
            ("deaths", CaseVariable::Deaths),
            ("recovered", CaseVariable::Recovered),
        ]
        .into_iter()
        .find(|(k, _)| lower.contains(k))
        .map(|(_, v)| v)
    }
}

/// One row of a wide case file.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub province: Option<String>,
    pub country: String,
    pub point: Option<GeoPoint>,
    /// One entry per day starting at the table's `start`; `None` = not reported.
    pub counts: Vec<Option<u64>>,
}

impl CaseRow {
    pub fn display_name(&self) -> &str {
        self.province.as_deref().unwrap_or(&self.country)
    }
}

/// A parsed wide CSV on a contiguous daily axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTable {
    pub start: Option<NaiveDate>,
    pub days: usize,
    pub rows: Vec<CaseRow>,
}

pub fn parse_case_date(s: &str) -> Option<NaiveDate> {
    let mut it = s.trim().split('/');
    let (m, d, y) = (it.next()?, it.next()?, it.next()?);
    if it.next().is_some() {
        return None;
    }
    let year: i32 = y.parse().ok()?;
    let year = if y.len() <= 2 { 2000 + year } else { year };
    NaiveDate::from_ymd_opt(year, m.parse().ok()?, d.parse().ok()?)
}

pub fn format_case_date(d: NaiveDate) -> String {
    format!("{}/{}/{:02}", d.month(), d.day(), d.year() % 100)
}

impl CaseTable {
    pub fn parse<R: Read>(reader: R) -> Result<Self, CaseError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        for (i, want) in FIXED_COLUMNS.iter().enumerate() {
            match header.get(i) {
                Some(h) if h.trim().trim_start_matches('\u{feff}') == *want => {}
                other => {
                    return Err(CaseError::Header {
                        column: i + 1,
                        message: format!("expected {want:?}, found {other:?}"),
                    })
                }
            }
        }

        let mut dated: Vec<(NaiveDate, usize)> = Vec::new();
        for (i, h) in header.iter().enumerate().skip(FIXED_COLUMNS.len()) {
            let date = parse_case_date(h).ok_or_else(|| CaseError::Header {
                column: i + 1,
                message: format!("{h:?} is not an M/D/YY date"),
            })?;
            dated.push((date, i));
        }
        dated.sort();
        for pair in dated.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(CaseError::Header {
                    column: pair[1].1 + 1,
                    message: format!("date {} appears twice", pair[1].0),
                });
            }
        }
        let start = dated.first().map(|d| d.0);
        let days = match (dated.first(), dated.last()) {
            (Some(a), Some(b)) => (b.0 - a.0).num_days() as usize + 1,
            _ => 0,
        };

        let mut rows = Vec::new();
        let mut seen: HashMap<(String, String), ()> = HashMap::new();
        for record in rdr.records() {
            let record = record?;
            let row = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                return Err(CaseError::Width {
                    row,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let province = Some(record[0].trim()).filter(|s| !s.is_empty()).map(str::to_string);
            let country = record[1].trim().to_string();
            let key = (
                province.as_deref().map(name_key).unwrap_or_default(),
                name_key(&country),
            );
            if seen.insert(key, ()).is_some() {
                return Err(CaseError::DuplicateRow {
                    row,
                    name: province.clone().unwrap_or(country),
                });
            }
            let coord = |col: usize| -> Result<Option<f64>, CaseError> {
                let v = record[col].trim();
                if v.is_empty() {
                    return Ok(None);
                }
                v.parse::<f64>().map(Some).map_err(|_| CaseError::Cell {
                    row,
                    column: col + 1,
                    value: v.to_string(),
                })
            };
            let point = match (coord(2)?, coord(3)?) {
                (Some(lat), Some(lon)) => {
                    Some(GeoPoint::new(lat, lon).map_err(|_| CaseError::Cell {
                        row,
                        column: 3,
                        value: format!("{lat},{lon}"),
                    })?)
                }
                _ => None,
            };
            let mut counts = vec![None; days];
            for &(date, col) in &dated {
                let v = record[col].trim();
                if v.is_empty() {
                    continue;
                }
                // some publishers write counts as "12.0"
                let n = v
                    .parse::<u64>()
                    .ok()
                    .or_else(|| {
                        v.parse::<f64>()
                            .ok()
                            .filter(|f| f.fract() == 0.0 && *f >= 0.0)
                            .map(|f| f as u64)
                    })
                    .ok_or_else(|| CaseError::Cell {
                        row,
                        column: col + 1,
                        value: v.to_string(),
                    })?;
                let idx = (date - start.expect("dated columns exist")).num_days() as usize;
                counts[idx] = Some(n);
            }
            rows.push(CaseRow {
                province,
                country,
                point,
                counts,
            });
        }
        Ok(CaseTable { start, days, rows })
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start
            .map(|s| s.iter_days().take(self.days).collect())
            .unwrap_or_default()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CaseError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(self.dates().into_iter().map(format_case_date));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.province.clone().unwrap_or_default(),
                row.country.clone(),
                row.point.map(|p| p.lat().to_string()).unwrap_or_default(),
                row.point.map(|p| p.lon().to_string()).unwrap_or_default(),
            ];
            rec.extend(
                row.counts
                    .iter()
                    .map(|c| c.map(|n| n.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Fills gaps by carrying the previous value forward (leading gaps become 0)
/// and clamps decreases so the result is non-decreasing.
pub fn repair_series(raw: &[Option<u64>]) -> Vec<u64> {
    let mut prev = 0u64;
    raw.iter()
        .map(|v| {
            prev = v.map_or(prev, |n| n.max(prev));
            prev
        })
        .collect()
}

/// [`repair_series`] for sparse dated observations; the output covers every
/// day from the first to the last observed date.
pub fn repair_dated(points: &BTreeMap<NaiveDate, u64>) -> Vec<(NaiveDate, u64)> {
    let (Some((&first, _)), Some((&last, _))) = (points.first_key_value(), points.last_key_value())
    else {
        return Vec::new();
    };
    let days: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).collect();
    let raw: Vec<Option<u64>> = days.iter().map(|d| points.get(d).copied()).collect();
    days.into_iter().zip(repair_series(&raw)).collect()
}

pub fn derive_active(confirmed: &[u64], deaths: &[u64], recovered: &[u64]) -> Result<Vec<u64>, CaseError> {
    if confirmed.len() != deaths.len() || confirmed.len() != recovered.len() {
        return Err(CaseError::LengthMismatch(vec![
            confirmed.len(),
            deaths.len(),
            recovered.len(),
        ]));
    }
    Ok(confirmed
        .iter()
        .zip(deaths)
        .zip(recovered)
        .map(|((&c, &d), &r)| c.saturating_sub(d).saturating_sub(r))
        .collect())
}

/// First differences; day 0 keeps its cumulative value.
pub fn derive_daily_new(cumulative: &[u64]) -> Vec<u64> {
    let mut prev = 0u64;
    cumulative
        .iter()
        .map(|&c| {
            let d = c.saturating_sub(prev);
            prev = c;
            d
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    PerCapita,
    PerArea,
}

pub fn normalize(
    values: &[u64],
    mode: Normalization,
    location: LocationId,
    g: &Gazetteer,
) -> Result<Vec<f64>, CaseError> {
    let entry = g.entry(location)?;
    let scale = match mode {
        Normalization::PerCapita => match entry.population {
            0 => None,
            p => Some(PER_CAPITA_BASIS / p as f64),
        },
        Normalization::PerArea => entry.area_km2.filter(|a| *a > 0.0).map(|a| 1.0 / a),
    }
    .ok_or(CaseError::MissingDenominator {
        location,
        what: match mode {
            Normalization::PerCapita => "population",
            Normalization::PerArea => "area",
        },
    })?;
    Ok(values.iter().map(|&v| v as f64 * scale).collect())
}

/// Repaired cumulative counts for one location on a contiguous daily axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub location: LocationId,
    pub start: NaiveDate,
    pub confirmed: Vec<u64>,
    pub deaths: Vec<u64>,
    pub recovered: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedSeries {
    pub active: Vec<u64>,
    pub new_confirmed: Vec<u64>,
    pub new_deaths: Vec<u64>,
    pub new_recovered: Vec<u64>,
}

impl CaseSeries {
    pub fn len(&self) -> usize {
        self.confirmed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confirmed.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len())
    }

    pub fn get(&self, v: CaseVariable) -> &[u64] {
        match v {
            CaseVariable::Confirmed => &self.confirmed,
            CaseVariable::Deaths => &self.deaths,
            CaseVariable::Recovered => &self.recovered,
        }
    }

    pub fn derived(&self) -> DerivedSeries {
        DerivedSeries {
            active: derive_active(&self.confirmed, &self.deaths, &self.recovered)
                .expect("series share one axis"),
            new_confirmed: derive_daily_new(&self.confirmed),
            new_deaths: derive_daily_new(&self.deaths),
            new_recovered: derive_daily_new(&self.recovered),
        }
    }
}

/// Finds (or creates) the gazetteer entry a case row refers to.
fn locate_row(row: &CaseRow, g: &mut Gazetteer) -> Result<LocationId, CaseError> {
    let country_key = name_key(&row.country);
    let root_of = |g: &Gazetteer, id: LocationId| -> LocationId {
        g.ancestors(id).ok().and_then(|a| a.last().copied()).unwrap_or(id)
    };
    let country = g
        .candidates(&row.country)
        .iter()
        .copied()
        .filter(|&id| g.get(id).is_some_and(|e| e.parent.is_none()))
        .max_by(|&a, &b| {
            let (ea, eb) = (g.get(a).unwrap(), g.get(b).unwrap());
            ea.population.cmp(&eb.population).then(b.cmp(&a))
        });

    let Some(province) = &row.province else {
        if let Some(id) = country {
            return Ok(id);
        }
        return create_entry(g, &row.country, row, AdminLevel::Country, None);
    };

    // prefer a same-named entry inside the row's country
    let inside: Vec<LocationId> = g
        .candidates(province)
        .iter()
        .copied()
        .filter(|&id| {
            let root = root_of(g, id);
            g.get(root)
                .is_some_and(|r| name_key(&r.canonical_name) == country_key || Some(root) == country)
        })
        .collect();
    if let Some(best) = inside.into_iter().max_by(|&a, &b| {
        let (ea, eb) = (g.get(a).unwrap(), g.get(b).unwrap());
        ea.population.cmp(&eb.population).then(b.cmp(&a))
    }) {
        return Ok(best);
    }
    let parent = match country {
        Some(c) => c,
        None => create_entry(g, &row.country, row, AdminLevel::Country, None)?,
    };
    create_entry(g, province, row, AdminLevel::State, Some(parent))
}

fn create_entry(
    g: &mut Gazetteer,
    name: &str,
    row: &CaseRow,
    level: AdminLevel,
    parent: Option<LocationId>,
) -> Result<LocationId, CaseError> {
    let point = row
        .point
        .ok_or_else(|| CaseError::Unplaceable(row.display_name().to_string()))?;
    let id = g.next_id();
    g.insert(GazetteerEntry {
        id,
        canonical_name: name.to_string(),
        alt_names: Vec::new(),
        point,
        admin_level: level,
        parent,
        adjacent: Vec::new(),
        population: 0,
        area_km2: None,
    })?;
    Ok(id)
}

/// Joins the per-variable tables into one [`CaseSeries`] per location on a
/// shared axis. Rows without a gazetteer match become new entries.
/// Variables missing for a location are zero (not every jurisdiction
/// reports recoveries).
pub fn join_case_tables(
    tables: &[(CaseVariable, CaseTable)],
    g: &mut Gazetteer,
) -> Result<Vec<CaseSeries>, CaseError> {
    let starts = tables.iter().filter_map(|(_, t)| t.start);
    let Some(axis_start) = starts.clone().min() else {
        return Ok(Vec::new());
    };
    let axis_end = tables
        .iter()
        .filter_map(|(_, t)| t.start.map(|s| s + chrono::Days::new(t.days as u64)))
        .max()
        .expect("some table has dates");
    let days = (axis_end - axis_start).num_days() as usize;

    let mut by_loc: BTreeMap<LocationId, HashMap<CaseVariable, Vec<u64>>> = BTreeMap::new();
    for (var, table) in tables {
        let Some(start) = table.start else { continue };
        let offset = (start - axis_start).num_days() as usize;
        for row in &table.rows {
            let loc = locate_row(row, g)?;
            let mut raw = vec![None; days];
            for (i, c) in row.counts.iter().enumerate() {
                if c.is_some() {
                    raw[offset + i] = *c;
                }
            }
            if offset > 0 {
                // leading days before this file starts are zeros, not gaps
                raw[..offset].iter_mut().for_each(|v| *v = Some(0));
            }
            by_loc.entry(loc).or_default().insert(*var, repair_series(&raw));
        }
    }

    Ok(by_loc
        .into_iter()
        .map(|(location, mut vars)| {
            let mut take = |v| vars.remove(&v).unwrap_or_else(|| vec![0; days]);
            CaseSeries {
                location,
                start: axis_start,
                confirmed: take(CaseVariable::Confirmed),
                deaths: take(CaseVariable::Deaths),
                recovered: take(CaseVariable::Recovered),
            }
        })
        .collect())
}

/// Parses one variable's file and joins it against the gazetteer.
pub fn parse_case_csv<R: Read>(
    reader: R,
    variable: CaseVariable,
    g: &mut Gazetteer,
) -> Result<Vec<CaseSeries>, CaseError> {
    let table = CaseTable::parse(reader)?;
    join_case_tables(&[(variable, table)], g)
}
