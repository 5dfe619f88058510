//! Pearson correlation between article counts and confirmed cases over a
//! geographic area, with outage dates removed before comparison.

use std::collections::BTreeSet;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::gazetteer::GazetteerError;
use crate::geo::{LocationId, VariableKind};
use crate::index::{IndexError, StIndex};

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooShort(usize),
    #[error("a series has zero variance")]
    ZeroVariance,
    #[error("series share no dates after exclusions")]
    EmptyAlignment,
    #[error("bad date list {0:?}")]
    BadDates(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
}

/// Sample Pearson correlation, computed with a single-pass co-moment update.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort(x.len()));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Daily values on a contiguous date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedSeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Self {
        DatedSeries { start, values }
    }

    pub fn end(&self) -> NaiveDate {
        self.start + chrono::Days::new(self.values.len() as u64)
    }

    pub fn get(&self, d: NaiveDate) -> Option<f64> {
        let i = (d - self.start).num_days();
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    /// Running total of the values.
    pub fn accumulate(&self) -> DatedSeries {
        let mut acc = 0.0;
        DatedSeries {
            start: self.start,
            values: self
                .values
                .iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPair {
    pub dates: Vec<NaiveDate>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub excluded_dates: Vec<NaiveDate>,
}

/// Restricts both series to their common dates and drops `exclude` from both.
pub fn align(
    articles: &DatedSeries,
    cases: &DatedSeries,
    exclude: &BTreeSet<NaiveDate>,
) -> Result<AlignedPair, CorrelationError> {
    let from = articles.start.max(cases.start);
    let to = articles.end().min(cases.end());
    let mut pair = AlignedPair {
        dates: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        excluded_dates: Vec::new(),
    };
    for d in from.iter_days().take_while(|d| *d < to) {
        if exclude.contains(&d) {
            pair.excluded_dates.push(d);
            continue;
        }
        pair.dates.push(d);
        pair.x.push(articles.get(d).expect("inside range"));
        pair.y.push(cases.get(d).expect("inside range"));
    }
    if pair.dates.is_empty() {
        return Err(CorrelationError::EmptyAlignment);
    }
    Ok(pair)
}

/// Geographic scope of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Area {
    World,
    Location(LocationId),
}

impl Area {
    /// `world`, a numeric id, or a gazetteer name.
    pub fn parse(name: &str, idx: &StIndex) -> Result<Area, CorrelationError> {
        let name = name.trim();
        if name.eq_ignore_ascii_case("world") {
            return Ok(Area::World);
        }
        if let Ok(n) = name.parse::<u64>() {
            let id = LocationId(n);
            idx.gazetteer().entry(id)?;
            return Ok(Area::Location(id));
        }
        Ok(Area::Location(idx.gazetteer().resolve_toponym(name)?))
    }

    pub fn label(&self, idx: &StIndex) -> String {
        match self {
            Area::World => "World".into(),
            Area::Location(id) => idx
                .gazetteer()
                .get(*id)
                .map_or_else(|| id.to_string(), |e| e.canonical_name.clone()),
        }
    }

    /// The area together with everything it contains.
    pub fn closure(&self, idx: &StIndex) -> Result<Vec<LocationId>, CorrelationError> {
        match self {
            Area::World => Ok(idx.location_ids().collect()),
            Area::Location(id) => Ok(idx.gazetteer().closure(*id)?),
        }
    }
}

/// Which articles count toward the article series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocFilter {
    None,
    Terms(Vec<String>),
}

impl DocFilter {
    pub fn label(&self) -> String {
        match self {
            DocFilter::None => "none".into(),
            DocFilter::Terms(t) => t.join("|"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaCorrelation {
    pub area: String,
    pub filter: String,
    /// Cumulative articles against cumulative confirmed cases.
    pub coefficient: f64,
    pub n_points: usize,
    pub excluded_dates: Vec<NaiveDate>,
    /// Same comparison on daily-new values; `None` when undefined.
    pub daily_coefficient: Option<f64>,
}

/// Daily article and confirmed-case series summed over the area closure.
pub fn area_series(
    idx: &StIndex,
    area: Area,
    filter: &DocFilter,
) -> Result<(DatedSeries, DatedSeries), CorrelationError> {
    let locations = area.closure(idx)?;
    let view = match filter {
        DocFilter::None => idx.unfiltered(),
        DocFilter::Terms(t) => idx.filtered(t),
    };
    let start = idx.start_date().ok_or(CorrelationError::EmptyAlignment)?;
    let to_f64 = |v: Vec<u64>| v.into_iter().map(|n| n as f64).collect::<Vec<_>>();
    let articles = to_f64(view.area_daily(&locations, VariableKind::NewsCount)?);
    let cases = to_f64(idx.unfiltered().area_daily(&locations, VariableKind::Confirmed)?);
    Ok((DatedSeries::new(start, articles), DatedSeries::new(start, cases)))
}

pub fn evaluate_area(
    idx: &StIndex,
    area: Area,
    filter: &DocFilter,
    exclude: &BTreeSet<NaiveDate>,
) -> Result<AreaCorrelation, CorrelationError> {
    let (articles, cases) = area_series(idx, area, filter)?;
    let cumulative = align(&articles.accumulate(), &cases.accumulate(), exclude)?;
    let coefficient = pearson(&cumulative.x, &cumulative.y)?;
    let daily_coefficient = align(&articles, &cases, exclude)
        .and_then(|p| pearson(&p.x, &p.y))
        .ok();
    Ok(AreaCorrelation {
        area: area.label(idx),
        filter: filter.label(),
        coefficient,
        n_points: cumulative.dates.len(),
        excluded_dates: cumulative.excluded_dates,
        daily_coefficient,
    })
}

/// Parses `YYYY-MM-DD` dates and `YYYY-MM-DD..YYYY-MM-DD` inclusive ranges,
/// comma separated.
pub fn parse_date_set(s: &str) -> Result<BTreeSet<NaiveDate>, CorrelationError> {
    let parse = |d: &str| {
        NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
            .map_err(|_| CorrelationError::BadDates(s.to_string()))
    };
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(CorrelationError::BadDates(s.to_string()));
                }
                out.extend(a.iter_days().take_while(|d| *d <= b));
            }
            None => {
                out.insert(parse(part)?);
            }
        }
    }
    Ok(out)
}

pub fn write_correlation_csv<W: Write>(rows: &[AreaCorrelation], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["area", "filter", "coefficient", "n_points"])?;
    for r in rows {
        w.write_record([
            r.area.clone(),
            r.filter.clone(),
            format!("{:.6}", r.coefficient),
            r.n_points.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
