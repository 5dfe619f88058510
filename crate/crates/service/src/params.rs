use std::str::FromStr;

use chrono::{DateTime, Days, NaiveDate, TimeZone, Utc};
use epimap::{StIndex, TimeWindow, VariableKind};

use crate::ApiError;

/// `YYYY-MM-DD`.
pub fn parse_query_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

pub(crate) fn date_param(name: &str, value: Option<&str>) -> Result<Option<NaiveDate>, ApiError> {
    match value.map(str::trim).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => parse_query_date(v)
            .map(Some)
            .ok_or_else(|| ApiError::bad_request(format!("{name}: expected YYYY-MM-DD, got {v:?}"))),
    }
}

pub(crate) fn midnight(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight exists"))
}

/// Inclusive date range; missing ends default to the index's date axis.
pub(crate) fn date_range(
    idx: &StIndex,
    start: Option<&str>,
    end: Option<&str>,
) -> Result<(NaiveDate, NaiveDate), ApiError> {
    let axis_start = idx.start_date();
    let axis_end = axis_start.map(|s| s + Days::new(idx.days().saturating_sub(1) as u64));
    let start = date_param("start", start)?.or(axis_start);
    let end = date_param("end", end)?.or(axis_end);
    match (start, end) {
        (Some(s), Some(e)) if s <= e => Ok((s, e)),
        (Some(s), Some(e)) => Err(ApiError::bad_request(format!("end {e} is before start {s}"))),
        _ => Err(ApiError::bad_request("start and end are required for an empty index")),
    }
}

/// Inclusive dates as the half-open window `[start 00:00, end + 1 day 00:00)`.
pub(crate) fn window_of(start: NaiveDate, end: NaiveDate) -> TimeWindow {
    TimeWindow::new(midnight(start), midnight(end + Days::new(1))).expect("start <= end")
}

pub(crate) fn parse_param<T: FromStr>(name: &str, value: Option<&str>, default: T) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    match value.map(str::trim).filter(|v| !v.is_empty()) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e| ApiError::bad_request(format!("{name}: {e}"))),
    }
}

pub(crate) fn variables(value: Option<&str>, default: &[VariableKind]) -> Result<Vec<VariableKind>, ApiError> {
    let Some(v) = value.map(str::trim).filter(|v| !v.is_empty()) else {
        return Ok(default.to_vec());
    };
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind: VariableKind = part
            .parse()
            .map_err(|e| ApiError::bad_request(format!("variables: {e}")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(ApiError::bad_request("variables: at least one is required"));
    }
    out.sort();
    Ok(out)
}

/// Comma- or pipe-separated terms, lowercased, deduplicated, order kept.
pub(crate) fn terms(value: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in value.split([',', '|']).map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()) {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

pub(crate) fn flag(name: &str, value: Option<&str>) -> Result<bool, ApiError> {
    match value.map(|v| v.trim().to_ascii_lowercase()).as_deref() {
        None | Some("") | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some(other) => Err(ApiError::bad_request(format!("{name}: expected a boolean, got {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_split_and_fold() {
        assert_eq!(terms("Coronavirus, COVID-19|coronavirus"), vec!["coronavirus", "covid-19"]);
        assert!(terms(" , ").is_empty());
    }

    #[test]
    fn variables_sorted_and_unique() {
        let v = variables(Some("news,Confirmed,confirmed"), &[]).unwrap();
        assert_eq!(v, vec![VariableKind::Confirmed, VariableKind::NewsCount]);
        assert!(variables(Some("Cases"), &[]).is_err());
    }

    #[test]
    fn flags() {
        assert!(flag("s", Some("true")).unwrap());
        assert!(!flag("s", None).unwrap());
        assert!(flag("s", Some("maybe")).is_err());
    }
}
