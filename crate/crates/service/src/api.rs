use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::Json;
use chrono::{DateTime, Days, NaiveDate, Utc};
use epimap::corpus::DEFAULT_QUERY_TERMS;
use epimap::correlation::{evaluate_area, parse_date_set, Area, CorrelationError, DocFilter};
use epimap::geo::Accumulation;
use epimap::index::{
    cluster_markers, weighted_centroid, AggregateMode, FrameSpec, IndexError, StepSize, View,
    WindowSize,
};
use epimap::layout::{
    emphasize, layout_geocircles, marker_color, radius_for_value, GeoCircleSet, MarkerColor, RING_DASH_PX,
    RING_STROKE_PX,
};
use epimap::{BoundingBox, GeoPoint, LocationId, StIndex, VariableKind};
use serde::Serialize;
use serde_json::{json, Value};

use crate::params::{date_range, flag, midnight, parse_param, terms, variables, window_of};
use crate::{ApiError, IndexSlot, API_VERSION};

/// Layers shown before the user changes anything.
pub(crate) const DEFAULT_LAYERS: [VariableKind; 2] = [VariableKind::Confirmed, VariableKind::NewsCount];
/// Clustering zoom for /frames when none is given.
pub(crate) const DEFAULT_FRAME_ZOOM: u8 = 4;

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;
type ApiResult = Result<Json<Value>, ApiError>;

fn current(slot: &IndexSlot) -> Result<Arc<StIndex>, ApiError> {
    slot.current()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no index loaded"))
}

fn params(p: Params) -> Result<HashMap<String, String>, ApiError> {
    p.map(|Query(q)| q)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn view_for<'a>(idx: &'a StIndex, keyword: &Option<Vec<String>>) -> View<'a> {
    match keyword {
        Some(t) => idx.filtered(t),
        None => idx.unfiltered(),
    }
}

fn keyword_param(q: &HashMap<String, String>) -> Option<Vec<String>> {
    q.get("keyword").map(|k| terms(k)).filter(|t| !t.is_empty())
}

fn location_name(idx: &StIndex, id: LocationId) -> String {
    idx.gazetteer()
        .get(id)
        .map_or_else(|| id.to_string(), |e| e.canonical_name.clone())
}

fn circle_set_json(set: &GeoCircleSet) -> Value {
    let mut v = serde_json::to_value(set).expect("circle set serializes");
    v["emphasized"] = json!(set.is_emphasized());
    v
}

pub(crate) async fn layers(State(slot): State<IndexSlot>) -> ApiResult {
    let idx = current(&slot)?;
    let layers: Vec<Value> = VariableKind::ALL
        .iter()
        .map(|&v| {
            let disease = v.is_disease();
            json!({
                "variable": v.name(),
                "color": v.color(),
                "style": if disease { "hollow" } else { "solid" },
                "stroke_px": if disease { RING_STROKE_PX } else { 0.0 },
                "dash_px": if disease { Some(RING_DASH_PX) } else { None },
                "accumulation": match v.accumulation() {
                    Accumulation::Cumulative => "cumulative",
                    Accumulation::Stock => "stock",
                    Accumulation::Events => "events",
                },
                "default": DEFAULT_LAYERS.contains(&v),
            })
        })
        .collect();
    let dates = idx.dates();
    Ok(Json(json!({
        "v": API_VERSION,
        "layers": layers,
        "default_keyword": DEFAULT_QUERY_TERMS[0],
        "data": {
            "start": dates.first(),
            "end": dates.last(),
            "days": idx.days(),
            "locations": idx.location_count(),
            "max_zoom": idx.zmax(),
        },
    })))
}

pub(crate) async fn download(State(slot): State<IndexSlot>, q: Params) -> ApiResult {
    let idx = current(&slot)?;
    let q = params(q)?;
    let keyword = keyword_param(&q).ok_or_else(|| ApiError::bad_request("keyword is required"))?;
    let (start, end) = date_range(&idx, q.get("start").map(String::as_str), q.get("end").map(String::as_str))?;

    let mut counts: BTreeMap<(LocationId, NaiveDate), (u64, u64)> = BTreeMap::new();
    for term in &keyword {
        for c in idx.keyword_counts(term, start, end) {
            let e = counts.entry((c.location, c.date)).or_default();
            e.0 += c.news;
            e.1 += c.tweets;
        }
    }
    let (news, tweets) = counts.values().fold((0, 0), |a, c| (a.0 + c.0, a.1 + c.1));
    let rows: Vec<Value> = counts
        .into_iter()
        .map(|((location, date), (news, tweets))| {
            json!({
                "location": location,
                "name": location_name(&idx, location),
                "date": date,
                "news": news,
                "tweets": tweets,
            })
        })
        .collect();
    Ok(Json(json!({
        "v": API_VERSION,
        "keyword": keyword,
        "start": start,
        "end": end,
        "totals": {"news": news, "tweets": tweets},
        "counts": rows,
    })))
}

pub(crate) async fn frames(State(slot): State<IndexSlot>, q: Params) -> Result<Json<FramesBody>, ApiError> {
    let idx = current(&slot)?;
    let q = params(q)?;
    let get = |k: &str| q.get(k).map(String::as_str);

    let bbox: BoundingBox = parse_param("bbox", get("bbox"), BoundingBox::WORLD)?;
    let (start, end) = date_range(&idx, get("start"), get("end"))?;
    let window: WindowSize = parse_param("window", get("window"), WindowSize::Day)?;
    let step: StepSize = parse_param("step", get("step"), StepSize::Day)?;
    let mode: AggregateMode = parse_param("mode", get("mode"), AggregateMode::Instant)?;
    let vars = variables(get("variables"), &DEFAULT_LAYERS)?;
    let zoom: u8 = parse_param("zoom", get("zoom"), DEFAULT_FRAME_ZOOM.min(idx.zmax()))?;
    if zoom > idx.zmax() {
        return Err(ApiError::bad_request(format!("zoom {zoom} above index maximum {}", idx.zmax())));
    }
    let zero = match get("zero").map(str::trim).filter(|z| !z.is_empty()) {
        None => None,
        Some(z) => Some(z.parse::<VariableKind>().map_err(|e| ApiError::bad_request(format!("zero: {e}")))?),
    };
    let keyword = keyword_param(&q);
    let spec = FrameSpec::new(midnight(start), midnight(end + Days::new(1)), window, step, mode)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let view = view_for(&idx, &keyword);
    let doc_layers = vars.iter().filter(|v| v.is_document()).count();
    let mut frames = Vec::new();
    for (w, per_var) in view.frames_multi(&spec, &bbox, &vars) {
        let zero_set: Option<BTreeSet<LocationId>> =
            zero.map(|z| view.query_viewport_zero(&bbox, &w, z, mode).into_iter().collect());
        let mut totals = BTreeMap::new();
        let mut markers = Vec::new();
        let mut cell_values: BTreeMap<u64, BTreeMap<VariableKind, f64>> = BTreeMap::new();
        let mut cell_members: BTreeMap<u64, BTreeSet<LocationId>> = BTreeMap::new();
        for (v, values) in per_var {
            let points: Vec<(LocationId, GeoPoint, f64)> = values
                .into_iter()
                .filter(|(id, _)| zero_set.as_ref().is_none_or(|z| z.contains(id)))
                .filter_map(|(id, x)| idx.point(id).map(|p| (id, p, x)))
                .collect();
            totals.insert(v, points.iter().map(|p| p.2).sum::<f64>());
            for m in cluster_markers(&points, zoom, v) {
                *cell_values.entry(m.cell).or_default().entry(v).or_default() += m.count;
                cell_members.entry(m.cell).or_default().extend(&m.locations);
                markers.push(MarkerBody {
                    variable: v,
                    cell: m.cell,
                    center: m.point,
                    locations: m.locations.len(),
                    count: m.count,
                    radius_px: radius_for_value(m.count),
                    size_class: marker_color(m.count),
                    fill: v.color(),
                });
            }
        }
        let mut geocircles = Vec::new();
        for (cell, values) in cell_values {
            let members: Vec<(GeoPoint, f64)> = cell_members[&cell]
                .iter()
                .filter_map(|id| idx.point(*id))
                .map(|p| (p, 1.0))
                .collect();
            let center = weighted_centroid(&members).expect("cell has members");
            let values: Vec<(VariableKind, f64)> = values.into_iter().collect();
            if let Ok(set) = layout_geocircles(center, &values, doc_layers) {
                geocircles.push(CellCircles {
                    cell,
                    emphasized: set.is_emphasized(),
                    set,
                });
            }
        }
        frames.push(FrameBody {
            start: w.start(),
            end: w.end(),
            totals,
            markers,
            geocircles,
            zero_locations: zero_set.map(|z| z.len()),
        });
    }
    Ok(Json(FramesBody {
        v: API_VERSION,
        bbox: [bbox.south(), bbox.west(), bbox.north(), bbox.east()],
        start,
        end,
        mode,
        variables: vars,
        keyword,
        zero,
        zoom,
        frames,
    }))
}

#[derive(Serialize)]
pub(crate) struct FramesBody {
    v: u32,
    bbox: [f64; 4],
    start: NaiveDate,
    end: NaiveDate,
    mode: AggregateMode,
    variables: Vec<VariableKind>,
    keyword: Option<Vec<String>>,
    zero: Option<VariableKind>,
    zoom: u8,
    frames: Vec<FrameBody>,
}

#[derive(Serialize)]
struct FrameBody {
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    totals: BTreeMap<VariableKind, f64>,
    markers: Vec<MarkerBody>,
    geocircles: Vec<CellCircles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_locations: Option<usize>,
}

#[derive(Serialize)]
struct MarkerBody {
    variable: VariableKind,
    cell: u64,
    center: GeoPoint,
    locations: usize,
    count: f64,
    radius_px: f64,
    size_class: MarkerColor,
    fill: &'static str,
}

#[derive(Serialize)]
struct CellCircles {
    cell: u64,
    #[serde(flatten)]
    set: GeoCircleSet,
    emphasized: bool,
}

pub(crate) async fn pick(State(slot): State<IndexSlot>, q: Params) -> ApiResult {
    let idx = current(&slot)?;
    let q = params(q)?;
    let get = |k: &str| q.get(k).map(String::as_str);
    let lat: f64 = get("lat")
        .ok_or_else(|| ApiError::bad_request("lat is required"))?
        .trim()
        .parse()
        .map_err(|_| ApiError::bad_request("lat: not a number"))?;
    let lon: f64 = get("lon")
        .ok_or_else(|| ApiError::bad_request("lon is required"))?
        .trim()
        .parse()
        .map_err(|_| ApiError::bad_request("lon: not a number"))?;
    let point = GeoPoint::new(lat, lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let (start, end) = date_range(&idx, get("start"), get("end"))?;
    let vars = variables(get("variables"), &DEFAULT_LAYERS)?;
    let keyword = keyword_param(&q);

    let view = view_for(&idx, &keyword);
    let result = match view.pick_nearest_nonzero(point, &window_of(start, end), &vars) {
        Ok(r) => r,
        Err(IndexError::NoNonzero) => {
            return Err(ApiError::not_found("no location with nonzero values in this window"))
        }
        Err(e) => return Err(ApiError::bad_request(e.to_string())),
    };
    let center = idx.point(result.location).expect("picked location is indexed");
    let values: Vec<(VariableKind, f64)> = result.values.iter().map(|(k, v)| (*k, *v)).collect();
    let doc_layers = vars.iter().filter(|v| v.is_document()).count();
    let circles = layout_geocircles(center, &values, doc_layers)
        .map(|s| circle_set_json(&emphasize(&s)))
        .ok();
    Ok(Json(json!({
        "v": API_VERSION,
        "location": result.location,
        "name": location_name(&idx, result.location),
        "distance_km": result.distance_km,
        "start": start,
        "end": end,
        "values": result.values,
        "geocircles": circles,
    })))
}

pub(crate) async fn documents(State(slot): State<IndexSlot>, q: Params) -> ApiResult {
    let idx = current(&slot)?;
    let q = params(q)?;
    let get = |k: &str| q.get(k).map(String::as_str);
    let name = get("location")
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .ok_or_else(|| ApiError::bad_request("location is required"))?;
    let location = match Area::parse(name, &idx) {
        Ok(Area::Location(id)) => id,
        _ => return Err(ApiError::not_found(format!("unknown location {name:?}"))),
    };
    let (start, end) = date_range(&idx, get("start"), get("end"))?;
    let synonyms = flag("synonyms", get("synonyms"))?;

    let mut searched = vec![location];
    if synonyms {
        let extra = idx
            .gazetteer()
            .spatial_synonyms(location)
            .map_err(|e| ApiError::not_found(e.to_string()))?;
        searched.extend(extra);
    }
    let docs: Vec<Value> = idx
        .documents_at(&searched, &window_of(start, end))
        .into_iter()
        .map(|d| {
            json!({
                "id": d.id,
                "title": d.title,
                "url": d.url,
                "source_type": d.source_type,
                "published_at": d.published_at,
            })
        })
        .collect();
    Ok(Json(json!({
        "v": API_VERSION,
        "location": location,
        "name": location_name(&idx, location),
        "synonyms": synonyms,
        "searched": searched,
        "start": start,
        "end": end,
        "documents": docs,
    })))
}

pub(crate) async fn correlation(State(slot): State<IndexSlot>, q: Params) -> ApiResult {
    let idx = current(&slot)?;
    let q = params(q)?;
    let get = |k: &str| q.get(k).map(String::as_str);
    let name = get("area")
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ApiError::bad_request("area is required"))?;
    let area = Area::parse(name, &idx).map_err(|_| ApiError::not_found(format!("unknown area {name:?}")))?;
    let filter = match get("filter").map(str::trim) {
        None | Some("") => DocFilter::Terms(DEFAULT_QUERY_TERMS.iter().map(|t| t.to_string()).collect()),
        Some(f) if f.eq_ignore_ascii_case("none") => DocFilter::None,
        Some(f) => DocFilter::Terms(terms(f)),
    };
    let exclude = parse_date_set(get("exclude").unwrap_or(""))
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let r = evaluate_area(&idx, area, &filter, &exclude).map_err(|e| match e {
        CorrelationError::ZeroVariance | CorrelationError::EmptyAlignment | CorrelationError::TooShort(_) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        }
        CorrelationError::Gazetteer(_) => ApiError::not_found(e.to_string()),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    })?;
    Ok(Json(json!({
        "v": API_VERSION,
        "area": r.area,
        "filter": r.filter,
        "coefficient": r.coefficient,
        "daily_coefficient": r.daily_coefficient,
        "n_points": r.n_points,
        "excluded_dates": r.excluded_dates,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_news_and_confirmed() {
        let mut d = DEFAULT_LAYERS.to_vec();
        d.sort();
        assert_eq!(d, vec![VariableKind::Confirmed, VariableKind::NewsCount]);
    }
}
