//! Static gazetteer: toponym recognition, population-based resolution and
//! spatial synonyms over the containment hierarchy plus adjacency links.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, GeoError, GeoPoint, LocationId};

/// Longest multi-token name the recognizer will try to match.
pub const MAX_NAME_TOKENS: usize = 4;

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("gazetteer line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("gazetteer read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate location id {0}")]
    DuplicateId(LocationId),
    #[error("entry {entry}: parent {parent} does not exist")]
    DanglingParent {
        entry: LocationId,
        parent: LocationId,
    },
    #[error("entry {entry}: adjacent {neighbor} does not exist")]
    DanglingAdjacent {
        entry: LocationId,
        neighbor: LocationId,
    },
    #[error("entry {0}: parent chain contains a cycle")]
    Cycle(LocationId),
    #[error("entry {0}: top of the parent chain is not a country")]
    RootNotCountry(LocationId),
    #[error("entry {0}: area_km2 must be positive")]
    BadArea(LocationId),
    #[error("entry {entry}: {source}")]
    BadPoint { entry: LocationId, source: GeoError },
    #[error("no gazetteer entry named {0:?}")]
    NameNotFound(String),
    #[error("unknown location id {0}")]
    UnknownId(LocationId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdminLevel {
    Country,
    State,
    County,
    City,
}

/// One named place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EntryRecord", try_from = "EntryRecord")]
pub struct GazetteerEntry {
    pub id: LocationId,
    pub canonical_name: String,
    pub alt_names: Vec<String>,
    pub point: GeoPoint,
    pub admin_level: AdminLevel,
    pub parent: Option<LocationId>,
    pub adjacent: Vec<LocationId>,
    pub population: u64,
    /// `None` for entries synthesized from case data rows.
    pub area_km2: Option<f64>,
}

/// On-disk JSON Lines form.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryRecord {
    id: u64,
    name: String,
    #[serde(default)]
    alt_names: Vec<String>,
    lat: f64,
    lon: f64,
    admin_level: AdminLevel,
    #[serde(default)]
    parent: Option<u64>,
    #[serde(default)]
    adjacent: Vec<u64>,
    #[serde(default)]
    population: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area_km2: Option<f64>,
}

impl From<GazetteerEntry> for EntryRecord {
    fn from(e: GazetteerEntry) -> Self {
        EntryRecord {
            id: e.id.0,
            name: e.canonical_name,
            alt_names: e.alt_names,
            lat: e.point.lat(),
            lon: e.point.lon(),
            admin_level: e.admin_level,
            parent: e.parent.map(|p| p.0),
            adjacent: e.adjacent.into_iter().map(|a| a.0).collect(),
            population: e.population,
            area_km2: e.area_km2,
        }
    }
}

impl TryFrom<EntryRecord> for GazetteerEntry {
    type Error = GazetteerError;

    fn try_from(r: EntryRecord) -> Result<Self, Self::Error> {
        let id = LocationId(r.id);
        let point = GeoPoint::new(r.lat, r.lon)
            .map_err(|source| GazetteerError::BadPoint { entry: id, source })?;
        if let Some(a) = r.area_km2 {
            if a.is_nan() || a <= 0.0 {
                return Err(GazetteerError::BadArea(id));
            }
        }
        Ok(GazetteerEntry {
            id,
            canonical_name: r.name,
            alt_names: r.alt_names,
            point,
            admin_level: r.admin_level,
            parent: r.parent.map(LocationId),
            adjacent: r.adjacent.into_iter().map(LocationId).collect(),
            population: r.population,
            area_km2: r.area_km2,
        })
    }
}

/// A toponym occurrence found in text. Offsets are byte positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToponymMatch {
    pub name: String,
    pub key: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    position: HashMap<LocationId, usize>,
    names: HashMap<String, Vec<LocationId>>,
    children: HashMap<LocationId, Vec<LocationId>>,
}

/// Word spans used for both name keys and text scanning: runs of
/// alphanumerics and hyphens.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let word = c.is_alphanumeric() || c == '-';
        match (word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    // strip leading/trailing hyphens so "-Paris-" still matches
    spans
        .into_iter()
        .filter_map(|(s, e)| {
            let w = &text[s..e];
            let trimmed = w.trim_matches('-');
            if trimmed.is_empty() {
                return None;
            }
            let offset = w.find(trimmed).unwrap_or(0);
            Some((s + offset, s + offset + trimmed.len()))
        })
        .collect()
}

/// Case-folded lookup key for a place name.
pub fn name_key(name: &str) -> String {
    word_spans(name)
        .into_iter()
        .map(|(s, e)| name[s..e].to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Gazetteer {
    /// Reads a JSON Lines gazetteer. Blank lines are skipped.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, GazetteerError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: GazetteerEntry =
                serde_json::from_str(&line).map_err(|e| GazetteerError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Self::from_entries(entries)
    }

    /// Validates and indexes a set of entries. Adjacency is symmetrized.
    pub fn from_entries(mut entries: Vec<GazetteerEntry>) -> Result<Self, GazetteerError> {
        entries.sort_by_key(|e| e.id);
        let mut position = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if position.insert(e.id, i).is_some() {
                return Err(GazetteerError::DuplicateId(e.id));
            }
        }

        let mut links = Vec::new();
        for e in &entries {
            if let Some(p) = e.parent {
                if !position.contains_key(&p) {
                    return Err(GazetteerError::DanglingParent {
                        entry: e.id,
                        parent: p,
                    });
                }
            }
            for &n in &e.adjacent {
                if !position.contains_key(&n) {
                    return Err(GazetteerError::DanglingAdjacent {
                        entry: e.id,
                        neighbor: n,
                    });
                }
                links.push((e.id, n));
            }
        }
        for (a, b) in links {
            if a != b {
                entries[position[&b]].adjacent.push(a);
            }
        }
        for e in &mut entries {
            let me = e.id;
            e.adjacent.retain(|&n| n != me);
            e.adjacent.sort();
            e.adjacent.dedup();
        }

        // parent chains: acyclic and rooted at a country
        for e in &entries {
            let mut cur = e;
            let mut steps = 0;
            while let Some(p) = cur.parent {
                steps += 1;
                if p == e.id || steps > entries.len() {
                    return Err(GazetteerError::Cycle(e.id));
                }
                cur = &entries[position[&p]];
            }
            if cur.admin_level != AdminLevel::Country {
                return Err(GazetteerError::RootNotCountry(e.id));
            }
        }

        let mut names: HashMap<String, Vec<LocationId>> = HashMap::new();
        let mut children: HashMap<LocationId, Vec<LocationId>> = HashMap::new();
        for e in &entries {
            for n in std::iter::once(&e.canonical_name).chain(&e.alt_names) {
                let key = name_key(n);
                if !key.is_empty() {
                    let ids = names.entry(key).or_default();
                    if !ids.contains(&e.id) {
                        ids.push(e.id);
                    }
                }
            }
            if let Some(p) = e.parent {
                children.entry(p).or_default().push(e.id);
            }
        }

        Ok(Gazetteer {
            entries,
            position,
            names,
            children,
        })
    }

    /// Serializes back to JSON Lines.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: LocationId) -> Option<&GazetteerEntry> {
        self.position.get(&id).map(|&i| &self.entries[i])
    }

    pub fn entry(&self, id: LocationId) -> Result<&GazetteerEntry, GazetteerError> {
        self.get(id).ok_or(GazetteerError::UnknownId(id))
    }

    pub fn contains(&self, id: LocationId) -> bool {
        self.position.contains_key(&id)
    }

    pub fn next_id(&self) -> LocationId {
        LocationId(self.entries.last().map_or(1, |e| e.id.0 + 1))
    }

    /// Adds one entry, re-running validation.
    pub fn insert(&mut self, entry: GazetteerEntry) -> Result<(), GazetteerError> {
        let mut entries = std::mem::take(&mut self.entries);
        entries.push(entry);
        match Self::from_entries(entries.clone()) {
            Ok(g) => {
                *self = g;
                Ok(())
            }
            Err(e) => {
                entries.pop();
                *self = Self::from_entries(entries).expect("previous state was valid");
                Err(e)
            }
        }
    }

    pub fn candidates(&self, name: &str) -> &[LocationId] {
        self.names
            .get(&name_key(name))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Longest-match left-to-right scan for known names of up to
    /// [`MAX_NAME_TOKENS`] words. Matches never overlap.
    pub fn recognize_toponyms(&self, text: &str) -> Vec<ToponymMatch> {
        let spans = word_spans(text);
        let folded: Vec<String> = spans.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();
        let mut found = Vec::new();
        let mut i = 0;
        while i < spans.len() {
            let longest = (1..=MAX_NAME_TOKENS.min(spans.len() - i)).rev().find_map(|len| {
                let key = folded[i..i + len].join(" ");
                self.names.contains_key(&key).then_some((len, key))
            });
            match longest {
                Some((len, key)) => {
                    let (start, end) = (spans[i].0, spans[i + len - 1].1);
                    found.push(ToponymMatch {
                        name: text[start..end].to_string(),
                        key,
                        start,
                        end,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }

    /// Picks the most populous candidate; equal populations go to the smaller id.
    pub fn resolve_toponym(&self, name: &str) -> Result<LocationId, GazetteerError> {
        self.candidates(name)
            .iter()
            .map(|&id| &self.entries[self.position[&id]])
            .min_by(|a, b| b.population.cmp(&a.population).then(a.id.cmp(&b.id)))
            .map(|e| e.id)
            .ok_or_else(|| GazetteerError::NameNotFound(name.to_string()))
    }

    pub fn children(&self, id: LocationId) -> &[LocationId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Parent, grandparent, ... up to the country.
    pub fn ancestors(&self, id: LocationId) -> Result<Vec<LocationId>, GazetteerError> {
        let mut out = Vec::new();
        let mut cur = self.entry(id)?;
        while let Some(p) = cur.parent {
            out.push(p);
            cur = self.entry(p)?;
        }
        Ok(out)
    }

    pub fn descendants(&self, id: LocationId) -> Result<Vec<LocationId>, GazetteerError> {
        self.entry(id)?;
        let mut out = Vec::new();
        let mut queue: VecDeque<LocationId> = self.children(id).iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            out.push(c);
            queue.extend(self.children(c).iter().copied());
        }
        Ok(out)
    }

    /// `id` together with everything it contains.
    pub fn closure(&self, id: LocationId) -> Result<Vec<LocationId>, GazetteerError> {
        let mut out = self.descendants(id)?;
        out.push(id);
        out.sort();
        Ok(out)
    }

    pub fn depth(&self, id: LocationId) -> Result<usize, GazetteerError> {
        Ok(self.ancestors(id)?.len())
    }

    /// Containing, contained and adjacent places, excluding `id` itself.
    pub fn spatial_synonyms(&self, id: LocationId) -> Result<Vec<LocationId>, GazetteerError> {
        let entry = self.entry(id)?;
        let mut set: BTreeSet<LocationId> = self.descendants(id)?.into_iter().collect();
        set.extend(self.ancestors(id)?);
        set.extend(entry.adjacent.iter().copied());
        set.remove(&id);
        Ok(set.into_iter().collect())
    }

    /// Closest entry within `max_km`; ties go to the smaller id.
    pub fn nearest(&self, p: GeoPoint, max_km: f64) -> Option<(LocationId, f64)> {
        let mut best: Option<(LocationId, f64)> = None;
        for e in &self.entries {
            let d = haversine_distance(p, e.point);
            if d <= max_km && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e.id, d));
            }
        }
        best
    }

    /// Top-level entries (countries).
    pub fn roots(&self) -> Vec<LocationId> {
        self.entries
            .iter()
            .filter(|e| e.parent.is_none())
            .map(|e| e.id)
            .collect()
    }
}

pub fn load_gazetteer<R: BufRead>(reader: R) -> Result<Gazetteer, GazetteerError> {
    Gazetteer::load(reader)
}

pub fn recognize_toponyms(text: &str, g: &Gazetteer) -> Vec<ToponymMatch> {
    g.recognize_toponyms(text)
}

pub fn resolve_toponym(name: &str, g: &Gazetteer) -> Result<LocationId, GazetteerError> {
    g.resolve_toponym(name)
}

pub fn spatial_synonyms(loc: LocationId, g: &Gazetteer) -> Result<Vec<LocationId>, GazetteerError> {
    g.spatial_synonyms(loc)
}
