//! Documents to geocoded keywords: tokenization, TF-IDF keyword extraction,
//! keyword filtering and the keyword x toponym cross product.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gazetteer::Gazetteer;
use crate::geo::{GeoPoint, LocationId};

const STOPWORDS: &str = include_str!("../data/stopwords_en_v1.txt");

pub const DEFAULT_KEYWORDS_PER_DOC: usize = 10;
pub const DEFAULT_QUERY_TERMS: [&str; 2] = ["coronavirus", "covid-19"];
/// Geotags farther than this from every gazetteer entry are dropped.
pub const TWEET_SNAP_KM: f64 = 100.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("news document {0:?} has an empty body")]
    EmptyNewsBody(String),
    #[error("keyword count must be positive")]
    ZeroKeywords,
    #[error("query term list is empty")]
    EmptyQuery,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceType {
    News,
    Tweet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source_type: SourceType,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub published_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geotag: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.source_type == SourceType::News && self.body.trim().is_empty() {
            return Err(CorpusError::EmptyNewsBody(self.id.clone()));
        }
        Ok(())
    }

    pub fn text(&self) -> String {
        if self.title.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n{}", self.title, self.body)
        }
    }
}

/// Reads JSON Lines documents, validating each.
pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Lowercased word tokens. Hyphenated compounds stay whole; tokens shorter
/// than two characters and stopwords are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|t| t.trim_matches('-'))
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordScore {
    pub term: String,
    pub tf_idf: f64,
}

/// Corpus-wide document frequencies.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    docs: usize,
    df: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn from_token_lists<'a, I>(lists: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec<String>>,
    {
        let mut stats = CorpusStats::default();
        for tokens in lists {
            stats.docs += 1;
            let distinct: HashSet<&String> = tokens.iter().collect();
            for t in distinct {
                *stats.df.entry(t.clone()).or_default() += 1;
            }
        }
        stats
    }

    pub fn documents(&self) -> usize {
        self.docs
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency, `ln((N+1)/(df+1)) + 1`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs as f64;
        let df = self.document_frequency(term) as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    /// Scores one document's tokens, best first, ties by term.
    pub fn score(&self, tokens: &[String]) -> Vec<KeywordScore> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let len = tokens.len() as f64;
        let mut scores: Vec<KeywordScore> = counts
            .into_iter()
            .map(|(term, c)| KeywordScore {
                term: term.to_string(),
                tf_idf: c as f64 / len * self.idf(term),
            })
            .collect();
        scores.sort_by(|a, b| b.tf_idf.total_cmp(&a.tf_idf).then_with(|| a.term.cmp(&b.term)));
        scores
    }
}

pub fn compute_tf_idf(corpus: &[Document]) -> Vec<Vec<KeywordScore>> {
    let tokens: Vec<Vec<String>> = corpus.iter().map(|d| tokenize(&d.text())).collect();
    let stats = CorpusStats::from_token_lists(&tokens);
    tokens.iter().map(|t| stats.score(t)).collect()
}

pub fn extract_keywords(scores: &[KeywordScore], k: usize) -> Result<Vec<String>, CorpusError> {
    if k == 0 {
        return Err(CorpusError::ZeroKeywords);
    }
    Ok(scores.iter().take(k).map(|s| s.term.clone()).collect())
}

/// Exact (case-insensitive) token match of any query term against the
/// document's keywords.
pub fn keyword_filter<S: AsRef<str>, Q: AsRef<str>>(
    keywords: &[S],
    query_terms: &[Q],
) -> Result<bool, CorpusError> {
    if query_terms.is_empty() {
        return Err(CorpusError::EmptyQuery);
    }
    Ok(query_terms.iter().any(|q| {
        keywords
            .iter()
            .any(|k| k.as_ref().to_lowercase() == q.as_ref().to_lowercase())
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GeocodedKeyword {
    pub keyword: String,
    pub location: LocationId,
    pub timestamp: DateTime<Utc>,
    pub source_type: SourceType,
    /// Id of the originating document.
    pub document: String,
}

/// Every keyword paired with every toponym, keyword-major.
pub fn geocode_and_cross(
    doc: &Document,
    keywords: &[String],
    toponyms: &[LocationId],
) -> Vec<GeocodedKeyword> {
    keywords
        .iter()
        .flat_map(|k| {
            toponyms.iter().map(move |&loc| GeocodedKeyword {
                keyword: k.clone(),
                location: loc,
                timestamp: doc.published_at,
                source_type: doc.source_type,
                document: doc.id.clone(),
            })
        })
        .collect()
}

/// Substring match of each query term against the tweet text; the tweet is
/// placed at the gazetteer entry nearest its geotag.
pub fn ingest_tweet<Q: AsRef<str>>(
    doc: &Document,
    query_terms: &[Q],
    g: &Gazetteer,
) -> Vec<GeocodedKeyword> {
    let Some(tag) = doc.geotag else {
        return Vec::new();
    };
    let text = doc.text().to_lowercase();
    let matched: Vec<String> = query_terms
        .iter()
        .map(|q| q.as_ref().to_lowercase())
        .filter(|q| !q.is_empty() && text.contains(q.as_str()))
        .collect();
    if matched.is_empty() {
        return Vec::new();
    }
    match g.nearest(tag, TWEET_SNAP_KM) {
        Some((loc, _)) => geocode_and_cross(doc, &matched, &[loc]),
        None => Vec::new(),
    }
}

/// Resolved toponyms of a text, deduplicated in order of first mention.
pub fn document_toponyms(text: &str, g: &Gazetteer) -> Vec<LocationId> {
    let mut seen = HashSet::new();
    g.recognize_toponyms(text)
        .into_iter()
        .filter_map(|m| g.resolve_toponym(&m.name).ok())
        .filter(|id| seen.insert(*id))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub keywords_per_doc: usize,
    /// Terms used for tweet matching.
    pub query_terms: Vec<String>,
    /// When set, news documents whose keywords miss every term are skipped.
    pub news_filter: Option<Vec<String>>,
    /// Worker threads for the per-document pass; 0 uses the global pool.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            keywords_per_doc: DEFAULT_KEYWORDS_PER_DOC,
            query_terms: DEFAULT_QUERY_TERMS.iter().map(|s| s.to_string()).collect(),
            news_filter: None,
            workers: 0,
        }
    }
}

/// Two passes: document frequencies over the news corpus, then an
/// independent per-document pass. Output follows input document order.
pub fn run_pipeline(
    docs: &[Document],
    g: &Gazetteer,
    config: &PipelineConfig,
) -> Result<Vec<GeocodedKeyword>, CorpusError> {
    if config.keywords_per_doc == 0 {
        return Err(CorpusError::ZeroKeywords);
    }
    if let Some(f) = &config.news_filter {
        if f.is_empty() {
            return Err(CorpusError::EmptyQuery);
        }
    }
    let work = || -> Result<Vec<GeocodedKeyword>, CorpusError> {
        let tokens: Vec<Option<Vec<String>>> = docs
            .par_iter()
            .map(|d| (d.source_type == SourceType::News).then(|| tokenize(&d.text())))
            .collect();
        let stats = CorpusStats::from_token_lists(tokens.iter().flatten());

        let per_doc: Vec<Result<Vec<GeocodedKeyword>, CorpusError>> = docs
            .par_iter()
            .zip(tokens.par_iter())
            .map(|(doc, toks)| match (doc.source_type, toks) {
                (SourceType::News, Some(toks)) => {
                    let keywords = extract_keywords(&stats.score(toks), config.keywords_per_doc)?;
                    if let Some(filter) = &config.news_filter {
                        if !keyword_filter(&keywords, filter)? {
                            return Ok(Vec::new());
                        }
                    }
                    let toponyms = document_toponyms(&doc.text(), g);
                    Ok(geocode_and_cross(doc, &keywords, &toponyms))
                }
                _ => Ok(ingest_tweet(doc, &config.query_terms, g)),
            })
            .collect();
        let mut out = Vec::new();
        for r in per_doc {
            out.extend(r?);
        }
        Ok(out)
    };

    if config.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CorpusError::Pool(e.to_string()))?
            .install(work)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn news(id: &str, body: &str) -> Document {
        Document {
            id: id.into(),
            source_type: SourceType::News,
            title: String::new(),
            body: body.into(),
            published_at: Utc.with_ymd_and_hms(2020, 3, 1, 12, 0, 0).unwrap(),
            geotag: None,
            url: None,
        }
    }

    fn tweet(body: &str, tag: Option<(f64, f64)>) -> Document {
        Document {
            source_type: SourceType::Tweet,
            geotag: tag.map(|(la, lo)| GeoPoint::new(la, lo).unwrap()),
            ..news("t1", body)
        }
    }

    fn cities() -> Gazetteer {
        let rows = [
            (1, "United States", "country", None, 38.0, -97.0),
            (2, "Seattle", "city", Some(1), 47.61, -122.33),
            (3, "Portland", "city", Some(1), 45.52, -122.68),
            (4, "Chicago", "city", Some(1), 41.88, -87.63),
        ];
        let text: Vec<String> = rows
            .iter()
            .map(|(id, name, lvl, parent, lat, lon)| {
                serde_json::json!({"id": id, "name": name, "lat": lat, "lon": lon,
                    "admin_level": lvl, "parent": parent, "population": 1000})
                .to_string()
            })
            .collect();
        Gazetteer::load(text.join("\n").as_bytes()).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("COVID-19 spreads"), ["covid-19", "spreads"]);
        assert!(tokenize("the a of").is_empty());
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("x -- -y- ok"), ["ok"]);
    }

    #[test]
    fn stopword_list_is_complete() {
        assert_eq!(stopwords().len(), 179);
    }

    #[test]
    fn tf_idf_single_document() {
        // 4 tokens, "virus" twice: tf 0.5, idf ln(2/2)+1 = 1
        let scores = compute_tf_idf(&[news("a", "virus spreads virus quickly")]);
        assert_eq!(scores[0][0], KeywordScore { term: "virus".into(), tf_idf: 0.5 });
        assert_eq!(scores[0].len(), 3);
    }

    #[test]
    fn idf_floor_when_term_everywhere() {
        let corpus: Vec<Document> = (0..5).map(|i| news(&i.to_string(), "outbreak news")).collect();
        let tokens: Vec<Vec<String>> = corpus.iter().map(|d| tokenize(&d.body)).collect();
        let stats = CorpusStats::from_token_lists(&tokens);
        assert_eq!(stats.idf("outbreak"), 1.0);
    }

    #[test]
    fn empty_document_scores_nothing() {
        let scores = compute_tf_idf(&[news("a", "the of and"), news("b", "hospital")]);
        assert!(scores[0].is_empty());
    }

    #[test]
    fn extract_examples() {
        let scores: Vec<KeywordScore> = (0..12)
            .map(|i| KeywordScore { term: format!("t{i:02}"), tf_idf: 12.0 - i as f64 })
            .collect();
        assert_eq!(extract_keywords(&scores, 10).unwrap().len(), 10);
        assert_eq!(extract_keywords(&scores[..3], 10).unwrap().len(), 3);
        assert!(matches!(extract_keywords(&scores, 0), Err(CorpusError::ZeroKeywords)));
        let tied = compute_tf_idf(&[news("a", "beta alpha")]);
        assert_eq!(extract_keywords(&tied[0], 1).unwrap(), ["alpha"]);
    }

    #[test]
    fn filter_examples() {
        assert!(keyword_filter(&["covid-19", "lockdown"], &["coronavirus", "covid-19"]).unwrap());
        assert!(!keyword_filter(&["economy"], &["coronavirus"]).unwrap());
        assert!(!keyword_filter(&["coronaviruses"], &["coronavirus"]).unwrap());
        assert!(keyword_filter(&["Coronavirus"], &["coronavirus"]).unwrap());
        let none: [&str; 0] = [];
        assert!(matches!(keyword_filter(&["x"], &none), Err(CorpusError::EmptyQuery)));
    }

    #[test]
    fn cross_product_examples() {
        let d = news("a", "body");
        let kw = vec!["a1".to_string(), "b2".to_string()];
        let locs = [LocationId(1), LocationId(2), LocationId(3)];
        let recs = geocode_and_cross(&d, &kw, &locs);
        assert_eq!(recs.len(), 6);
        assert_eq!((recs[0].keyword.as_str(), recs[0].location), ("a1", LocationId(1)));
        assert_eq!((recs[3].keyword.as_str(), recs[3].location), ("b2", LocationId(1)));
        assert!(geocode_and_cross(&d, &kw, &[]).is_empty());
        let one = geocode_and_cross(&d, &kw[..1], &locs[..1]);
        assert_eq!(one[0].timestamp, d.published_at);
    }

    #[test]
    fn tweet_lands_on_nearest_entry() {
        let g = cities();
        let tag = (47.45, -122.30);
        let recs = ingest_tweet(&tweet("coronavirus in Seattle", Some(tag)), &["coronavirus"], &g);
        // brute force over the fixture
        let p = GeoPoint::new(tag.0, tag.1).unwrap();
        let nearest = g
            .entries()
            .iter()
            .min_by(|a, b| {
                crate::geo::haversine_distance(p, a.point)
                    .total_cmp(&crate::geo::haversine_distance(p, b.point))
            })
            .unwrap()
            .id;
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].location, nearest);
        assert!(ingest_tweet(&tweet("coronavirus in Seattle", None), &["coronavirus"], &g).is_empty());
        assert!(ingest_tweet(&tweet("sunny in Seattle", Some(tag)), &["coronavirus"], &g).is_empty());
        // far from every entry
        assert!(ingest_tweet(&tweet("coronavirus", Some((0.0, 0.0))), &["coronavirus"], &g).is_empty());
    }

    #[test]
    fn tweet_substring_versus_news_exact_token() {
        let g = cities();
        let t = tweet("stay home #coronaviruspandemic", Some((41.9, -87.6)));
        assert_eq!(ingest_tweet(&t, &["coronavirus"], &g).len(), 1);
        let n = news("n", "stay home #coronaviruspandemic");
        let kws = extract_keywords(&compute_tf_idf(&[n])[0], 10).unwrap();
        assert!(!keyword_filter(&kws, &["coronavirus"]).unwrap());
    }

    #[test]
    fn pipeline_crosses_keywords_with_toponyms() {
        let g = cities();
        let docs = vec![
            news("a", "Coronavirus cases rise in Seattle and Portland hospitals"),
            news("b", "Chicago economy slows"),
            tweet("#coronavirus here", Some((45.5, -122.7))),
        ];
        let recs = run_pipeline(&docs, &g, &PipelineConfig::default()).unwrap();
        let a: Vec<_> = recs.iter().filter(|r| r.document == "a").collect();
        // keywords: coronavirus cases rise seattle portland hospitals = 6, toponyms 2
        assert_eq!(a.len(), 12);
        assert_eq!(recs.iter().filter(|r| r.document == "t1").count(), 1);
        let filtered = PipelineConfig {
            news_filter: Some(vec!["coronavirus".into()]),
            ..PipelineConfig::default()
        };
        let recs = run_pipeline(&docs, &g, &filtered).unwrap();
        assert!(recs.iter().all(|r| r.document != "b"));
    }

    #[test]
    fn news_without_body_is_rejected() {
        let line = r#"{"id":"x","source_type":"news","title":"t","body":" ","published_at":"2020-03-01T00:00:00Z"}"#;
        assert!(matches!(read_documents(line.as_bytes()), Err(CorpusError::EmptyNewsBody(_))));
        let bad = r#"{"id":"x"}"#;
        assert!(matches!(read_documents(bad.as_bytes()), Err(CorpusError::Parse { line: 1, .. })));
    }

    fn word() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("virus"), Just("mask"), Just("school"), Just("vaccine"), Just("market"),
            Just("hospital"), Just("travel"), Just("covid-19"), Just("border"), Just("test"),
        ]
        .prop_map(String::from)
    }

    proptest! {
        #[test]
        fn cross_cardinality(k in 0usize..6, t in 0usize..6) {
            let kw: Vec<String> = (0..k).map(|i| format!("kw{i}")).collect();
            let locs: Vec<LocationId> = (0..t as u64).map(LocationId).collect();
            prop_assert_eq!(geocode_and_cross(&news("a", "x"), &kw, &locs).len(), k * t);
        }

        #[test]
        fn doubling_a_document_keeps_its_ranking(
            docs in proptest::collection::vec(proptest::collection::vec(word(), 1..15), 1..6),
            which in 0usize..6,
        ) {
            let which = which % docs.len();
            let corpus: Vec<Document> = docs.iter().enumerate()
                .map(|(i, w)| news(&i.to_string(), &w.join(" "))).collect();
            let mut doubled = corpus.clone();
            doubled[which].body = format!("{} {}", corpus[which].body, corpus[which].body);
            let a = extract_keywords(&compute_tf_idf(&corpus)[which], 3).unwrap();
            let b = extract_keywords(&compute_tf_idf(&doubled)[which], 3).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn filter_is_monotone_in_query(
            kws in proptest::collection::vec(word(), 0..5),
            q in proptest::collection::vec(word(), 1..3),
            extra in proptest::collection::vec(word(), 0..3),
        ) {
            if keyword_filter(&kws, &q).unwrap() {
                let wider: Vec<String> = q.iter().chain(&extra).cloned().collect();
                prop_assert!(keyword_filter(&kws, &wider).unwrap());
            }
        }
    }
}
