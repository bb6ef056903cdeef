//! In-memory faceted index over survey features.
//!
//! Filters combine conjunctively across facets and disjunctively within one
//! facet. Matches are always ordered by ascending id, and facet counts are
//! computed over the whole match set (drill-down counts), not just the page.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{classify, CulturalAffiliation, SiteContext, SurveyFeature, TombType};

pub const MAX_PER_PAGE: usize = 500;
pub const DEFAULT_PER_PAGE: usize = 50;

pub const FACETS: [&str; 6] = [
    "tomb_type",
    "context",
    "affiliation",
    "has_inscription",
    "has_photos",
    "locus_id",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("duplicate feature id {0}")]
    DuplicateId(String),
    #[error("invalid bbox: {0}")]
    InvalidBbox(String),
    #[error("page must be >= 1")]
    InvalidPage,
    #[error("per_page must be in 1..={MAX_PER_PAGE}")]
    InvalidPerPage,
}

/// Closed longitude/latitude box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Result<Self, QueryError> {
        let b = BBox { min_lon, min_lat, max_lon, max_lat };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let all = [self.min_lon, self.min_lat, self.max_lon, self.max_lat];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(QueryError::InvalidBbox("non-finite coordinate".into()));
        }
        if self.min_lon > self.max_lon || self.min_lat > self.max_lat {
            return Err(QueryError::InvalidBbox("min exceeds max".into()));
        }
        Ok(())
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lon..=self.max_lon).contains(&lon) && (self.min_lat..=self.max_lat).contains(&lat)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSet {
    pub tomb_type: Option<BTreeSet<TombType>>,
    pub context: Option<BTreeSet<SiteContext>>,
    pub affiliation: Option<BTreeSet<CulturalAffiliation>>,
    pub has_inscription: Option<bool>,
    pub has_photos: Option<bool>,
    pub locus_id: Option<BTreeSet<String>>,
    pub bbox: Option<BBox>,
    /// Case-insensitive substring of `locus_name`.
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Paging {
    pub page: usize,
    pub per_page: usize,
}

impl Default for Paging {
    fn default() -> Self {
        Paging { page: 1, per_page: DEFAULT_PER_PAGE }
    }
}

/// A query-string parameter that could not be parsed.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("parameter {param}: {reason}")]
pub struct ParamError {
    pub param: String,
    pub reason: String,
}

fn param_err(param: &str, reason: impl Into<String>) -> ParamError {
    ParamError { param: param.to_string(), reason: reason.into() }
}

fn parse_list<T: std::str::FromStr + Ord>(param: &str, value: &str) -> Result<BTreeSet<T>, ParamError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|v| {
            let v = v.trim();
            if v.is_empty() {
                return Err(param_err(param, "empty list element"));
            }
            v.parse::<T>().map_err(|e| param_err(param, e.to_string()))
        })
        .collect()
}

fn parse_flag(param: &str, value: &str) -> Result<bool, ParamError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(param_err(param, "expected true or false")),
    }
}

fn parse_count(param: &str, value: &str) -> Result<usize, ParamError> {
    value
        .parse::<usize>()
        .map_err(|_| param_err(param, "expected a non-negative integer"))
}

impl FilterSet {
    pub fn is_empty(&self) -> bool {
        *self == FilterSet::default()
    }

    /// Parses the query-string grammar shared by the HTTP service and
    /// narrative map directives: comma-separated value lists per facet,
    /// `bbox=min_lon,min_lat,max_lon,max_lat`, `page`, `per_page`.
    pub fn parse_query(query: &str) -> Result<(FilterSet, Paging), ParamError> {
        let mut f = FilterSet::default();
        let mut paging = Paging::default();
        for (key, value) in url::form_urlencoded::parse(query.as_bytes()) {
            let key = key.as_ref();
            if value.is_empty() {
                return Err(param_err(key, "empty value"));
            }
            match key {
                "tomb_type" => f.tomb_type = Some(parse_list(key, &value)?),
                "context" => f.context = Some(parse_list(key, &value)?),
                "affiliation" => f.affiliation = Some(parse_list(key, &value)?),
                "locus_id" => f.locus_id = Some(parse_list(key, &value)?),
                "has_inscription" => f.has_inscription = Some(parse_flag(key, &value)?),
                "has_photos" => f.has_photos = Some(parse_flag(key, &value)?),
                "text" => f.text = Some(value.into_owned()),
                "bbox" => {
                    let parts: Vec<f64> = value
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| param_err(key, "expected four numbers"))?;
                    let [a, b, c, d] = parts[..] else {
                        return Err(param_err(key, "expected four numbers"));
                    };
                    let bbox = BBox::new(a, b, c, d).map_err(|e| param_err(key, e.to_string()))?;
                    f.bbox = Some(bbox);
                }
                "page" => {
                    paging.page = parse_count(key, &value)?;
                    if paging.page == 0 {
                        return Err(param_err(key, "must be >= 1"));
                    }
                }
                "per_page" => {
                    paging.per_page = parse_count(key, &value)?;
                    if !(1..=MAX_PER_PAGE).contains(&paging.per_page) {
                        return Err(param_err(key, format!("must be in 1..={MAX_PER_PAGE}")));
                    }
                }
                other => return Err(param_err(other, "unknown parameter")),
            }
        }
        Ok((f, paging))
    }

    /// Canonical query string (facet order fixed, values sorted). Parsing it
    /// back yields an equal `FilterSet`.
    pub fn to_query_string(&self) -> String {
        fn list<T: ToString>(out: &mut Vec<String>, key: &str, set: &Option<BTreeSet<T>>) {
            if let Some(set) = set {
                let joined: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                out.push(format!("{key}={}", joined.join(",")));
            }
        }
        let mut parts = Vec::new();
        list(&mut parts, "tomb_type", &self.tomb_type);
        list(&mut parts, "context", &self.context);
        list(&mut parts, "affiliation", &self.affiliation);
        if let Some(v) = self.has_inscription {
            parts.push(format!("has_inscription={v}"));
        }
        if let Some(v) = self.has_photos {
            parts.push(format!("has_photos={v}"));
        }
        list(&mut parts, "locus_id", &self.locus_id);
        if let Some(b) = &self.bbox {
            parts.push(format!("bbox={},{},{},{}", b.min_lon, b.min_lat, b.max_lon, b.max_lat));
        }
        if let Some(t) = &self.text {
            let mut s = String::from("text=");
            s.extend(url::form_urlencoded::byte_serialize(t.as_bytes()));
            parts.push(s);
        }
        parts.join("&")
    }

    /// Direct predicate, used for scans over candidate sets.
    pub fn matches(&self, feature: &SurveyFeature, affiliation: CulturalAffiliation) -> bool {
        fn member<T: Ord>(set: &Option<BTreeSet<T>>, v: &T) -> bool {
            set.as_ref().is_none_or(|s| s.contains(v))
        }
        member(&self.tomb_type, &feature.tomb_type)
            && member(&self.context, &feature.context)
            && member(&self.affiliation, &affiliation)
            && self.has_inscription.is_none_or(|v| v == feature.has_inscription)
            && self.has_photos.is_none_or(|v| v == feature.has_photos())
            && member(&self.locus_id, &feature.locus_id)
            && self
                .bbox
                .is_none_or(|b| b.contains(feature.location.lat(), feature.location.lon()))
            && self.text.as_ref().is_none_or(|t| {
                feature.locus_name.to_lowercase().contains(&t.to_lowercase())
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPage {
    pub matches: Vec<String>,
    pub total: usize,
    pub page: usize,
    pub per_page: usize,
    pub facet_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

impl ResultPage {
    pub fn page_count(&self) -> usize {
        self.total.div_ceil(self.per_page).max(1)
    }

    pub fn has_next(&self) -> bool {
        self.page * self.per_page < self.total
    }

    pub fn has_previous(&self) -> bool {
        self.page > 1 && self.page - 1 <= self.page_count()
    }
}

#[derive(Debug, Clone)]
pub struct IndexedFeature {
    pub feature: SurveyFeature,
    pub affiliation: CulturalAffiliation,
}

/// Fixed-width bit set over document positions.
#[derive(Clone)]
struct DocSet(Vec<u64>);

impl DocSet {
    fn empty(n: usize) -> Self {
        DocSet(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut s = DocSet(vec![u64::MAX; n.div_ceil(64)]);
        if !n.is_multiple_of(64) {
            if let Some(last) = s.0.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        s
    }

    fn insert(&mut self, i: u32) {
        self.0[i as usize / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &DocSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }

    fn intersect_with(&mut self, other: &DocSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a &= b);
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros();
                bits &= bits - 1;
                Some(w as u32 * 64 + t)
            })
        })
    }
}

/// Immutable faceted index. Rebuild to change the corpus.
pub struct FacetIndex {
    docs: Vec<IndexedFeature>,
    by_id: HashMap<String, u32>,
    /// facet name -> value -> doc positions
    postings: BTreeMap<&'static str, BTreeMap<String, DocSet>>,
}

fn facet_values(doc: &IndexedFeature) -> [(&'static str, String); 6] {
    let f = &doc.feature;
    [
        ("tomb_type", f.tomb_type.to_string()),
        ("context", f.context.to_string()),
        ("affiliation", doc.affiliation.to_string()),
        ("has_inscription", f.has_inscription.to_string()),
        ("has_photos", f.has_photos().to_string()),
        ("locus_id", f.locus_id.clone()),
    ]
}

impl FacetIndex {
    pub fn build(features: Vec<SurveyFeature>) -> Result<Self, QueryError> {
        let mut features = features;
        features.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = features.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(QueryError::DuplicateId(w[0].id.clone()));
        }
        let n = features.len();
        let docs: Vec<IndexedFeature> = features
            .into_iter()
            .map(|feature| IndexedFeature { affiliation: classify(&feature), feature })
            .collect();

        let mut postings: BTreeMap<&'static str, BTreeMap<String, DocSet>> = BTreeMap::new();
        let enum_values: [(&str, Vec<String>); 5] = [
            ("tomb_type", TombType::ALL.iter().map(|v| v.to_string()).collect()),
            ("context", SiteContext::ALL.iter().map(|v| v.to_string()).collect()),
            ("affiliation", CulturalAffiliation::ALL.iter().map(|v| v.to_string()).collect()),
            ("has_inscription", vec!["false".into(), "true".into()]),
            ("has_photos", vec!["false".into(), "true".into()]),
        ];
        for (facet, values) in enum_values {
            let slot = postings.entry(facet_name(facet)).or_default();
            for v in values {
                slot.insert(v, DocSet::empty(n));
            }
        }
        postings.entry("locus_id").or_default();
        for (pos, doc) in docs.iter().enumerate() {
            for (facet, value) in facet_values(doc) {
                postings
                    .get_mut(facet)
                    .expect("facet registered above")
                    .entry(value)
                    .or_insert_with(|| DocSet::empty(n))
                    .insert(pos as u32);
            }
        }
        let by_id = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.feature.id.clone(), i as u32))
            .collect();
        Ok(FacetIndex { docs, by_id, postings })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexedFeature> {
        self.by_id.get(id).map(|&i| &self.docs[i as usize])
    }

    /// All records in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &IndexedFeature> {
        self.docs.iter()
    }

    fn constrain<T: ToString>(&self, acc: &mut DocSet, facet: &str, wanted: Option<Vec<T>>) {
        let Some(wanted) = wanted else { return };
        let mut union = DocSet::empty(self.docs.len());
        let slot = &self.postings[facet];
        for v in wanted {
            if let Some(set) = slot.get(&v.to_string()) {
                union.union_with(set);
            }
        }
        acc.intersect_with(&union);
    }

    fn match_positions(&self, filters: &FilterSet) -> Result<Vec<u32>, QueryError> {
        if let Some(b) = &filters.bbox {
            b.validate()?;
        }
        let mut acc = DocSet::full(self.docs.len());
        self.constrain(&mut acc, "tomb_type", set_vec(&filters.tomb_type));
        self.constrain(&mut acc, "context", set_vec(&filters.context));
        self.constrain(&mut acc, "affiliation", set_vec(&filters.affiliation));
        self.constrain(&mut acc, "has_inscription", filters.has_inscription.map(|v| vec![v]));
        self.constrain(&mut acc, "has_photos", filters.has_photos.map(|v| vec![v]));
        self.constrain(&mut acc, "locus_id", set_vec(&filters.locus_id));

        let needle = filters.text.as_ref().map(|t| t.to_lowercase());
        Ok(acc
            .iter()
            .filter(|&i| {
                let f = &self.docs[i as usize].feature;
                filters
                    .bbox
                    .is_none_or(|b| b.contains(f.location.lat(), f.location.lon()))
                    && needle
                        .as_ref()
                        .is_none_or(|t| f.locus_name.to_lowercase().contains(t.as_str()))
            })
            .collect())
    }

    fn facet_counts(&self, positions: &[u32]) -> BTreeMap<String, BTreeMap<String, usize>> {
        let mut counts: BTreeMap<String, BTreeMap<String, usize>> = self
            .postings
            .iter()
            .map(|(facet, values)| {
                (facet.to_string(), values.keys().map(|v| (v.clone(), 0)).collect())
            })
            .collect();
        for &i in positions {
            for (facet, value) in facet_values(&self.docs[i as usize]) {
                *counts.get_mut(facet).unwrap().get_mut(&value).unwrap() += 1;
            }
        }
        counts
    }

    pub fn query(
        &self,
        filters: &FilterSet,
        page: usize,
        per_page: usize,
    ) -> Result<ResultPage, QueryError> {
        if page == 0 {
            return Err(QueryError::InvalidPage);
        }
        if !(1..=MAX_PER_PAGE).contains(&per_page) {
            return Err(QueryError::InvalidPerPage);
        }
        let positions = self.match_positions(filters)?;
        Ok(self.page_of(&positions, page, per_page))
    }

    /// The complete, unpaginated match set as a single page.
    pub fn query_all(&self, filters: &FilterSet) -> Result<ResultPage, QueryError> {
        let positions = self.match_positions(filters)?;
        let per_page = positions.len().max(1);
        Ok(self.page_of(&positions, 1, per_page))
    }

    fn page_of(&self, positions: &[u32], page: usize, per_page: usize) -> ResultPage {
        let start = (page - 1).saturating_mul(per_page).min(positions.len());
        let end = start.saturating_add(per_page).min(positions.len());
        ResultPage {
            matches: positions[start..end]
                .iter()
                .map(|&i| self.docs[i as usize].feature.id.clone())
                .collect(),
            total: positions.len(),
            page,
            per_page,
            facet_counts: self.facet_counts(positions),
        }
    }
}

fn set_vec<T: Clone>(s: &Option<BTreeSet<T>>) -> Option<Vec<T>> {
    s.as_ref().map(|s| s.iter().cloned().collect())
}

fn facet_name(name: &str) -> &'static str {
    FACETS.iter().find(|f| **f == name).copied().expect("known facet")
}

impl std::fmt::Debug for FacetIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FacetIndex").field("docs", &self.docs.len()).finish()
    }
}
