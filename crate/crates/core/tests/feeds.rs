mod common;

use chrono::{TimeZone, Utc};
use geopub::facet::{FacetIndex, FilterSet};
use geopub::feeds::{to_atom, to_geojson, to_kml, FeedFormat, ATOM_NS, OPENSEARCH_NS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn updated() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2012, 4, 1, 12, 0, 0).unwrap()
}

fn all_formats(index: &FacetIndex, filters: &FilterSet) -> Vec<(FeedFormat, Vec<u8>)> {
    let manifest = common::manifest();
    let page = index.query_all(filters).unwrap();
    let self_url = format!("{}/feeds/atom?{}", common::SERVICE_URL, filters.to_query_string());
    vec![
        (FeedFormat::GeoJson, to_geojson(&page, &manifest, index).unwrap().body),
        (FeedFormat::Kml, to_kml(&page, &manifest, index).unwrap().body),
        (FeedFormat::Atom, to_atom(&page, &manifest, index, &self_url, &updated()).unwrap().body),
    ]
}

#[test]
fn fixture_feeds_agree_with_the_records() {
    let features = common::fixture_features();
    let index = FacetIndex::build(features.clone()).unwrap();
    let manifest = common::manifest();
    for (format, body) in all_formats(&index, &FilterSet::default()) {
        let points = common::feed_points(format, &body);
        assert_eq!(points.len(), common::FIXTURE_COUNT, "{format:?}");
        for (uri, lat, lon) in points {
            let id = uri.rsplit('/').next().unwrap();
            let f = features.iter().find(|f| f.id == id).unwrap();
            assert_eq!(uri, manifest.record_uri(id).unwrap());
            assert_eq!((lat, lon), (f.location.lat(), f.location.lon()), "{format:?} {id}");
        }
    }
}

#[test]
fn feeds_are_deterministic() {
    let index = FacetIndex::build(common::fixture_features()).unwrap();
    let filters = FilterSet::parse_query("affiliation=Mesogeia").unwrap().0;
    assert_eq!(all_formats(&index, &filters), all_formats(&index, &filters));
}

#[test]
fn atom_paging_links() {
    let index = FacetIndex::build(common::fixture_features()).unwrap();
    let filters = FilterSet::parse_query("affiliation=Polis").unwrap().0;
    let total = index.query_all(&filters).unwrap().total;
    assert!(total > 20);
    let self_url = format!("{}/feeds/atom?{}&page=2&per_page=10", common::SERVICE_URL, filters.to_query_string());
    let page = index.query(&filters, 2, 10).unwrap();
    let body = to_atom(&page, &common::manifest(), &index, &self_url, &updated()).unwrap().body;
    let text = String::from_utf8(body).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let link = |rel: &str| {
        doc.descendants()
            .find(|n| n.has_tag_name((ATOM_NS, "link")) && n.attribute("rel") == Some(rel))
            .and_then(|n| n.attribute("href"))
            .map(String::from)
    };
    let next = url::Url::parse(&link("next").unwrap()).unwrap();
    let previous = url::Url::parse(&link("previous").unwrap()).unwrap();
    let page_of = |u: &url::Url| u.query_pairs().find(|(k, _)| k == "page").unwrap().1.into_owned();
    assert_eq!(page_of(&next), "3");
    assert_eq!(page_of(&previous), "1");
    assert!(next.query_pairs().any(|(k, v)| k == "affiliation" && v == "Polis"));
    let total_results = doc
        .descendants()
        .find(|n| n.has_tag_name((OPENSEARCH_NS, "totalResults")))
        .unwrap()
        .text()
        .unwrap();
    assert_eq!(total_results, total.to_string());
    let start = doc.descendants().find(|n| n.has_tag_name((OPENSEARCH_NS, "startIndex"))).unwrap().text().unwrap();
    assert_eq!(start, "11");
    assert_eq!(common::feed_points(FeedFormat::Atom, text.as_bytes()).len(), 10);
}

#[test]
fn last_page_has_no_next() {
    let index = FacetIndex::build(common::fixture_features()).unwrap();
    let page = index.query(&FilterSet::default(), 5, 50).unwrap();
    let self_url = format!("{}/feeds/atom?page=5&per_page=50", common::SERVICE_URL);
    let text = String::from_utf8(to_atom(&page, &common::manifest(), &index, &self_url, &updated()).unwrap().body).unwrap();
    assert!(!text.contains("rel=\"next\""));
    assert!(text.contains("rel=\"previous\""));
    assert_eq!(common::feed_points(FeedFormat::Atom, text.as_bytes()).len(), 231 - 200);
}

#[test]
fn relative_self_url_is_rejected() {
    let index = FacetIndex::build(common::fixture_features()).unwrap();
    let page = index.query(&FilterSet::default(), 1, 5).unwrap();
    assert!(to_atom(&page, &common::manifest(), &index, "/feeds/atom", &updated()).is_err());
}

#[test]
fn markup_in_names_is_escaped() {
    let mut features = common::fixture_features();
    features[0].locus_name = "Selinus <east> & \"shore\"".into();
    let index = FacetIndex::build(features).unwrap();
    for (format, body) in all_formats(&index, &FilterSet::default()) {
        assert_eq!(common::feed_points(format, &body).len(), common::FIXTURE_COUNT);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn formats_carry_the_same_records(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = common::random_corpus(&mut rng, 150, 8);
        let index = FacetIndex::build(features.clone()).unwrap();
        let filters = common::random_filters(&mut rng, 8);
        let manifest = common::manifest();
        let expected: Vec<String> = common::scan(&features, &filters)
            .iter()
            .map(|id| manifest.record_uri(id).unwrap())
            .collect();
        let mut first: Option<Vec<(String, f64, f64)>> = None;
        for (format, body) in all_formats(&index, &filters) {
            let points = common::feed_points(format, &body);
            let uris: Vec<String> = points.iter().map(|p| p.0.clone()).collect();
            prop_assert_eq!(&uris, &expected);
            match &first {
                None => first = Some(points),
                Some(f) => prop_assert_eq!(f, &points),
            }
        }
    }
}
