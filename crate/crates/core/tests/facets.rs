mod common;

use geopub::facet::{BBox, FacetIndex, FilterSet, QueryError, MAX_PER_PAGE};
use geopub::{SiteContext, TombType};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture_index() -> FacetIndex {
    FacetIndex::build(common::fixture_features()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn index_agrees_with_linear_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = common::random_corpus(&mut rng, 300, 12);
        let index = FacetIndex::build(corpus.clone()).unwrap();
        let filters = common::random_filters(&mut rng, 12);
        let page = index.query_all(&filters).unwrap();
        let expected = common::scan(&corpus, &filters);
        prop_assert_eq!(&page.matches, &expected);
        prop_assert_eq!(page.total, expected.len());
        prop_assert_eq!(page.facet_counts, common::scan_counts(&corpus, &expected));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pages_partition_the_match_list(seed in any::<u64>(), per_page in 1usize..=40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = common::random_corpus(&mut rng, 150, 6);
        let index = FacetIndex::build(corpus).unwrap();
        let filters = common::random_filters(&mut rng, 6);
        let all = index.query_all(&filters).unwrap();
        let mut joined = Vec::new();
        let mut page = 1;
        loop {
            let p = index.query(&filters, page, per_page).unwrap();
            prop_assert!(p.matches.len() <= per_page);
            prop_assert_eq!(p.total, all.total);
            prop_assert_eq!(&p.facet_counts, &all.facet_counts);
            joined.extend(p.matches.iter().cloned());
            if !p.has_next() {
                break;
            }
            page += 1;
        }
        prop_assert_eq!(joined, all.matches);
    }

    #[test]
    fn query_string_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let filters = common::random_filters(&mut rng, 20);
        let (parsed, _) = FilterSet::parse_query(&filters.to_query_string()).unwrap();
        prop_assert_eq!(parsed, filters);
    }
}

#[test]
fn unconstrained_facets_sum_to_total() {
    let index = fixture_index();
    let page = index.query_all(&FilterSet::default()).unwrap();
    assert_eq!(page.total, common::FIXTURE_COUNT);
    for (facet, counts) in &page.facet_counts {
        assert_eq!(counts.values().sum::<usize>(), common::FIXTURE_COUNT, "{facet}");
    }
}

#[test]
fn rock_cut_at_isolated_necropoleis() {
    let features = common::fixture_features();
    let index = FacetIndex::build(features.clone()).unwrap();
    let (filters, _) = FilterSet::parse_query("tomb_type=RockCut&context=IsolatedNecropolis").unwrap();
    let expected = features
        .iter()
        .filter(|f| f.tomb_type == TombType::RockCut && f.context == SiteContext::IsolatedNecropolis)
        .count();
    assert!(expected > 0);
    assert_eq!(index.query(&filters, 1, 50).unwrap().total, expected);
}

#[test]
fn bbox_around_one_locus() {
    let features = common::fixture_features();
    let index = FacetIndex::build(features.clone()).unwrap();
    let selinus: Vec<_> = features.iter().filter(|f| f.locus_name == "Selinus").collect();
    let fold = |g: fn(&geopub::GeoPoint) -> f64, min: bool| {
        selinus.iter().map(|f| g(&f.location)).fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| {
            if min { a.min(b) } else { a.max(b) }
        })
    };
    let bbox = BBox {
        min_lon: fold(geopub::GeoPoint::lon, true),
        min_lat: fold(geopub::GeoPoint::lat, true),
        max_lon: fold(geopub::GeoPoint::lon, false),
        max_lat: fold(geopub::GeoPoint::lat, false),
    };
    let filters = FilterSet { bbox: Some(bbox), ..Default::default() };
    let page = index.query_all(&filters).unwrap();
    assert_eq!(page.matches, common::scan(&features, &filters));
    assert!(page.matches.iter().all(|id| id.starts_with("RC0101-")));
    assert_eq!(page.total, selinus.len());
}

#[test]
fn empty_index_and_errors() {
    let empty = FacetIndex::build(vec![]).unwrap();
    assert_eq!(empty.query(&FilterSet::default(), 1, 10).unwrap().total, 0);
    let mut dup = common::fixture_features();
    dup.push(dup[0].clone());
    assert!(matches!(FacetIndex::build(dup), Err(QueryError::DuplicateId(id)) if id == "RC0101-T001"));
    let index = fixture_index();
    assert!(index.query(&FilterSet::default(), 0, 10).is_err());
    assert!(index.query(&FilterSet::default(), 1, MAX_PER_PAGE + 1).is_err());
    let inverted = FilterSet { bbox: Some(BBox { min_lon: 33.0, min_lat: 36.0, max_lon: 32.0, max_lat: 37.0 }), ..Default::default() };
    assert!(matches!(index.query(&inverted, 1, 10), Err(QueryError::InvalidBbox(_))));
}

#[test]
fn bbox_edges_are_inclusive() {
    let features = common::fixture_features();
    let f = &features[5];
    let (lat, lon) = (f.location.lat(), f.location.lon());
    let index = FacetIndex::build(features.clone()).unwrap();
    let filters = FilterSet { bbox: Some(BBox { min_lon: lon, min_lat: lat, max_lon: lon, max_lat: lat }), ..Default::default() };
    assert_eq!(index.query_all(&filters).unwrap().matches, vec![f.id.clone()]);
}
