mod common;

use std::fs;

#[test]
#[ignore = "rewrites the committed fixture files"]
fn regenerate_fixtures() {
    fs::create_dir_all(common::fixtures_dir()).unwrap();
    for (name, content) in common::fixture_files() {
        fs::write(common::fixture_path(name), content).unwrap();
    }
}

#[test]
fn committed_fixtures_match_generator() {
    for (name, content) in common::fixture_files() {
        let on_disk = fs::read_to_string(common::fixture_path(name)).unwrap();
        assert_eq!(on_disk, content, "{name} is stale; run the ignored regenerate_fixtures test");
    }
}

#[test]
fn fixture_shape() {
    let features = common::fixture_features();
    assert_eq!(features.len(), common::FIXTURE_COUNT);
    let loci: std::collections::BTreeSet<_> = features.iter().map(|f| f.locus_id.as_str()).collect();
    assert_eq!(loci.len(), common::LOCUS_COUNT);
    let barrier = common::barrier();
    let ring: Vec<(f64, f64)> = barrier.ring().iter().map(|p| (p.lon(), p.lat())).collect();
    for f in &features {
        f.validate(true).unwrap();
        assert!(inside(&ring, f.location.lon(), f.location.lat()), "{} outside the barrier", f.id);
    }
}

fn inside(ring: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut c = false;
    for w in ring.windows(2) {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        if (y1 > y) != (y2 > y) && x < x1 + (y - y1) * (x2 - x1) / (y2 - y1) {
            c = !c;
        }
    }
    c
}
