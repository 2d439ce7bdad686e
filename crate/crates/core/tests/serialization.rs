mod common;

use std::collections::BTreeSet;

use aefi::analysis::NATIVE_ALGORITHMS;

#[test]
fn every_algorithm_round_trips_exactly() {
    let mut families = BTreeSet::new();
    for (i, name) in NATIVE_ALGORITHMS.iter().enumerate() {
        let family = common::round_trip_scores(name, 40 + i as u64)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        families.insert(family);
    }
    let expected: BTreeSet<String> = [
        "boosted", "cart", "easy", "forest", "knn", "logistic", "svc",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(families, expected);
}

#[test]
fn decimal_rendering_survives_reparse() {
    // the shortest round-trip rendering is what the canonical form writes
    for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 123456.789e10, -0.0] {
        let text = aefi::canon::to_canonical_json(&x).unwrap();
        let back: f64 = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_bits(), x.to_bits(), "{text}");
    }
}
