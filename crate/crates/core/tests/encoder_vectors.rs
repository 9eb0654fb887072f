//! Reference encoder outputs pinned against values computed outside Rust
//! (Python `xxhash` plus a regex tokenizer), so a change in hashing, token
//! boundaries or normalization shows up here.

use claimcheck::encode::reference_encode;
use serde::Deserialize;
use std::collections::BTreeMap;

#[derive(Deserialize)]
struct Pinned {
    text: String,
    dimension: usize,
    seed: u64,
    first8: Vec<f64>,
    nonzero: BTreeMap<String, f64>,
}

#[test]
fn reference_encoder_matches_pinned_vectors() {
    let pinned: Vec<Pinned> = serde_json::from_str(include_str!("data/encoder_vectors.json")).unwrap();
    assert!(pinned.len() >= 6);
    for p in &pinned {
        let e = reference_encode(&p.text, p.dimension, p.seed).unwrap();
        let v = e.as_slice();
        for (i, want) in p.first8.iter().enumerate() {
            assert!((v[i] - want).abs() <= 1e-12, "{:?} component {i}: {} vs {want}", p.text, v[i]);
        }
        for (i, x) in v.iter().enumerate() {
            let want = p.nonzero.get(&i.to_string()).copied().unwrap_or(0.0);
            assert!((x - want).abs() <= 1e-12, "{:?} component {i}: {x} vs {want}", p.text);
        }
    }
}
