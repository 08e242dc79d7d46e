//! Strategies, oracles and property checks shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use spiky::factorize::random_orthogonal;
use spiky::ingest::{build_gram, parse_interactions_str, ppmi, topk_filter};
use spiky::spikes::{cosine, spike_cover};
use spiky::stability::jaccard;
use spiky::{Embeddings, SparseSymmetric, SpkConfig};

pub type Check = Result<(), TestCaseError>;

/// Interaction records over small id spaces, so that items share contexts.
pub fn interactions() -> impl Strategy<Value = String> {
    prop::collection::vec((0..12usize, 0..8usize, 1..20u32), 1..60).prop_map(|rows| {
        rows.iter()
            .map(|(i, c, w)| format!("item{i}\tctx{c}\t{}\n", f64::from(*w) / 4.0))
            .collect()
    })
}

/// Symmetric non-negative matrix given as upper-triangle entries.
pub fn sparse_symmetric() -> impl Strategy<Value = SparseSymmetric> {
    (2..14usize)
        .prop_flat_map(|n| {
            let entry = (0..n, 0..n, prop_oneof![Just(1.0), 0.01f64..10.0]);
            (Just(n), prop::collection::vec(entry, 1..50))
        })
        .prop_map(|(n, entries)| SparseSymmetric::from_triplets(n, entries, None).unwrap())
}

pub fn embeddings(max_n: usize, max_f: usize) -> impl Strategy<Value = Embeddings> {
    (1..=max_n, 1..=max_f)
        .prop_flat_map(|(n, f)| prop::collection::vec(-10.0f64..10.0, n * f).prop_map(move |v| (n, f, v)))
        .prop_map(|(n, f, v)| Embeddings::from_matrix(DMatrix::from_row_slice(n, f, &v)).unwrap())
}

pub fn spk_config() -> impl Strategy<Value = SpkConfig> {
    (0.05f64..0.99, 0.05f64..=1.0).prop_map(|(c, r)| SpkConfig::new(c, r).unwrap())
}

/// Dense symmetric eigenvalues, for the PSD check.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
}

fn stored_pairs(m: &SparseSymmetric) -> BTreeMap<(usize, usize), f64> {
    (0..m.n()).flat_map(|i| m.row(i).map(move |(j, v)| ((i, j), v))).collect()
}

pub fn mirror_equal(m: &SparseSymmetric) -> Check {
    let pairs = stored_pairs(m);
    for (&(i, j), &v) in &pairs {
        prop_assert_eq!(pairs.get(&(j, i)).copied(), Some(v), "({}, {}) has no mirror", i, j);
    }
    Ok(())
}

/// Gram matrix is PSD and all three stages keep exact symmetry.
pub fn check_ingest_symmetry(text: &str, k: usize) -> Check {
    let triples = parse_interactions_str(text).unwrap();
    let gram = build_gram(&triples).unwrap();
    mirror_equal(&gram)?;
    let dense = gram.to_dense();
    let scale = dense.norm();
    let lowest = eigenvalues(&dense).into_iter().fold(f64::INFINITY, f64::min);
    prop_assert!(lowest >= -1e-9 * scale, "eigenvalue {} below tolerance", lowest);
    let filtered = topk_filter(&gram, k).unwrap();
    mirror_equal(&filtered)?;
    mirror_equal(&ppmi(&filtered).unwrap())?;
    Ok(())
}

pub fn check_topk_idempotent(m: &SparseSymmetric, k: usize) -> Check {
    let once = topk_filter(m, k).unwrap();
    let twice = topk_filter(&once, k).unwrap();
    prop_assert_eq!(once, twice);
    Ok(())
}

pub fn check_ppmi_scale_invariant(m: &SparseSymmetric, scale: f64) -> Check {
    let scaled = SparseSymmetric::from_triplets(
        m.n(),
        m.upper_triplets().map(|(i, j, v)| (i, j, v * scale)),
        None,
    )
    .unwrap();
    let (Ok(a), Ok(b)) = (ppmi(m), ppmi(&scaled)) else {
        return Ok(());
    };
    let (pa, pb) = (stored_pairs(&a), stored_pairs(&b));
    for (key, &va) in &pa {
        match pb.get(key) {
            Some(&vb) => prop_assert!((va - vb).abs() <= 1e-12 * va.abs().max(1.0), "{:?}: {} vs {}", key, va, vb),
            // Values on the log(1) boundary may round to either side.
            None => prop_assert!(va <= 1e-12, "{:?} = {} lost after scaling", key, va),
        }
    }
    for (key, &vb) in &pb {
        if !pa.contains_key(key) {
            prop_assert!(vb <= 1e-12, "{:?} = {} appeared after scaling", key, vb);
        }
    }
    Ok(())
}

/// Bounds, stored-assignment validity and peak order of one cover.
pub fn check_cover_invariants(e: &Embeddings, cfg: &SpkConfig) -> Check {
    let Ok(cover) = spike_cover(e, cfg) else {
        prop_assert!(e.norms().iter().all(|&x| x == 0.0));
        return Ok(());
    };
    let n = e.n() as f64;
    prop_assert!(cover.spk() > 0.0 && cover.spk() <= cfg.rho + 1.0 / n, "spk = {}", cover.spk());
    let norms = e.norms();
    for (i, a) in cover.assignment().iter().enumerate() {
        let Some(k) = *a else { continue };
        let peak = cover.peaks()[k];
        if peak == i {
            continue;
        }
        let cos = cosine(&e.row(peak), &e.row(i), norms[peak], norms[i]);
        prop_assert!(cos > cfg.cos_theta, "row {} in spike {} has cos {}", i, k, cos);
    }
    let peak_norms: Vec<f64> = cover.peaks().iter().map(|&p| norms[p]).collect();
    prop_assert!(peak_norms.windows(2).all(|w| w[0] >= w[1]));
    Ok(())
}

pub fn check_cover_scale_equivariant(e: &Embeddings, cfg: &SpkConfig, c: f64) -> Check {
    let scaled = Embeddings::from_matrix(e.matrix() * c).unwrap();
    let (Ok(a), Ok(b)) = (spike_cover(e, cfg), spike_cover(&scaled, cfg)) else {
        return Ok(());
    };
    prop_assert_eq!(a.peaks(), b.peaks());
    prop_assert_eq!(a.assignment(), b.assignment());
    prop_assert_eq!(a.spk(), b.spk());
    Ok(())
}

pub fn check_cover_rotation_equivariant(e: &Embeddings, cfg: &SpkConfig, seed: u64) -> Check {
    let q = random_orthogonal(e.dim(), seed);
    let rotated = Embeddings::from_matrix(e.matrix() * q).unwrap();
    let (Ok(a), Ok(b)) = (spike_cover(e, cfg), spike_cover(&rotated, cfg)) else {
        return Ok(());
    };
    prop_assert_eq!(a.spk(), b.spk());
    prop_assert_eq!(a.assignment(), b.assignment());
    Ok(())
}

pub fn id_sets() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (
        prop::collection::vec(0..20u8, 0..12),
        prop::collection::vec(0..20u8, 0..12),
    )
}

pub fn check_jaccard_axioms(a: &[u8], b: &[u8]) -> Check {
    let ab = jaccard(a, b);
    prop_assert_eq!(ab, jaccard(b, a));
    prop_assert!((0.0..=1.0).contains(&ab));
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable();
    sa.dedup();
    sb.sort_unstable();
    sb.dedup();
    if !sa.is_empty() || !sb.is_empty() {
        prop_assert_eq!(ab == 1.0, sa == sb);
    }
    prop_assert_eq!(jaccard(a, a), 1.0);
    Ok(())
}

pub fn snapshot() -> impl Strategy<Value = Embeddings> {
    (
        embeddings(8, 5),
        0.0f64..=1.0,
        prop::option::of("[a-zé0-9-]{0,12}"),
        prop::collection::vec("[a-zA-Zü0-9_:]{1,10}", 8),
    )
        .prop_map(|(e, p, label, ids)| {
            let ids = ids[..e.n()].iter().enumerate().map(|(i, s)| format!("{s}#{i}")).collect();
            Embeddings::new(e.matrix().clone(), p, ids, label).unwrap()
        })
}

pub fn check_snapshot_round_trip(e: &Embeddings) -> Check {
    let mut buf = Vec::new();
    e.write_snapshot_to(&mut buf).unwrap();
    let back = Embeddings::read_snapshot_from(buf.as_slice()).unwrap();
    prop_assert_eq!(&back, e);
    for (a, b) in back.rows_flat().iter().zip(e.rows_flat()) {
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
    Ok(())
}

/// Random symmetric matrix with i.i.d. normal upper triangle.
pub fn gaussian_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// Smallest pairwise cosine among `rows` of `m`.
pub fn min_pairwise_cosine(m: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let mut worst = 1.0f64;
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let (ri, rj) = (m.row(i), m.row(j));
            worst = worst.min(ri.dot(&rj) / (ri.norm() * rj.norm()));
        }
    }
    worst
}
