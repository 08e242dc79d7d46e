//! Interaction records to an embeddings snapshot.
//!
//! Generates playlist-style records (items grouped in genres, popular items
//! drawn more often), writes them as TSV, then runs the full chain: Gram
//! matrix, top-k filter, PPMI, randomized truncated eigendecomposition and
//! `UΣ^p` embeddings, saved as a binary snapshot.
//!
//! `cargo run --release -p spiky --example pipeline`

use std::error::Error;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spiky::factorize::{embeddings, truncated_svd};
use spiky::ingest::{build_gram, parse_interactions_str, ppmi, topk_filter};
use spiky::spikes::spike_cover;
use spiky::{Embeddings, SpkConfig, SvdOptions};

/// `genres × per_genre` items; each context picks one genre and draws
/// `len` items from it with probability proportional to popularity.
fn playlists(genres: usize, per_genre: usize, contexts: usize, len: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let popularity: Vec<f64> = (0..genres * per_genre).map(|_| 0.05 + rng.random::<f64>().powi(3)).collect();
    let mut out = String::new();
    for c in 0..contexts {
        let g = rng.random_range(0..genres);
        let items = &popularity[g * per_genre..(g + 1) * per_genre];
        let total: f64 = items.iter().sum();
        for _ in 0..len {
            let mut u = rng.random::<f64>() * total;
            let pick = items.iter().position(|&p| {
                u -= p;
                u <= 0.0
            });
            let item = g * per_genre + pick.unwrap_or(per_genre - 1);
            writeln!(out, "track{item:04}\tplaylist{c:05}\t1").unwrap();
        }
    }
    out
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let records = playlists(6, 80, 3000, 12, 1);
    let triples = parse_interactions_str(&records)?;
    println!(
        "{} records, {} items, {} contexts",
        triples.records().len(),
        triples.num_items(),
        triples.num_contexts()
    );

    let gram = build_gram(&triples)?;
    let filtered = topk_filter(&gram, 50)?;
    let m = ppmi(&filtered)?;
    println!("gram nnz {}, after top-50 filter {}, after PPMI {}", gram.nnz(), filtered.nnz(), m.nnz());

    let fac = truncated_svd(&m, 16, SvdOptions::default())?;
    let head: Vec<String> = fac.eigenvalues().iter().take(8).map(|d| format!("{d:.2}")).collect();
    println!("leading eigenvalues: {}", head.join(" "));

    let e = embeddings(&fac, 1.0)?.with_label("example");
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("tracks.spke");
    e.write_snapshot(&path)?;
    let back = Embeddings::read_snapshot(&path)?;
    assert_eq!(back, e);
    println!(
        "snapshot {} bytes, {} x {}",
        std::fs::metadata(&path)?.len(),
        back.n(),
        back.dim()
    );

    let cover = spike_cover(&e, &SpkConfig::default())?;
    println!("Spk = {:.4} with {} spikes", cover.spk(), cover.num_spikes());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
