//! Neighbourhood stability between two snapshots.
//!
//! The second snapshot moves every row by noise inversely proportional to
//! its norm. Low-norm partitions lose most of their top-k neighbours while
//! high-norm ones keep them.
//!
//! `cargo run --release -p spiky --example stability`

use std::error::Error;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spiky::stability::stability_report;
use spiky::{Embeddings, StabilityConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (n, f) = (3000, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut reference = DMatrix::<f64>::zeros(n, f);
    for mut row in reference.row_iter_mut() {
        for x in row.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let radius = 0.2 * 25f64.powf(rng.random::<f64>());
        let norm = row.norm();
        row *= radius / norm;
    }
    let mut moved = reference.clone();
    for mut row in moved.row_iter_mut() {
        let scale = 0.1 / row.norm();
        for x in row.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *x += scale * g;
        }
    }
    let ids: Vec<String> = (0..n).map(|i| format!("item{i}")).collect();
    let reference = Embeddings::new(reference, 1.0, ids.clone(), Some("2024-01".into()))?;
    let moved = Embeddings::new(moved, 1.0, ids, Some("2024-02".into()))?;

    let cfg = StabilityConfig {
        top_k: 100,
        samples_per_partition: 200,
        ..StabilityConfig::default()
    };
    let report = stability_report(&reference, &[moved], &cfg)?;
    for p in &report.partitions {
        println!("partition {}: {} items, norms {:.2}..{:.2}", p.partition, p.size, p.min_norm, p.max_norm);
    }
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
