//! Spikes in the spectrum of a sampled DCBM graph.
//!
//! The adjacency is a Bernoulli draw around the block-model mean, so spikes
//! thicken into cones: communities are still recovered, while norms track
//! the degree parameters only up to sampling noise.
//!
//! `cargo run --release -p spiky --example dcbm_sampling`

use std::error::Error;

use nalgebra::DMatrix;

use spiky::communities::{community_accuracy, recover_alphas, sample_dcbm, within_community_correlation};
use spiky::factorize::{embeddings, truncated_svd};
use spiky::spikes::spike_cover;
use spiky::{DcbmSpec, SpkConfig, SvdOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.15, 0.1, 0.15, 1.0]);
    let spec = DcbmSpec::with_random_alphas(&[200, 200, 200], b, (0.3, 1.0), 0)?;
    let truth: Vec<usize> = (0..spec.n()).map(|i| spec.community(i)).collect();
    let rows: Vec<usize> = (0..spec.n()).collect();
    for seed in 0..3 {
        let adjacency = sample_dcbm(&spec, seed)?;
        let fac = truncated_svd(&adjacency, 3, SvdOptions { seed, ..SvdOptions::default() })?;
        let e = embeddings(&fac, 1.0)?;
        let cover = spike_cover(&e, &SpkConfig::new(0.9, 1.0)?)?;
        println!(
            "seed {seed}: {} edges, {} spikes, accuracy {:.3}, within-community α correlation {:.4}",
            adjacency.nnz_upper(),
            cover.num_spikes(),
            community_accuracy(&cover, &truth, &rows),
            within_community_correlation(&recover_alphas(&cover), spec.alphas(), &truth)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
