//! Spikes and degree-corrected block models, in both directions.
//!
//! Forward: three exact spikes plus a low-norm noise cloud. The spike rows of
//! the reconstruction `M̂` match `α_i α_j B_{C(i)C(j)}` to rounding error.
//!
//! Reverse: the mean matrix of a DCBM with three assortative communities has
//! rank three, and its embeddings form exactly three spikes whose norms
//! recover the degree parameters.
//!
//! `cargo run --release -p spiky --example spiky_theorem`

use std::error::Error;

use nalgebra::DMatrix;

use spiky::communities::{
    community_accuracy, dcbm_mean, embedding_factorization, recover_alphas, synth_spiky_embeddings, verify_theorem,
    within_community_correlation,
};
use spiky::factorize::{embeddings, exact_eig};
use spiky::spikes::spike_cover;
use spiky::{DcbmSpec, SpkConfig, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let synth = synth_spiky_embeddings(&SynthConfig::three_spikes(), 0)?;
    let fac = embedding_factorization(&synth.embeddings)?;
    let e = embeddings(&fac, 1.0)?;
    let cover = spike_cover(&e, &SpkConfig::default())?;
    let report = verify_theorem(&e, &cover, &fac, 1e-10)?;
    println!(
        "forward: {} spikes over {} of {} rows, max |M̂| deviation {:.2e}, pass = {}",
        report.num_spikes, report.n_prime, report.n, report.max_abs_deviation, report.pass
    );
    println!("normalized block matrix:");
    for row in report.normalized_b() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.3}")).collect();
        println!("  [{}]", cells.join(", "));
    }

    let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.15, 0.1, 0.15, 1.0]);
    let spec = DcbmSpec::with_random_alphas(&[200, 200, 200], b, (0.3, 1.0), 0)?;
    let truth: Vec<usize> = (0..spec.n()).map(|i| spec.community(i)).collect();
    let fac = exact_eig(&dcbm_mean(&spec), 3)?;
    let e = embeddings(&fac, 1.0)?;
    let cover = spike_cover(&e, &SpkConfig::new(0.9, 1.0)?)?;
    let rows: Vec<usize> = (0..spec.n()).collect();
    println!(
        "reverse: {} spikes, community accuracy {:.3}, within-community α correlation {:.6}",
        cover.num_spikes(),
        community_accuracy(&cover, &truth, &rows),
        within_community_correlation(&recover_alphas(&cover), spec.alphas(), &truth)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
