//! Spk as a function of the truncation rank on one PPMI matrix.
//!
//! A planted-community co-occurrence matrix is factorized once at the
//! largest rank; lower ranks reuse the leading columns.
//!
//! `cargo run --release -p spiky --example spk_sweep`

use std::error::Error;

use nalgebra::DMatrix;

use spiky::communities::{dcbm_mean, DcbmSpec};
use spiky::factorize::{embeddings, truncated_svd};
use spiky::ingest::ppmi;
use spiky::spikes::spk_sweep;
use spiky::{Factorization, SparseSymmetric, SpkConfig, SvdOptions};

fn leading(fac: &Factorization, f: usize) -> Result<Factorization, spiky::Error> {
    Factorization::new(
        fac.u().columns(0, f).into_owned(),
        fac.sigma()[..f].to_vec(),
        fac.signs()[..f].to_vec(),
        fac.row_ids().to_vec(),
    )
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let k = 8;
    let b = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.05 });
    let spec = DcbmSpec::with_random_alphas(&[60; 8], b, (0.1, 1.0), 2)?;
    let m = ppmi(&SparseSymmetric::from_dense(&dcbm_mean(&spec), None)?)?;

    let fac = truncated_svd(&m, 32, SvdOptions::default())?;
    let list = [2, 4, 8, 16, 32]
        .iter()
        .map(|&f| embeddings(&leading(&fac, f)?, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    println!("{:>4} {:>7} {:>8}", "f", "spikes", "Spk");
    for p in spk_sweep(&list, &SpkConfig::default())? {
        println!("{:>4} {:>7} {:>8.4}", p.f, p.num_spikes, p.spk);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
