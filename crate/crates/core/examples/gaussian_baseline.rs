//! Spk of standard-normal embeddings across dimensions.
//!
//! In high dimension random directions almost never fall within 25° of each
//! other, so every peak covers only itself and Spk equals ρ. In low dimension
//! a few neighbours get absorbed and Spk drops slightly below ρ.
//!
//! `cargo run --release -p spiky --example gaussian_baseline`

use std::error::Error;

use spiky::spikes::{gaussian_baseline, spike_cover};
use spiky::SpkConfig;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = SpkConfig::default();
    let n = 4000;
    println!("n = {n}, cos θ = {}, ρ = {}", cfg.cos_theta, cfg.rho);
    println!("{:>5} {:>8} {:>8}", "f", "spikes", "Spk");
    for f in [4, 8, 16, 32, 64, 128] {
        let e = gaussian_baseline(n, f, f as u64)?;
        let cover = spike_cover(&e, &cfg)?;
        println!("{f:>5} {:>8} {:>8.4}", cover.num_spikes(), cover.spk());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
