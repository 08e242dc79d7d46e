//! Driving the command layer from a TOML configuration.
//!
//! Equivalent to `spiky --config run.toml baseline` with the file below;
//! flags and `SPIKY_*` variables would override the file.
//!
//! `cargo run --release -p spiky --example config_run`

use std::error::Error;

use spiky::cli::{cmd_baseline, cmd_dcbm_verify, RunConfig};

const CONFIG: &str = r#"
seed = 42

[spk]
cos_theta = 0.9
rho = 0.5

[baseline]
n = 3000
f = 64

[verify]
tolerance = 1e-10
"#;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    cfg.validate()?;
    let mut out = std::io::stdout().lock();
    let baseline = cmd_baseline(&cfg, &mut out)?;
    assert_eq!(baseline.spk, 0.5);
    let report = cmd_dcbm_verify(&cfg, &mut out)?;
    assert!(report.pass);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
