//! Every example must run to completion.

#[path = "../examples/pipeline.rs"]
mod pipeline;
#[path = "../examples/gaussian_baseline.rs"]
mod gaussian_baseline;
#[path = "../examples/spk_sweep.rs"]
mod spk_sweep;
#[path = "../examples/spiky_theorem.rs"]
mod spiky_theorem;
#[path = "../examples/dcbm_sampling.rs"]
mod dcbm_sampling;
#[path = "../examples/stability.rs"]
mod stability;
#[path = "../examples/file_formats.rs"]
mod file_formats;
#[path = "../examples/config_run.rs"]
mod config_run;

#[test]
fn pipeline_runs() {
    pipeline::run_example().unwrap();
}

#[test]
fn gaussian_baseline_runs() {
    gaussian_baseline::run_example().unwrap();
}

#[test]
fn spk_sweep_runs() {
    spk_sweep::run_example().unwrap();
}

#[test]
fn spiky_theorem_runs() {
    spiky_theorem::run_example().unwrap();
}

#[test]
fn dcbm_sampling_runs() {
    dcbm_sampling::run_example().unwrap();
}

#[test]
fn stability_runs() {
    stability::run_example().unwrap();
}

#[test]
fn file_formats_runs() {
    file_formats::run_example().unwrap();
}

#[test]
fn config_run_runs() {
    config_run::run_example().unwrap();
}
