//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs with a custom harness (`harness = false`) so every line is printed on
//! every run: `cargo test -p spiky --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};

use spiky::communities::{
    community_accuracy, dcbm_mean, embedding_factorization, recover_alphas, sample_dcbm, synth_spiky_embeddings,
    verify_theorem, within_community_correlation,
};
use spiky::factorize::{
    embeddings, exact_eig, frobenius_residual, reconstruct, symmetric_with_spectrum, truncated_svd,
    truncated_svd_dense,
};
use spiky::spikes::{gaussian_baseline, spike_cover};
use spiky::stability::{stability_report, Similarity};
use spiky::stats::{mean, pearson};
use spiky::{DcbmSpec, Embeddings, Factorization, SpkConfig, StabilityConfig, SvdOptions, SynthConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn timed(limit: Option<Duration>, run: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = run();
    let elapsed = start.elapsed();
    out.detail = format!("{}; {:.2}s", out.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail = format!("{} exceeds {}s", out.detail, limit.as_secs());
        }
    }
    out
}

/// Three assortative communities of 200 nodes, `α ~ U[0.3, 1]`.
fn three_community_spec(seed: u64) -> DcbmSpec {
    let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.15, 0.1, 0.15, 1.0]);
    DcbmSpec::with_random_alphas(&[200, 200, 200], b, (0.3, 1.0), seed).unwrap()
}

fn truth_labels(spec: &DcbmSpec) -> Vec<usize> {
    (0..spec.n()).map(|i| spec.community(i)).collect()
}

fn gaussian_spk_f128() -> Outcome {
    timed(Some(Duration::from_secs(30)), || {
        let e = gaussian_baseline(10_000, 128, 0).unwrap();
        let cover = spike_cover(&e, &SpkConfig::default()).unwrap();
        Outcome::new(
            cover.spk() >= 0.499,
            format!("spk = {:.4} (need >= 0.499), spikes = {}", cover.spk(), cover.num_spikes()),
        )
    })
}

fn gaussian_spk_f16() -> Outcome {
    timed(Some(Duration::from_secs(30)), || {
        let values: Vec<f64> = (0..5)
            .map(|seed| {
                let e = gaussian_baseline(10_000, 16, seed).unwrap();
                spike_cover(&e, &SpkConfig::default()).unwrap().spk()
            })
            .collect();
        let m = mean(&values);
        Outcome::new(
            (0.485..=0.50).contains(&m),
            format!("mean spk over 5 seeds = {m:.4} (need [0.485, 0.50]), runs {values:.4?}"),
        )
    })
}

fn three_synthetic_spikes() -> Outcome {
    timed(None, || {
        let mut worst_dev = 0.0f64;
        let mut problems = Vec::new();
        for seed in 0..3 {
            let synth = synth_spiky_embeddings(&SynthConfig::three_spikes(), seed).unwrap();
            let fac = embedding_factorization(&synth.embeddings).unwrap();
            let e = embeddings(&fac, 1.0).unwrap();
            let cover = spike_cover(&e, &SpkConfig::default()).unwrap();
            if cover.num_spikes() != 3 {
                problems.push(format!("seed {seed}: {} peaks", cover.num_spikes()));
            }
            let members: Vec<usize> = (0..e.n()).filter(|&i| synth.labels[i].is_some()).collect();
            let truth: Vec<usize> = synth.labels.iter().map(|l| l.unwrap_or(usize::MAX)).collect();
            let spike_of: Vec<Option<usize>> = members.iter().map(|&i| cover.assignment()[i]).collect();
            // Zero errors: each true spike maps onto exactly one cover spike.
            let mut errors = 0usize;
            for &i in &members {
                let same_truth = members.iter().find(|&&j| truth[j] == truth[i]).copied().unwrap();
                if cover.assignment()[i].is_none() || cover.assignment()[i] != cover.assignment()[same_truth] {
                    errors += 1;
                }
            }
            let mut distinct: Vec<Option<usize>> = spike_of.clone();
            distinct.sort();
            distinct.dedup();
            if errors > 0 || distinct.len() != 3 {
                problems.push(format!("seed {seed}: {errors} mislabeled spike members"));
            }
            let report = verify_theorem(&e, &cover, &fac, 1e-10).unwrap();
            worst_dev = worst_dev.max(report.max_abs_deviation);
            if !report.pass {
                problems.push(format!("seed {seed}: deviation {:.3e}", report.max_abs_deviation));
            }
        }
        Outcome::new(
            problems.is_empty(),
            format!(
                "3 seeds, max deviation {worst_dev:.3e} (need <= 1e-10){}",
                if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
            ),
        )
    })
}

fn exact_mean_reverse_direction() -> Outcome {
    timed(None, || {
        let mut worst_corr = f64::INFINITY;
        let mut problems = Vec::new();
        for seed in 0..3 {
            let spec = three_community_spec(seed);
            let truth = truth_labels(&spec);
            let fac = exact_eig(&dcbm_mean(&spec), 3).unwrap();
            let e = embeddings(&fac, 1.0).unwrap();
            let cover = spike_cover(&e, &SpkConfig::new(0.9, 1.0).unwrap()).unwrap();
            let rows: Vec<usize> = (0..spec.n()).collect();
            let accuracy = community_accuracy(&cover, &truth, &rows);
            if cover.num_spikes() != 3 || accuracy < 1.0 {
                problems.push(format!("seed {seed}: {} spikes, accuracy {accuracy}", cover.num_spikes()));
            }
            let corr = within_community_correlation(&recover_alphas(&cover), spec.alphas(), &truth);
            worst_corr = worst_corr.min(corr);
        }
        Outcome::new(
            problems.is_empty() && worst_corr >= 0.999,
            format!(
                "3 seeds, 3 spikes each, min within-community alpha correlation {worst_corr:.6} (need >= 0.999){}",
                if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
            ),
        )
    })
}

fn sampled_dcbm_recovery() -> Outcome {
    timed(Some(Duration::from_secs(60)), || {
        let spec = three_community_spec(0);
        let truth = truth_labels(&spec);
        let rows: Vec<usize> = (0..spec.n()).filter(|&i| spec.alphas()[i] >= 0.3).collect();
        let mut accuracies = Vec::new();
        let mut corrs = Vec::new();
        let mut pooled = Vec::new();
        for seed in 0..3 {
            let a = sample_dcbm(&spec, seed).unwrap();
            let opts = SvdOptions {
                seed,
                ..SvdOptions::default()
            };
            let fac = truncated_svd(&a, 3, opts).unwrap();
            let e = embeddings(&fac, 1.0).unwrap();
            let cover = spike_cover(&e, &SpkConfig::new(0.9, 1.0).unwrap()).unwrap();
            accuracies.push(community_accuracy(&cover, &truth, &rows));
            let rec = recover_alphas(&cover);
            corrs.push(within_community_correlation(&rec, spec.alphas(), &truth));
            let norms = e.norms();
            pooled.push(pearson(&norms, spec.alphas()));
        }
        let min_acc = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
        let min_corr = corrs.iter().copied().fold(f64::INFINITY, f64::min);
        Outcome::new(
            min_acc >= 0.95 && min_corr >= 0.99,
            format!(
                "accuracy {accuracies:.4?} (need >= 0.95), within-community alpha correlation {corrs:.4?} \
                 (need >= 0.99), pooled norm correlation {pooled:.4?}"
            ),
        )
    })
}

fn eckart_young() -> Outcome {
    timed(None, || {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let m = common::gaussian_symmetric(100, seed);
            let full = exact_eig(&m, 100).unwrap();
            let d = full.eigenvalues();
            for f in [1, 5, 20] {
                let approx = reconstruct(&exact_eig(&m, f).unwrap()).unwrap();
                let residual = frobenius_residual(&m, &approx);
                let tail: f64 = d[f..].iter().map(|x| x * x).sum();
                worst = worst.max((residual - tail).abs() / tail);
            }
        }
        Outcome::new(
            worst <= 1e-8,
            format!("5 matrices x f in {{1, 5, 20}}, max relative gap {worst:.3e} (need <= 1e-8)"),
        )
    })
}

/// Spectrum with magnitudes `10 · 0.8^i · (1 + 0.05 u)`, random signs, and
/// relative gaps of at least 1e-3 between consecutive magnitudes.
fn gapped_spectrum(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut mags: Vec<f64> = (0..n)
            .map(|i| 10.0 * 0.8f64.powi(i as i32) * (1.0 + 0.05 * rng.random::<f64>()))
            .collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        if mags.windows(2).all(|w| (w[0] - w[1]) >= 1e-3 * w[0]) {
            return mags
                .into_iter()
                .map(|m| if rng.random::<bool>() { m } else { -m })
                .collect();
        }
    }
}

fn randomized_vs_exact() -> Outcome {
    timed(None, || {
        let f = 10;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        let mut sign_mismatch = 0;
        for instance in 0..20u64 {
            let spectrum = gapped_spectrum(200, &mut rng);
            let m = symmetric_with_spectrum(&spectrum, 100 + instance);
            let exact = exact_eig(&m, f).unwrap();
            let opts = SvdOptions {
                oversample: 10,
                power_iters: 4,
                seed: instance,
            };
            let approx = truncated_svd_dense(&m, f, opts).unwrap();
            for (a, b) in approx.sigma().iter().zip(exact.sigma()) {
                worst = worst.max((a - b).abs() / b);
            }
            if approx.signs() != exact.signs() {
                sign_mismatch += 1;
            }
        }
        Outcome::new(
            worst <= 1e-6 && sign_mismatch == 0,
            format!("20 instances 200x200, f = {f}, max relative gap {worst:.3e} (need <= 1e-6), sign mismatches {sign_mismatch}"),
        )
    })
}

fn collinearity_invariance() -> Outcome {
    timed(None, || {
        let cfg = SynthConfig {
            noise_count: 0,
            ..SynthConfig::three_spikes()
        };
        let synth = synth_spiky_embeddings(&cfg, 5).unwrap();
        let base = embedding_factorization(&synth.embeddings).unwrap();
        // Mixed signs, so that V = U · diag(signs) differs from U.
        let signs: Vec<i8> = (0..base.f()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let fac = Factorization::new(base.u().clone(), base.sigma().to_vec(), signs, base.row_ids().to_vec()).unwrap();
        let groups: Vec<Vec<usize>> = (0..3)
            .map(|k| (0..synth.labels.len()).filter(|&i| synth.labels[i] == Some(k)).collect())
            .collect();
        let mut worst = 0.0f64;
        let mut check = |m: &DMatrix<f64>| {
            for g in &groups {
                worst = worst.max(1.0 - common::min_pairwise_cosine(m, g));
            }
        };
        check(fac.u());
        for p in [0.0, 0.5, 1.0] {
            check(embeddings(&fac, p).unwrap().matrix());
        }
        check(&fac.v());
        Outcome::new(
            worst <= 1e-12,
            format!("U, E(p = 0, 0.5, 1) and V: max 1 - cos within spikes {worst:.3e} (need <= 1e-12)"),
        )
    })
}

/// Reference rows with norms spread over `[0.2, 5]`, and a copy perturbed by
/// Gaussian noise of size `0.1 / ‖e_i‖` per row.
fn perturbed_pair(n: usize, f: usize, seed: u64) -> (Embeddings, Embeddings) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut base = DMatrix::zeros(n, f);
    for i in 0..n {
        let dir: Vec<f64> = (0..f).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = 0.2 * 25f64.powf(rng.random::<f64>());
        for (c, x) in dir.iter().enumerate() {
            base[(i, c)] = radius * x / norm;
        }
    }
    let mut moved = base.clone();
    for i in 0..n {
        let scale = 0.1 / base.row(i).norm();
        for c in 0..f {
            let g: f64 = StandardNormal.sample(&mut rng);
            moved[(i, c)] += scale * g;
        }
    }
    let ids: Vec<String> = (0..n).map(|i| format!("item{i}")).collect();
    let reference = Embeddings::new(base, 1.0, ids.clone(), Some("reference".into())).unwrap();
    let snapshot = Embeddings::new(moved, 1.0, ids, Some("perturbed".into())).unwrap();
    (reference, snapshot)
}

fn stability_protocol() -> Outcome {
    timed(None, || {
        let (reference, snapshot) = perturbed_pair(7_500, 16, 3);
        let cfg = StabilityConfig {
            seed: 11,
            ..StabilityConfig::default()
        };
        let own = stability_report(&reference, std::slice::from_ref(&reference), &cfg).unwrap();
        let self_ok = own.rows.iter().all(|r| r.mean_jaccard == 1.0);
        let report = stability_report(&reference, std::slice::from_ref(&snapshot), &cfg).unwrap();
        let dot = report.curve(1, Similarity::Dot);
        let cosine = report.curve(1, Similarity::Cosine);
        let increasing = dot.windows(2).all(|w| w[0] < w[1]);
        Outcome::new(
            self_ok && increasing,
            format!(
                "self-comparison all 1: {self_ok}; dot by norm partition {dot:.3?} strictly increasing: {increasing}; cosine {cosine:.3?}"
            ),
        )
    })
}

fn property_suite() -> Outcome {
    timed(None, || {
        let config = Config {
            cases: 128,
            failure_persistence: None,
            ..Config::default()
        };
        let mut failures = Vec::new();
        let mut run = |name: &str, result: Result<(), String>| {
            if let Err(e) = result {
                failures.push(format!("{name}: {e}"));
            }
        };
        let runner = || TestRunner::new(config.clone());
        run(
            "ingest symmetry and PSD gram",
            runner()
                .run(&(common::interactions(), 1..6usize), |(t, k)| common::check_ingest_symmetry(&t, k))
                .map_err(|e| e.to_string()),
        );
        run(
            "top-k idempotence",
            runner()
                .run(&(common::sparse_symmetric(), 1..5usize), |(m, k)| common::check_topk_idempotent(&m, k))
                .map_err(|e| e.to_string()),
        );
        run(
            "ppmi scale invariance",
            runner()
                .run(&(common::sparse_symmetric(), 1e-3f64..1e3), |(m, c)| common::check_ppmi_scale_invariant(&m, c))
                .map_err(|e| e.to_string()),
        );
        run(
            "spk bounds and assignment validity",
            runner()
                .run(&(common::embeddings(40, 6), common::spk_config()), |(e, c)| common::check_cover_invariants(&e, &c))
                .map_err(|e| e.to_string()),
        );
        run(
            "spk scale equivariance",
            runner()
                .run(&(common::embeddings(40, 6), common::spk_config(), 0.01f64..100.0), |(e, c, s)| {
                    common::check_cover_scale_equivariant(&e, &c, s)
                })
                .map_err(|e| e.to_string()),
        );
        run(
            "spk rotation equivariance",
            runner()
                .run(&(common::embeddings(40, 6), common::spk_config(), any::<u64>()), |(e, c, s)| {
                    common::check_cover_rotation_equivariant(&e, &c, s)
                })
                .map_err(|e| e.to_string()),
        );
        run(
            "jaccard axioms",
            runner()
                .run(&common::id_sets(), |(a, b)| common::check_jaccard_axioms(&a, &b))
                .map_err(|e| e.to_string()),
        );
        run(
            "snapshot round trip",
            runner()
                .run(&common::snapshot(), |e| common::check_snapshot_round_trip(&e))
                .map_err(|e| e.to_string()),
        );
        Outcome::new(
            failures.is_empty(),
            if failures.is_empty() {
                "8 properties x 128 cases".to_string()
            } else {
                failures.join("; ")
            },
        )
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 gaussian spk, n=10000 f=128", gaussian_spk_f128),
        ("AC2 gaussian spk, n=10000 f=16", gaussian_spk_f16),
        ("AC3 three synthetic spikes", three_synthetic_spikes),
        ("AC4 exact dcbm mean forms spikes", exact_mean_reverse_direction),
        ("AC5 sampled dcbm recovery", sampled_dcbm_recovery),
        ("AC6 eckart-young residual", eckart_young),
        ("AC7 randomized vs exact spectrum", randomized_vs_exact),
        ("AC8 collinearity under scaling and signs", collinearity_invariance),
        ("AC9 stability protocol", stability_protocol),
        ("AC10 property suite", property_suite),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let out = criterion();
        println!("{} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
