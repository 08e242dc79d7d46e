//! Config-driven command layer behind the `spiky` binary.
//!
//! Settings are merged in the order defaults < `--config` TOML file <
//! `SPIKY_*` environment variables < command-line flags. `--dump-config`
//! prints the merged configuration as TOML and exits; the output parses back
//! to the same [`RunConfig`].
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::communities::{
    self, dcbm_mean, embedding_factorization, sample_dcbm, synth_spiky_embeddings, DcbmSpec, SynthConfig,
};
use crate::error::{Error, Result};
use crate::factorize::{self, embeddings, truncated_svd, Embeddings, SvdOptions};
use crate::ingest::{self, SparseSymmetric};
use crate::seed::{derive_seed, Stream};
use crate::spikes::{self, spike_cover, spk_sweep, CosineMode, SpkConfig};
use crate::stability::{stability_report, Similarity, StabilityConfig};

/// Writes `path` through a temporary file in the same directory that is
/// renamed into place once `write` succeeds.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = BufWriter::new(tmp);
    write(&mut w)?;
    let tmp = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|e| Error::io(path, e.into()))?;
        writeln!(w).map_err(|e| Error::io(path, e))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Writes the PPMI matrix in SPKM format when set.
    pub matrix_output: Option<PathBuf>,
    pub k_filter: usize,
    pub f: usize,
    pub p: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub label: Option<String>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            input: None,
            output: None,
            matrix_output: None,
            k_filter: 100,
            f: 128,
            p: 1.0,
            oversample: 10,
            power_iters: 4,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpkSection {
    pub cos_theta: f64,
    pub rho: f64,
    pub mode: CosineMode,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// CSV `row_id,spike_index,alpha` for covered rows.
    pub assignment: Option<PathBuf>,
}

impl Default for SpkSection {
    fn default() -> Self {
        let d = SpkConfig::default();
        SpkSection {
            cos_theta: d.cos_theta,
            rho: d.rho,
            mode: d.mode,
            input: None,
            output: None,
            assignment: None,
        }
    }
}

impl SpkSection {
    pub fn spk_config(&self) -> Result<SpkConfig> {
        Ok(SpkConfig::new(self.cos_theta, self.rho)?.with_mode(self.mode))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcbmSection {
    /// JSON spec; when absent one is generated from `sizes`, `b` and
    /// `alpha_range`.
    pub spec: Option<PathBuf>,
    pub sizes: Vec<usize>,
    pub b: Vec<Vec<f64>>,
    pub alpha_range: (f64, f64),
    pub output: Option<PathBuf>,
    pub spec_output: Option<PathBuf>,
    /// Write the dense mean `α_i α_j B` instead of a sampled adjacency.
    pub mean: bool,
}

impl Default for DcbmSection {
    fn default() -> Self {
        DcbmSection {
            spec: None,
            sizes: vec![200; 3],
            b: vec![vec![1.0, 0.1, 0.1], vec![0.1, 1.0, 0.1], vec![0.1, 0.1, 1.0]],
            alpha_range: (0.3, 1.0),
            output: None,
            spec_output: None,
            mean: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// SPKM matrix to factorize; synthetic spikes from `synth` when absent.
    pub matrix: Option<PathBuf>,
    pub f: usize,
    pub p: f64,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
    pub synth: SynthConfig,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            matrix: None,
            f: 3,
            p: 1.0,
            tolerance: 1e-8,
            output: None,
            synth: SynthConfig::three_spikes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub reference: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub output_csv: Option<PathBuf>,
    pub output_json: Option<PathBuf>,
    pub top_k: usize,
    pub num_partitions: usize,
    pub samples_per_partition: usize,
    pub metrics: Vec<Similarity>,
    pub confidence: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        let d = StabilityConfig::default();
        StabilitySection {
            reference: None,
            snapshots: Vec::new(),
            output_csv: None,
            output_json: None,
            top_k: d.top_k,
            num_partitions: d.num_partitions,
            samples_per_partition: d.samples_per_partition,
            metrics: d.metrics,
            confidence: d.confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub n: usize,
    pub f: usize,
    pub output: Option<PathBuf>,
    /// Also write the Gaussian embeddings as a snapshot.
    pub snapshot: Option<PathBuf>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            n: 10_000,
            f: 128,
            output: None,
            snapshot: None,
        }
    }
}

/// Every setting of every subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineSection,
    pub spk: SpkSection,
    pub sweep: SweepSection,
    pub dcbm: DcbmSection,
    pub verify: VerifySection,
    pub stability: StabilitySection,
    pub baseline: BaselineSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid_argument(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid_argument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn stability_config(&self) -> StabilityConfig {
        let s = &self.stability;
        StabilityConfig {
            top_k: s.top_k,
            num_partitions: s.num_partitions,
            samples_per_partition: s.samples_per_partition,
            metrics: s.metrics.clone(),
            seed: derive_seed(self.seed, Stream::Stability),
            confidence: s.confidence,
        }
    }

    /// Range checks shared by all subcommands.
    pub fn validate(&self) -> Result<()> {
        self.spk.spk_config()?;
        self.stability_config().validate()?;
        let pl = &self.pipeline;
        if pl.k_filter == 0 || pl.f == 0 {
            return Err(Error::invalid_argument("pipeline.k_filter and pipeline.f must be at least 1"));
        }
        if !pl.p.is_finite() || !self.verify.p.is_finite() {
            return Err(Error::invalid_argument("exponent p must be finite"));
        }
        if !(self.verify.tolerance >= 0.0) {
            return Err(Error::invalid_argument("verify.tolerance must be non-negative"));
        }
        if self.baseline.n == 0 || self.baseline.f == 0 {
            return Err(Error::invalid_argument("baseline.n and baseline.f must be at least 1"));
        }
        Ok(())
    }
}

/// A failure tagged with the stage it came from.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(#[from] clap::Error),
    #[error("error in stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Stage { source, .. } => match source {
                Error::InvalidArgument(_) => 2,
                Error::Parse { .. } | Error::Format { .. } | Error::InvalidInput(_) | Error::Io { .. } => 3,
                Error::Numeric(_) => 4,
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            CliError::Stage { stage, .. } => Some(stage),
            CliError::Usage(_) => None,
        }
    }
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, CliError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::invalid_argument(format!("missing `{key}`")))
}

fn io_err(out: std::io::Error) -> CliError {
    CliError::Stage {
        stage: "output",
        source: Error::io("<stdout>", out),
    }
}

/// Interactions file to embeddings snapshot.
pub fn cmd_pipeline(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<Embeddings> {
    let pl = &cfg.pipeline;
    let input = required(&pl.input, "pipeline.input").stage("config")?;
    let output = required(&pl.output, "pipeline.output").stage("config")?;

    let file = File::open(input).map_err(|e| Error::io(input, e)).stage("parse")?;
    let triples = ingest::parse_interactions(BufReader::new(file)).stage("parse")?;
    let gram = ingest::build_gram(&triples).stage("build_gram")?;
    let filtered = ingest::topk_filter(&gram, pl.k_filter).stage("topk_filter")?;
    let m = ingest::ppmi(&filtered).stage("ppmi")?;
    if let Some(path) = &pl.matrix_output {
        write_atomic(path, |w| m.write_spkm(w).map_err(|e| Error::io(path, e))).stage("write_matrix")?;
    }
    let opts = SvdOptions {
        oversample: pl.oversample,
        power_iters: pl.power_iters,
        seed: derive_seed(cfg.seed, Stream::Factorize),
    };
    let fac = truncated_svd(&m, pl.f, opts).stage("factorize")?;
    let mut e = embeddings(&fac, pl.p).stage("embeddings")?;
    if let Some(label) = &pl.label {
        e = e.with_label(label.clone());
    }
    e.write_snapshot(output).stage("write_snapshot")?;

    let head: Vec<String> = fac
        .sigma()
        .iter()
        .zip(fac.signs())
        .take(5)
        .map(|(s, g)| format!("{:.6}", s * f64::from(*g)))
        .collect();
    writeln!(
        out,
        "items {}  contexts {}  gram nnz {}  filtered nnz {}  ppmi nnz {}",
        triples.num_items(),
        triples.num_contexts(),
        gram.nnz(),
        filtered.nnz(),
        m.nnz()
    )
    .map_err(io_err)?;
    writeln!(out, "eigenvalues (head) {}", head.join(" ")).map_err(io_err)?;
    writeln!(out, "wrote {} ({} x {}, p = {})", output.display(), e.n(), e.dim(), e.p()).map_err(io_err)?;
    Ok(e)
}

/// Spike cover of one snapshot.
pub fn cmd_spk(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<spikes::SpikeCover> {
    let s = &cfg.spk;
    let input = required(&s.input, "spk.input").stage("config")?;
    let spk_cfg = s.spk_config().stage("config")?;
    let e = Embeddings::read_snapshot(input).stage("read_snapshot")?;
    let cover = spike_cover(&e, &spk_cfg).stage("spike_cover")?;
    if let Some(path) = &s.output {
        write_json(path, &cover.to_json(e.row_ids())).stage("write_report")?;
    }
    if let Some(path) = &s.assignment {
        write_atomic(path, |w| {
            cover.write_assignment_csv(e.row_ids(), w).map_err(|err| Error::io(path, err))
        })
        .stage("write_assignment")?;
    }
    writeln!(
        out,
        "n {}  spikes {}  covered {}  spk {:.6}",
        cover.n(),
        cover.num_spikes(),
        cover.covered_count(),
        cover.spk()
    )
    .map_err(io_err)?;
    Ok(cover)
}

/// Spk of several snapshots, ordered by dimension.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<Vec<spikes::SweepPoint>> {
    if cfg.sweep.inputs.is_empty() {
        return Err(Error::invalid_argument("missing `sweep.inputs`")).stage("config");
    }
    let spk_cfg = cfg.spk.spk_config().stage("config")?;
    let list = cfg
        .sweep
        .inputs
        .iter()
        .map(Embeddings::read_snapshot)
        .collect::<Result<Vec<_>>>()
        .stage("read_snapshot")?;
    let points = spk_sweep(&list, &spk_cfg).stage("spk_sweep")?;
    if let Some(path) = &cfg.sweep.output {
        write_json(path, &points).stage("write_report")?;
    }
    for p in &points {
        writeln!(out, "f {:>5}  spikes {:>7}  spk {:.6}", p.f, p.num_spikes, p.spk).map_err(io_err)?;
    }
    Ok(points)
}

fn dcbm_spec(cfg: &RunConfig) -> Result<DcbmSpec> {
    let d = &cfg.dcbm;
    if let Some(path) = &d.spec {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return serde_json::from_str(&text)
            .map_err(|e| Error::invalid_input(format!("{}: {e}", path.display())));
    }
    let k = d.b.len();
    if k == 0 || d.b.iter().any(|r| r.len() != k) {
        return Err(Error::invalid_argument("dcbm.b must be a non-empty square matrix"));
    }
    if d.sizes.len() != k {
        return Err(Error::invalid_argument(format!(
            "dcbm.sizes has {} entries for {k} communities",
            d.sizes.len()
        )));
    }
    let b = DMatrix::from_fn(k, k, |i, j| d.b[i][j]);
    DcbmSpec::with_random_alphas(&d.sizes, b, d.alpha_range, derive_seed(cfg.seed, Stream::DcbmAlphas))
}

/// Samples a DCBM adjacency (or writes its mean) in SPKM format.
pub fn cmd_dcbm_sample(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<SparseSymmetric> {
    let output = required(&cfg.dcbm.output, "dcbm.output").stage("config")?;
    let spec = dcbm_spec(cfg).stage("dcbm_spec")?;
    if let Some(path) = &cfg.dcbm.spec_output {
        write_json(path, &spec).stage("write_spec")?;
    }
    let m = if cfg.dcbm.mean {
        SparseSymmetric::from_dense(&dcbm_mean(&spec), None).stage("dcbm_mean")?
    } else {
        sample_dcbm(&spec, derive_seed(cfg.seed, Stream::Dcbm)).stage("sample_dcbm")?
    };
    write_atomic(output, |w| m.write_spkm(w).map_err(|e| Error::io(output, e))).stage("write_matrix")?;
    writeln!(
        out,
        "n {}  communities {}  nnz {}  assortative {}",
        spec.n(),
        spec.num_communities(),
        m.nnz(),
        spec.is_assortative()
    )
    .map_err(io_err)?;
    Ok(m)
}

/// Factorizes a matrix (or synthesizes exact spikes), covers the embedding
/// and checks the spike rows against their DCBM prediction.
pub fn cmd_dcbm_verify(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<communities::TheoremReport> {
    let v = &cfg.verify;
    let spk_cfg = cfg.spk.spk_config().stage("config")?;
    let (fac, p) = match &v.matrix {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e)).stage("read_matrix")?;
            let m = SparseSymmetric::read_spkm(BufReader::new(file)).stage("read_matrix")?;
            let opts = SvdOptions {
                seed: derive_seed(cfg.seed, Stream::Factorize),
                ..SvdOptions::default()
            };
            let fac = if m.n() <= factorize::EXACT_MAX_N {
                factorize::exact_eig_sparse(&m, v.f)
            } else {
                truncated_svd(&m, v.f, opts)
            }
            .stage("factorize")?;
            (fac, v.p)
        }
        None => {
            let synth =
                synth_spiky_embeddings(&v.synth, derive_seed(cfg.seed, Stream::Synth)).stage("synthesize")?;
            (embedding_factorization(&synth.embeddings).stage("factorize")?, v.p)
        }
    };
    let e = embeddings(&fac, p).stage("embeddings")?;
    let cover = spike_cover(&e, &spk_cfg).stage("spike_cover")?;
    let report = communities::verify_theorem(&e, &cover, &fac, v.tolerance).stage("verify")?;
    if let Some(path) = &v.output {
        write_json(path, &report).stage("write_report")?;
    }
    writeln!(
        out,
        "spikes {}  spike rows {} of {}  max deviation {:.3e}  pass {}",
        report.num_spikes, report.n_prime, report.n, report.max_abs_deviation, report.pass
    )
    .map_err(io_err)?;
    Ok(report)
}

/// Norm-partitioned neighbourhood stability against a reference snapshot.
pub fn cmd_stability(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<crate::stability::StabilityReport> {
    let s = &cfg.stability;
    let reference_path = required(&s.reference, "stability.reference").stage("config")?;
    let reference = Embeddings::read_snapshot(reference_path).stage("read_snapshot")?;
    let snapshots = s
        .snapshots
        .iter()
        .map(Embeddings::read_snapshot)
        .collect::<Result<Vec<_>>>()
        .stage("read_snapshot")?;
    let report = stability_report(&reference, &snapshots, &cfg.stability_config()).stage("stability")?;
    if let Some(path) = &s.output_csv {
        write_atomic(path, |w| report.write_csv(w).map_err(|e| Error::io(path, e))).stage("write_report")?;
    }
    if let Some(path) = &s.output_json {
        write_json(path, &report).stage("write_report")?;
    }
    let mut stdout = Vec::new();
    report.write_csv(&mut stdout).map_err(io_err)?;
    out.write_all(&stdout).map_err(io_err)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct BaselineReport {
    pub n: usize,
    pub f: usize,
    pub seed: u64,
    pub spk: f64,
    pub num_spikes: usize,
    pub config: SpkConfig,
}

/// Spk of standard-normal embeddings.
pub fn cmd_baseline(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<BaselineReport> {
    let b = &cfg.baseline;
    let spk_cfg = cfg.spk.spk_config().stage("config")?;
    let seed = derive_seed(cfg.seed, Stream::Baseline);
    let e = spikes::gaussian_baseline(b.n, b.f, seed).stage("baseline")?;
    let cover = spike_cover(&e, &spk_cfg).stage("spike_cover")?;
    if let Some(path) = &b.snapshot {
        e.write_snapshot(path).stage("write_snapshot")?;
    }
    let report = BaselineReport {
        n: b.n,
        f: b.f,
        seed: cfg.seed,
        spk: cover.spk(),
        num_spikes: cover.num_spikes(),
        config: spk_cfg,
    };
    if let Some(path) = &b.output {
        write_json(path, &report).stage("write_report")?;
    }
    writeln!(out, "n {}  f {}  spikes {}  spk {:.6}", b.n, b.f, report.num_spikes, report.spk).map_err(io_err)?;
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "spiky", version, about = "Spike analysis for truncated-SVD embeddings")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, env = "SPIKY_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Print the merged configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[arg(long, env = "SPIKY_SEED", global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interactions TSV to embeddings snapshot.
    Pipeline(PipelineArgs),
    /// Spike cover and Spk of a snapshot.
    Spk(SpkArgs),
    /// Spk across snapshots of different dimension.
    Sweep(SweepArgs),
    /// Sample a DCBM adjacency matrix.
    DcbmSample(DcbmArgs),
    /// Check spike rows of a reconstruction against a DCBM mean.
    DcbmVerify(VerifyArgs),
    /// Top-k neighbourhood stability across snapshots.
    Stability(StabilityArgs),
    /// Spk of Gaussian embeddings.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct SpkFlags {
    #[arg(long, env = "SPIKY_COS_THETA")]
    cos_theta: Option<f64>,
    #[arg(long, env = "SPIKY_RHO")]
    rho: Option<f64>,
    #[arg(long, env = "SPIKY_MODE", value_parser = parse_mode)]
    mode: Option<CosineMode>,
}

fn parse_mode(s: &str) -> std::result::Result<CosineMode, String> {
    match s {
        "signed" => Ok(CosineMode::Signed),
        "absolute" => Ok(CosineMode::Absolute),
        _ => Err(format!("expected `signed` or `absolute`, got `{s}`")),
    }
}

fn parse_metric(s: &str) -> std::result::Result<Similarity, String> {
    match s {
        "cosine" => Ok(Similarity::Cosine),
        "dot" => Ok(Similarity::Dot),
        _ => Err(format!("expected `cosine` or `dot`, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, env = "SPIKY_INPUT")]
    input: Option<PathBuf>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    matrix_output: Option<PathBuf>,
    #[arg(long, env = "SPIKY_K_FILTER")]
    k_filter: Option<usize>,
    #[arg(long, env = "SPIKY_F")]
    f: Option<usize>,
    #[arg(long, env = "SPIKY_P")]
    p: Option<f64>,
    #[arg(long, env = "SPIKY_OVERSAMPLE")]
    oversample: Option<usize>,
    #[arg(long, env = "SPIKY_POWER_ITERS")]
    power_iters: Option<usize>,
    #[arg(long, env = "SPIKY_LABEL")]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct SpkArgs {
    #[arg(long, env = "SPIKY_INPUT")]
    input: Option<PathBuf>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    assignment: Option<PathBuf>,
    #[command(flatten)]
    spk: SpkFlags,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Snapshot files; replaces `sweep.inputs` when given.
    inputs: Vec<PathBuf>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[command(flatten)]
    spk: SpkFlags,
}

#[derive(Debug, Args)]
struct DcbmArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    spec_output: Option<PathBuf>,
    /// Write the expected adjacency instead of a sample.
    #[arg(long)]
    mean: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, env = "SPIKY_F")]
    f: Option<usize>,
    #[arg(long, env = "SPIKY_P")]
    p: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[command(flatten)]
    spk: SpkFlags,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Compared snapshots; replaces `stability.snapshots` when given.
    snapshots: Vec<PathBuf>,
    #[arg(long)]
    output_csv: Option<PathBuf>,
    #[arg(long)]
    output_json: Option<PathBuf>,
    #[arg(long, env = "SPIKY_TOP_K")]
    top_k: Option<usize>,
    #[arg(long)]
    num_partitions: Option<usize>,
    #[arg(long)]
    samples_per_partition: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    metrics: Option<Vec<Similarity>>,
    #[arg(long)]
    confidence: Option<f64>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, env = "SPIKY_N")]
    n: Option<usize>,
    #[arg(long, env = "SPIKY_F")]
    f: Option<usize>,
    #[arg(long, env = "SPIKY_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[command(flatten)]
    spk: SpkFlags,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn apply_spk(s: &mut SpkSection, flags: SpkFlags) {
    set(&mut s.cos_theta, flags.cos_theta);
    set(&mut s.rho, flags.rho);
    set(&mut s.mode, flags.mode);
}

fn apply(cfg: &mut RunConfig, command: Command) {
    match command {
        Command::Pipeline(a) => {
            let s = &mut cfg.pipeline;
            set_opt(&mut s.input, a.input);
            set_opt(&mut s.output, a.output);
            set_opt(&mut s.matrix_output, a.matrix_output);
            set(&mut s.k_filter, a.k_filter);
            set(&mut s.f, a.f);
            set(&mut s.p, a.p);
            set(&mut s.oversample, a.oversample);
            set(&mut s.power_iters, a.power_iters);
            set_opt(&mut s.label, a.label);
        }
        Command::Spk(a) => {
            set_opt(&mut cfg.spk.input, a.input);
            set_opt(&mut cfg.spk.output, a.output);
            set_opt(&mut cfg.spk.assignment, a.assignment);
            apply_spk(&mut cfg.spk, a.spk);
        }
        Command::Sweep(a) => {
            if !a.inputs.is_empty() {
                cfg.sweep.inputs = a.inputs;
            }
            set_opt(&mut cfg.sweep.output, a.output);
            apply_spk(&mut cfg.spk, a.spk);
        }
        Command::DcbmSample(a) => {
            set_opt(&mut cfg.dcbm.spec, a.spec);
            set_opt(&mut cfg.dcbm.output, a.output);
            set_opt(&mut cfg.dcbm.spec_output, a.spec_output);
            cfg.dcbm.mean |= a.mean;
        }
        Command::DcbmVerify(a) => {
            set_opt(&mut cfg.verify.matrix, a.matrix);
            set(&mut cfg.verify.f, a.f);
            set(&mut cfg.verify.p, a.p);
            set(&mut cfg.verify.tolerance, a.tolerance);
            set_opt(&mut cfg.verify.output, a.output);
            apply_spk(&mut cfg.spk, a.spk);
        }
        Command::Stability(a) => {
            let s = &mut cfg.stability;
            set_opt(&mut s.reference, a.reference);
            if !a.snapshots.is_empty() {
                s.snapshots = a.snapshots;
            }
            set_opt(&mut s.output_csv, a.output_csv);
            set_opt(&mut s.output_json, a.output_json);
            set(&mut s.top_k, a.top_k);
            set(&mut s.num_partitions, a.num_partitions);
            set(&mut s.samples_per_partition, a.samples_per_partition);
            set(&mut s.metrics, a.metrics);
            set(&mut s.confidence, a.confidence);
        }
        Command::Baseline(a) => {
            set(&mut cfg.baseline.n, a.n);
            set(&mut cfg.baseline.f, a.f);
            set_opt(&mut cfg.baseline.output, a.output);
            set_opt(&mut cfg.baseline.snapshot, a.snapshot);
            apply_spk(&mut cfg.spk, a.spk);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    Pipeline,
    Spk,
    Sweep,
    DcbmSample,
    DcbmVerify,
    Stability,
    Baseline,
}

fn which(command: &Command) -> Which {
    match command {
        Command::Pipeline(_) => Which::Pipeline,
        Command::Spk(_) => Which::Spk,
        Command::Sweep(_) => Which::Sweep,
        Command::DcbmSample(_) => Which::DcbmSample,
        Command::DcbmVerify(_) => Which::DcbmVerify,
        Command::Stability(_) => Which::Stability,
        Command::Baseline(_) => Which::Baseline,
    }
}

/// Parses `args` (program name first), merges the configuration and runs the
/// selected subcommand, writing human-readable output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).stage("config")?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    let selected = which(&cli.command);
    apply(&mut cfg, cli.command);
    cfg.validate().stage("config")?;

    if cli.dump_config {
        let text = cfg.to_toml().stage("config")?;
        return out.write_all(text.as_bytes()).map_err(io_err);
    }
    match selected {
        Which::Pipeline => cmd_pipeline(&cfg, out).map(drop),
        Which::Spk => cmd_spk(&cfg, out).map(drop),
        Which::Sweep => cmd_sweep(&cfg, out).map(drop),
        Which::DcbmSample => cmd_dcbm_sample(&cfg, out).map(drop),
        Which::DcbmVerify => cmd_dcbm_verify(&cfg, out).map(drop),
        Which::Stability => cmd_stability(&cfg, out).map(drop),
        Which::Baseline => cmd_baseline(&cfg, out).map(drop),
    }
}

/// Entry point of the binary: runs with the process arguments and returns
/// the exit code.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(std::env::args_os(), &mut lock) {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
        Err(e) => {
            eprintln!("spiky: {e}");
            e.exit_code()
        }
    }
}
