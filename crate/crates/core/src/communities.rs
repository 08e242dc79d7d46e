//! Block-model generators and the spike ⇒ DCBM check.
//!
//! If the rows of `E = UΣ^p` that belong to spikes are `e_i = α_i s_{C(i)}`,
//! then on those rows the reconstruction satisfies
//! `M̂_ij = α_i α_j ⟨s_{C(i)}, s'_{C(j)}⟩` with
//! `s'_l = s_l · diag(σ^{1−2p} · sign(D))`, so `|M̂|` restricted to spike rows
//! is a degree-corrected block model mean with `B_kl = |⟨s_k, s'_l⟩|`.
//! [`verify_theorem`] measures how far an actual reconstruction is from that
//! prediction.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{self, reconstruct, Embeddings, Factorization};
use crate::ingest::SparseSymmetric;
use crate::seed;
use crate::spikes::SpikeCover;

/// Degree-corrected block model parameters.
///
/// Community labels are 1-based (`1..=K`), as in the JSON form
/// `{"partition": [...], "b": [[...]], "alphas": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DcbmSpecJson", into = "DcbmSpecJson")]
pub struct DcbmSpec {
    partition: Vec<usize>,
    b: DMatrix<f64>,
    alphas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DcbmSpecJson {
    partition: Vec<usize>,
    b: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

impl TryFrom<DcbmSpecJson> for DcbmSpec {
    type Error = Error;

    fn try_from(raw: DcbmSpecJson) -> Result<Self> {
        let k = raw.b.len();
        if raw.b.iter().any(|r| r.len() != k) {
            return Err(Error::invalid_input("b must be a square matrix"));
        }
        let b = DMatrix::from_fn(k, k, |i, j| raw.b[i][j]);
        DcbmSpec::new(raw.partition, b, raw.alphas)
    }
}

impl From<DcbmSpec> for DcbmSpecJson {
    fn from(spec: DcbmSpec) -> Self {
        let k = spec.b.nrows();
        DcbmSpecJson {
            b: (0..k).map(|i| (0..k).map(|j| spec.b[(i, j)]).collect()).collect(),
            partition: spec.partition,
            alphas: spec.alphas,
        }
    }
}

fn validate_blocks(partition: &[usize], b: &DMatrix<f64>) -> Result<()> {
    if !b.is_square() || b.nrows() == 0 {
        return Err(Error::invalid_input("b must be a non-empty square matrix"));
    }
    let k = b.nrows();
    for i in 0..k {
        for j in 0..k {
            let v = b[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_input(format!("b[{i}][{j}] = {v} is outside [0, 1]")));
            }
            if v != b[(j, i)] {
                return Err(Error::invalid_input(format!("b is not symmetric at ({i}, {j})")));
            }
        }
    }
    if let Some((node, &label)) = partition
        .iter()
        .enumerate()
        .find(|(_, &c)| c == 0 || c > k)
    {
        return Err(Error::invalid_input(format!(
            "node {node} has label {label}, expected 1..={k}"
        )));
    }
    Ok(())
}

impl DcbmSpec {
    /// Validates labels in `1..=K`, a symmetric `b` in `[0, 1]` with unit
    /// diagonal, and `alphas` in `[0, 1]`.
    pub fn new(partition: Vec<usize>, b: DMatrix<f64>, alphas: Vec<f64>) -> Result<Self> {
        validate_blocks(&partition, &b)?;
        if alphas.len() != partition.len() {
            return Err(Error::invalid_input(format!(
                "{} alphas for {} nodes",
                alphas.len(),
                partition.len()
            )));
        }
        if let Some((i, a)) = alphas.iter().enumerate().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid_input(format!("alpha[{i}] = {a} is outside [0, 1]")));
        }
        if let Some(k) = (0..b.nrows()).find(|&k| (b[(k, k)] - 1.0).abs() > 1e-12) {
            return Err(Error::invalid_input(format!(
                "b must have a unit diagonal, b[{k}][{k}] = {}",
                b[(k, k)]
            )));
        }
        Ok(DcbmSpec {
            partition,
            b,
            alphas,
        })
    }

    /// Contiguous communities of the given sizes with `α ~ U[lo, hi]`.
    pub fn with_random_alphas(
        sizes: &[usize],
        b: DMatrix<f64>,
        alpha_range: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        let (lo, hi) = alpha_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid_argument(format!(
                "alpha range ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        let mut rng = seed::rng(seed);
        let partition: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k + 1, s))
            .collect();
        let alphas = partition
            .iter()
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        DcbmSpec::new(partition, b, alphas)
    }

    pub fn n(&self) -> usize {
        self.partition.len()
    }

    pub fn num_communities(&self) -> usize {
        self.b.nrows()
    }

    /// 1-based labels.
    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    /// 0-based community of node `i`.
    pub fn community(&self, i: usize) -> usize {
        self.partition[i] - 1
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `b_kk > b_kl` for every `l ≠ k`.
    pub fn is_assortative(&self) -> bool {
        let k = self.b.nrows();
        (0..k).all(|i| (0..k).all(|j| i == j || self.b[(i, i)] > self.b[(i, j)]))
    }
}

/// One uniform draw per pair `i < j`, row-major, so that models with equal
/// edge probabilities produce identical graphs from the same seed.
fn sample_edges(n: usize, prob: impl Fn(usize, usize) -> f64, seed: u64) -> Result<SparseSymmetric> {
    let mut rng = seed::rng(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = prob(i, j);
            debug_assert!((0.0..=1.0).contains(&p), "edge probability {p} out of range");
            if rng.random::<f64>() < p {
                entries.push((i, j, 1.0));
            }
        }
    }
    SparseSymmetric::from_triplets(n, entries, None)
}

/// Stochastic block model adjacency: `A_ij ~ Bernoulli(b[C(i)][C(j)])` for
/// `i < j`, zero diagonal. Labels are 1-based.
pub fn sample_sbm(partition: &[usize], b: &DMatrix<f64>, seed: u64) -> Result<SparseSymmetric> {
    validate_blocks(partition, b)?;
    sample_edges(
        partition.len(),
        |i, j| b[(partition[i] - 1, partition[j] - 1)],
        seed,
    )
}

/// DCBM adjacency: edge `(i, j)` with probability `α_i α_j b[C(i)][C(j)]`.
pub fn sample_dcbm(spec: &DcbmSpec, seed: u64) -> Result<SparseSymmetric> {
    sample_edges(spec.n(), |i, j| edge_probability(spec, i, j), seed)
}

fn edge_probability(spec: &DcbmSpec, i: usize, j: usize) -> f64 {
    spec.alphas[i] * spec.alphas[j] * spec.b[(spec.community(i), spec.community(j))]
}

/// Dense DCBM mean, diagonal included: `α_i α_j b[C(i)][C(j)]`.
pub fn dcbm_mean(spec: &DcbmSpec) -> DMatrix<f64> {
    let n = spec.n();
    DMatrix::from_fn(n, n, |i, j| edge_probability(spec, i, j))
}

/// Parameters of a synthetic embedding made of exact spikes plus a cloud of
/// low-norm isotropic noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub num_spikes: usize,
    pub sizes: Vec<usize>,
    pub alpha_range: (f64, f64),
    pub noise_count: usize,
    pub noise_scale: f64,
    pub f: usize,
}

impl SynthConfig {
    /// Three spikes of 200 points and 400 noise rows (n = 1000).
    pub fn three_spikes() -> Self {
        SynthConfig {
            num_spikes: 3,
            sizes: vec![200; 3],
            alpha_range: (0.3, 1.0),
            noise_count: 400,
            noise_scale: 0.5,
            f: 16,
        }
    }
}

/// Synthetic spikes with their ground truth.
#[derive(Debug, Clone)]
pub struct SynthSpikes {
    pub embeddings: Embeddings,
    /// Spike of each row, `None` for noise rows.
    pub labels: Vec<Option<usize>>,
    /// Distance from the origin of each row.
    pub alphas: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

const MAX_DIRECTION_COS: f64 = 0.8;

fn random_unit(f: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..f).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Spike rows first (`α · s_k`, `α ~ U[alpha_range]`), then `noise_count`
/// isotropic rows with norm below `min(alpha_range) · noise_scale`.
/// Spike directions are rejection-sampled to pairwise `|cos| < 0.8`.
pub fn synth_spiky_embeddings(cfg: &SynthConfig, seed: u64) -> Result<SynthSpikes> {
    let k = cfg.num_spikes;
    if k == 0 {
        return Err(Error::invalid_argument("need at least one spike"));
    }
    if cfg.f < k {
        return Err(Error::invalid_argument(format!(
            "f = {} cannot host {k} independent spike directions",
            cfg.f
        )));
    }
    if cfg.sizes.len() != k {
        return Err(Error::invalid_argument(format!(
            "{} spike sizes for {k} spikes",
            cfg.sizes.len()
        )));
    }
    let (lo, hi) = cfg.alpha_range;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::invalid_argument(format!(
            "alpha range ({lo}, {hi}) must lie in (0, 1]"
        )));
    }
    if !(cfg.noise_scale > 0.0 && cfg.noise_scale < 1.0) {
        return Err(Error::invalid_argument("noise_scale must lie in (0, 1)"));
    }

    let mut rng = seed::rng(seed);
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    while directions.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Numeric(format!(
                "could not draw {k} directions in dimension {} with pairwise |cos| < {MAX_DIRECTION_COS}",
                cfg.f
            )));
        }
        let cand = random_unit(cfg.f, &mut rng);
        let separated = directions.iter().all(|d| {
            let c: f64 = d.iter().zip(&cand).map(|(a, b)| a * b).sum();
            c.abs() < MAX_DIRECTION_COS
        });
        if separated {
            directions.push(cand);
        }
    }

    let n = cfg.sizes.iter().sum::<usize>() + cfg.noise_count;
    let mut data = Vec::with_capacity(n * cfg.f);
    let mut labels = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for (s, (dir, &size)) in directions.iter().zip(&cfg.sizes).enumerate() {
        for _ in 0..size {
            let alpha = lo + (hi - lo) * rng.random::<f64>();
            data.extend(dir.iter().map(|x| alpha * x));
            labels.push(Some(s));
            alphas.push(alpha);
        }
    }
    let noise_cap = lo * cfg.noise_scale;
    for _ in 0..cfg.noise_count {
        let dir = random_unit(cfg.f, &mut rng);
        let radius = noise_cap * (1.0 - rng.random::<f64>()) * (1.0 - 1e-12);
        data.extend(dir.iter().map(|x| radius * x));
        labels.push(None);
        alphas.push(radius);
    }

    let embeddings = Embeddings::from_matrix(DMatrix::from_row_slice(n, cfg.f, &data))?;
    Ok(SynthSpikes {
        embeddings,
        labels,
        alphas,
        directions,
    })
}

/// A factorization whose `UΣ` is an isometric copy of the rows of `e`.
///
/// With the thin SVD `e = W S Zᵀ`, this returns `U = W`, `Σ = S` and positive
/// signs, so `embeddings(fac, 1) = e · Z`: pairwise angles and norms of the
/// rows are preserved. Directions below the numerical rank
/// (`max(n, f) · ε · s_max`) are dropped.
pub fn embedding_factorization(e: &Embeddings) -> Result<Factorization> {
    let x = e.matrix();
    let svd = x.clone().svd(true, false);
    let w = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = svd.singular_values[order[0]];
    if top == 0.0 {
        return Err(Error::invalid_input("embeddings are all zero"));
    }
    let cutoff = x.nrows().max(x.ncols()) as f64 * f64::EPSILON * top;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    let mut u = DMatrix::zeros(x.nrows(), kept.len());
    for (c, &i) in kept.iter().enumerate() {
        u.set_column(c, &w.column(i));
    }
    let sigma: Vec<f64> = kept.iter().map(|&i| svd.singular_values[i]).collect();
    factorize::assemble(u, &sigma, e.row_ids().to_vec())
}

/// Outcome of comparing `|M̂|` on spike rows with its DCBM prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// `B_kl = |⟨s_k, s'_l⟩|`.
    pub b_estimate: Vec<Vec<f64>>,
    /// Largest norm among spike rows; `α_i / alpha_max` lies in `[0, 1]`.
    pub alpha_max: f64,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    /// `max_abs_deviation` over the largest `|M̂_ij|` on spike rows.
    pub relative_max_deviation: f64,
    /// Most negative off-diagonal entry of `M̂` on spike rows (0 if none).
    pub most_negative_entry: f64,
    pub negative_fraction: f64,
    pub n_prime: usize,
    pub n: usize,
    pub num_spikes: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl TheoremReport {
    /// `B_kl / sqrt(B_kk · B_ll)`, the unit-diagonal form of the block matrix.
    pub fn normalized_b(&self) -> Vec<Vec<f64>> {
        let b = &self.b_estimate;
        (0..b.len())
            .map(|k| {
                (0..b.len())
                    .map(|l| b[k][l] / (b[k][k] * b[l][l]).sqrt())
                    .collect()
            })
            .collect()
    }
}

/// Compares `|M̂_ij|` with `α_i α_j B_{C(i), C(j)}` on all off-diagonal pairs
/// of spike rows. Passes when the largest absolute deviation is within
/// `tolerance`.
pub fn verify_theorem(
    e: &Embeddings,
    cover: &SpikeCover,
    fac: &Factorization,
    tolerance: f64,
) -> Result<TheoremReport> {
    if e.n() != fac.n() || e.dim() != fac.f() || cover.n() != e.n() {
        return Err(Error::invalid_input(format!(
            "inconsistent shapes: embeddings {}x{}, factorization {}x{}, cover over {} rows",
            e.n(),
            e.dim(),
            fac.n(),
            fac.f(),
            cover.n()
        )));
    }
    let members = cover.assigned_rows();
    if members.is_empty() || cover.num_spikes() == 0 {
        return Err(Error::invalid_input("the cover has no spike members"));
    }
    let m_hat = reconstruct(fac)?;

    let p = e.p();
    let weights: Vec<f64> = fac
        .sigma()
        .iter()
        .zip(fac.signs())
        .map(|(&s, &g)| if s == 0.0 { 0.0 } else { s.powf(1.0 - 2.0 * p) * f64::from(g) })
        .collect();
    let dirs = cover.directions();
    let k = dirs.len();
    let mut b = vec![vec![0.0; k]; k];
    for (a, sa) in dirs.iter().enumerate() {
        for (c, sc) in dirs.iter().enumerate() {
            let dot: f64 = sa.iter().zip(sc).zip(&weights).map(|((x, y), w)| x * y * w).sum();
            b[a][c] = dot.abs();
        }
    }

    let alphas = cover.alphas();
    let labels: Vec<usize> = members
        .iter()
        .map(|&i| cover.assignment()[i].expect("member is assigned"))
        .collect();
    let (mut max_dev, mut sum_dev, mut max_abs) = (0.0f64, 0.0f64, 0.0f64);
    let (mut most_negative, mut negatives, mut pairs) = (0.0f64, 0usize, 0usize);
    for (a, &i) in members.iter().enumerate() {
        for (c, &j) in members.iter().enumerate() {
            if i == j {
                continue;
            }
            let actual = m_hat[(i, j)];
            let predicted = alphas[i] * alphas[j] * b[labels[a]][labels[c]];
            let dev = (actual.abs() - predicted).abs();
            max_dev = max_dev.max(dev);
            sum_dev += dev;
            max_abs = max_abs.max(actual.abs());
            if actual < 0.0 {
                negatives += 1;
                most_negative = most_negative.min(actual);
            }
            pairs += 1;
        }
    }
    let mean_dev = if pairs > 0 { sum_dev / pairs as f64 } else { 0.0 };
    let alpha_max = members.iter().map(|&i| alphas[i]).fold(0.0, f64::max);

    Ok(TheoremReport {
        b_estimate: b,
        alpha_max,
        max_abs_deviation: max_dev,
        mean_abs_deviation: mean_dev,
        relative_max_deviation: if max_abs > 0.0 { max_dev / max_abs } else { 0.0 },
        most_negative_entry: most_negative,
        negative_fraction: if pairs > 0 { negatives as f64 / pairs as f64 } else { 0.0 },
        n_prime: members.len(),
        n: e.n(),
        num_spikes: k,
        tolerance,
        pass: max_dev <= tolerance,
    })
}

/// Degree parameters of spike rows, `‖e_i‖ / max_j ‖e_j‖` over spike rows.
/// Rows outside every spike get `None`.
pub fn recover_alphas(cover: &SpikeCover) -> Vec<Option<f64>> {
    let alpha_max = cover
        .assigned_rows()
        .iter()
        .map(|&i| cover.alphas()[i])
        .fold(0.0, f64::max);
    cover
        .assignment()
        .iter()
        .zip(cover.alphas())
        .map(|(a, &alpha)| a.map(|_| alpha / alpha_max))
        .collect()
}

/// Fraction of `rows` whose spike's majority ground-truth community equals
/// their own community. Uncovered rows count as errors.
pub fn community_accuracy(cover: &SpikeCover, truth: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    let num_truth = truth.iter().copied().max().map_or(0, |m| m + 1);
    let mut votes = vec![vec![0usize; num_truth]; cover.num_spikes()];
    for &i in rows {
        if let Some(k) = cover.assignment()[i] {
            votes[k][truth[i]] += 1;
        }
    }
    let majority: Vec<usize> = votes
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map_or(0, |(c, _)| c)
        })
        .collect();
    let correct = rows
        .iter()
        .filter(|&&i| cover.assignment()[i].is_some_and(|k| majority[k] == truth[i]))
        .count();
    correct as f64 / rows.len() as f64
}

/// Smallest per-community Pearson correlation between recovered and true
/// degree parameters, over rows assigned to a spike.
///
/// The DCBM fixes `α` only up to one positive factor per community (that
/// factor moves into `B`), so agreement is measured within communities.
pub fn within_community_correlation(
    recovered: &[Option<f64>],
    truth_alphas: &[f64],
    truth_labels: &[usize],
) -> f64 {
    let num = truth_labels.iter().copied().max().map_or(0, |m| m + 1);
    (0..num)
        .filter_map(|c| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = recovered
                .iter()
                .zip(truth_alphas)
                .zip(truth_labels)
                .filter_map(|((r, &t), &l)| (l == c).then_some((*r)?).map(|r| (r, t)))
                .unzip();
            (xs.len() >= 2).then(|| crate::stats::pearson(&xs, &ys))
        })
        .fold(f64::INFINITY, f64::min)
}
