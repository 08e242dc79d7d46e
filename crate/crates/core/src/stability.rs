//! Stability of top-k neighbourhoods across embedding snapshots.
//!
//! The reference snapshot is split into norm partitions; in each partition a
//! seeded sample of query rows retrieves its top-k neighbours among the
//! partition's other members, once in the reference and once in every
//! compared snapshot, and the two id sets are compared with the Jaccard
//! index. All joins are by item id, so row order in a snapshot is irrelevant.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::io::Write;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::factorize::Embeddings;
use crate::seed;
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Cosine,
    Dot,
}

impl Similarity {
    pub fn name(self) -> &'static str {
        match self {
            Similarity::Cosine => "cosine",
            Similarity::Dot => "dot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub top_k: usize,
    pub num_partitions: usize,
    pub samples_per_partition: usize,
    pub metrics: Vec<Similarity>,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            top_k: 500,
            num_partitions: 5,
            samples_per_partition: 1000,
            metrics: vec![Similarity::Cosine, Similarity::Dot],
            seed: 0,
            confidence: 0.95,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::invalid_argument("top_k must be at least 1"));
        }
        if self.num_partitions == 0 {
            return Err(Error::invalid_argument("num_partitions must be at least 1"));
        }
        if self.samples_per_partition == 0 {
            return Err(Error::invalid_argument("samples_per_partition must be at least 1"));
        }
        if self.metrics.is_empty() {
            return Err(Error::invalid_argument("at least one similarity metric is required"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid_argument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Two-sided normal quantile for `confidence`.
    pub fn z(&self) -> f64 {
        let normal = Normal::standard();
        normal.inverse_cdf(0.5 + self.confidence / 2.0)
    }
}

/// Partition label of each row: rows sorted by norm ascending (ties by
/// index) and cut into `num_partitions` contiguous groups. The first
/// `n mod num_partitions` groups get one extra row.
pub fn norm_partition(e: &Embeddings, num_partitions: usize) -> Result<Vec<usize>> {
    partition_by_norm(&e.norms(), num_partitions)
}

fn partition_by_norm(norms: &[f64], num_partitions: usize) -> Result<Vec<usize>> {
    let n = norms.len();
    if n == 0 {
        return Err(Error::invalid_input("cannot partition empty embeddings"));
    }
    if num_partitions == 0 || num_partitions > n {
        return Err(Error::invalid_argument(format!(
            "cannot split {n} rows into {num_partitions} partitions"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    let (base, extra) = (n / num_partitions, n % num_partitions);
    let mut labels = vec![0; n];
    let mut pos = 0;
    for part in 0..num_partitions {
        let size = base + usize::from(part < extra);
        for &row in &order[pos..pos + size] {
            labels[row] = part;
        }
        pos += size;
    }
    Ok(labels)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major rows with their norms.
struct Rows<'a> {
    data: &'a [f64],
    dim: usize,
    norms: &'a [f64],
}

impl Rows<'_> {
    fn get(&self, c: usize) -> &[f64] {
        &self.data[c * self.dim..(c + 1) * self.dim]
    }

    /// Top `k` of `candidates` by similarity to row `query`, ties to the
    /// lower index.
    fn topk(&self, query: usize, candidates: impl Iterator<Item = usize>, k: usize, metric: Similarity) -> Vec<usize> {
        let q = self.get(query);
        let qn = self.norms[query];
        let mut scored: Vec<(f64, usize)> = candidates
            .filter_map(|c| {
                let s = match metric {
                    Similarity::Dot => dot(q, self.get(c)),
                    Similarity::Cosine if self.norms[c] == 0.0 => return None,
                    Similarity::Cosine => dot(q, self.get(c)) / (qn * self.norms[c]),
                };
                Some((s, c))
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if scored.len() > k {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(_, c)| c).collect()
    }
}

/// Top-`k` rows of `candidates` most similar to row `query`, best first.
/// The query itself is never returned; ties go to the lower row index and
/// zero-norm candidates are skipped under cosine.
pub fn topk_similar(
    e: &Embeddings,
    query: usize,
    k: usize,
    metric: Similarity,
    candidates: &[usize],
) -> Result<Vec<usize>> {
    if query >= e.n() {
        return Err(Error::invalid_argument(format!("query row {query} out of range")));
    }
    if let Some(&c) = candidates.iter().find(|&&c| c >= e.n()) {
        return Err(Error::invalid_argument(format!("candidate row {c} out of range")));
    }
    let pool = candidates.iter().filter(|&&c| c != query).count();
    if k == 0 || k > pool {
        return Err(Error::invalid_argument(format!(
            "k = {k} needs 1..={pool} candidates besides the query"
        )));
    }
    let norms = e.norms();
    if metric == Similarity::Cosine && norms[query] == 0.0 {
        return Err(Error::invalid_input(format!("row {query} has zero norm under cosine")));
    }
    let data = e.rows_flat();
    let rows = Rows {
        data: &data,
        dim: e.dim(),
        norms: &norms,
    };
    Ok(rows.topk(query, candidates.iter().copied().filter(|&c| c != query), k, metric))
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard<T: Eq + Hash>(a: &[T], b: &[T]) -> f64 {
    let a: HashSet<&T> = a.iter().collect();
    let b: HashSet<&T> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Norm range and size of one reference partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionBounds {
    pub partition: usize,
    pub min_norm: f64,
    pub max_norm: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub partition: usize,
    /// 0 is the reference compared with itself.
    pub snapshot: usize,
    pub snapshot_label: String,
    pub metric: Similarity,
    pub mean_jaccard: f64,
    pub ci_halfwidth: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Snapshot labels in comparison order, reference first.
    pub snapshot_labels: Vec<String>,
    pub partitions: Vec<PartitionBounds>,
    pub rows: Vec<StabilityRow>,
    pub common_items: usize,
    pub top_k: usize,
    pub confidence: f64,
}

impl StabilityReport {
    pub fn get(&self, partition: usize, snapshot: usize, metric: Similarity) -> Option<&StabilityRow> {
        self.rows
            .iter()
            .find(|r| r.partition == partition && r.snapshot == snapshot && r.metric == metric)
    }

    /// Mean Jaccard per partition for one snapshot and metric.
    pub fn curve(&self, snapshot: usize, metric: Similarity) -> Vec<f64> {
        (0..self.partitions.len())
            .filter_map(|p| self.get(p, snapshot, metric).map(|r| r.mean_jaccard))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "partition,snapshot_label,metric,mean_jaccard,ci_halfwidth,n_samples")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.partition,
                r.snapshot_label,
                r.metric.name(),
                r.mean_jaccard,
                r.ci_halfwidth,
                r.n_samples
            )?;
        }
        Ok(())
    }
}

fn snapshot_label(e: &Embeddings, index: usize) -> String {
    match e.label() {
        Some(l) => l.to_string(),
        None if index == 0 => "reference".to_string(),
        None => format!("snapshot{index}"),
    }
}

/// Common items of one snapshot, in the reference's common order.
struct Aligned {
    data: Vec<f64>,
    dim: usize,
    norms: Vec<f64>,
}

impl Aligned {
    fn rows(&self) -> Rows<'_> {
        Rows {
            data: &self.data,
            dim: self.dim,
            norms: &self.norms,
        }
    }
}

/// Compares `snapshots` with `reference`, partition by partition.
///
/// Only items present in every snapshot with nonzero norm take part. The
/// report's snapshot 0 is the reference against itself, so the compared
/// snapshots are numbered from 1.
pub fn stability_report(
    reference: &Embeddings,
    snapshots: &[Embeddings],
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    cfg.validate()?;
    let all: Vec<&Embeddings> = std::iter::once(reference).chain(snapshots).collect();
    let index: Vec<HashMap<&str, usize>> = all
        .iter()
        .map(|e| e.row_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect())
        .collect();
    let norms: Vec<Vec<f64>> = all.iter().map(|e| e.norms()).collect();

    let common: Vec<usize> = (0..reference.n())
        .filter(|&r| {
            let id = reference.row_ids()[r].as_str();
            index.iter().zip(&norms).all(|(ix, ns)| ix.get(id).is_some_and(|&i| ns[i] > 0.0))
        })
        .collect();
    let aligned: Vec<Aligned> = all
        .iter()
        .zip(&index)
        .zip(&norms)
        .map(|((e, ix), ns)| {
            let rows: Vec<usize> = common.iter().map(|&r| ix[reference.row_ids()[r].as_str()]).collect();
            let mut data = Vec::with_capacity(rows.len() * e.dim());
            for &i in &rows {
                data.extend(e.matrix().row(i).iter());
            }
            Aligned {
                data,
                dim: e.dim(),
                norms: rows.iter().map(|&i| ns[i]).collect(),
            }
        })
        .collect();

    let ref_norms = &aligned[0].norms;
    if common.len() < cfg.num_partitions {
        return Err(Error::invalid_input(format!(
            "only {} common items for {} partitions",
            common.len(),
            cfg.num_partitions
        )));
    }
    let labels = partition_by_norm(ref_norms, cfg.num_partitions)?;
    let mut members = vec![Vec::new(); cfg.num_partitions];
    for (c, &l) in labels.iter().enumerate() {
        members[l].push(c);
    }
    for (p, m) in members.iter().enumerate() {
        if m.len() < cfg.top_k + 1 {
            return Err(Error::invalid_input(format!(
                "partition {p} has {} common items, top_k = {} needs at least {}",
                m.len(),
                cfg.top_k,
                cfg.top_k + 1
            )));
        }
    }
    let partitions = members
        .iter()
        .enumerate()
        .map(|(p, m)| PartitionBounds {
            partition: p,
            min_norm: m.iter().map(|&c| ref_norms[c]).fold(f64::INFINITY, f64::min),
            max_norm: m.iter().map(|&c| ref_norms[c]).fold(0.0, f64::max),
            size: m.len(),
        })
        .collect();

    let snapshot_labels: Vec<String> = all.iter().enumerate().map(|(i, e)| snapshot_label(e, i)).collect();
    let z = cfg.z();
    let mut rng = seed::rng(cfg.seed);
    let mut rows = Vec::new();
    for (p, m) in members.iter().enumerate() {
        let count = cfg.samples_per_partition.min(m.len());
        let mut queries: Vec<usize> = index::sample(&mut rng, m.len(), count)
            .into_iter()
            .map(|i| m[i])
            .collect();
        queries.sort_unstable();
        for &metric in &cfg.metrics {
            let topk = |view: &Aligned, q: usize| {
                view.rows().topk(q, m.iter().copied().filter(|&c| c != q), cfg.top_k, metric)
            };
            let reference_sets: Vec<Vec<usize>> = queries.iter().map(|&q| topk(&aligned[0], q)).collect();
            for (s, view) in aligned.iter().enumerate() {
                let scores: Vec<f64> = queries
                    .iter()
                    .zip(&reference_sets)
                    .map(|(&q, base)| if s == 0 { 1.0 } else { jaccard(base, &topk(view, q)) })
                    .collect();
                let sd = sample_std(&scores);
                rows.push(StabilityRow {
                    partition: p,
                    snapshot: s,
                    snapshot_label: snapshot_labels[s].clone(),
                    metric,
                    mean_jaccard: mean(&scores),
                    ci_halfwidth: z * sd / (scores.len() as f64).sqrt(),
                    n_samples: scores.len(),
                });
            }
        }
    }

    Ok(StabilityReport {
        snapshot_labels,
        partitions,
        rows,
        common_items: common.len(),
        top_k: cfg.top_k,
        confidence: cfg.confidence,
    })
}
