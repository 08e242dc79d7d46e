//! Greedy detection of spike formations and the `Spk` ratio.
//!
//! Peaks are taken in descending order of norm among rows not yet covered;
//! each peak claims every uncovered row whose cosine with it exceeds
//! `cos_theta`. The loop stops once a fraction `rho` of the nonzero rows is
//! covered, and `Spk = peaks / n`. A single spike gives `Spk = 1/n`; when no
//! two rows are within the angle every peak covers only itself and
//! `Spk ≈ rho`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::factorize::Embeddings;
use crate::seed;

/// How the cosine between a peak and a candidate is compared to the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CosineMode {
    /// `cos > cos_theta`; antipodal rows belong to different spikes.
    #[default]
    Signed,
    /// `|cos| > cos_theta`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpkConfig {
    pub cos_theta: f64,
    pub rho: f64,
    #[serde(default)]
    pub mode: CosineMode,
}

impl Default for SpkConfig {
    fn default() -> Self {
        SpkConfig {
            cos_theta: 0.9,
            rho: 0.5,
            mode: CosineMode::Signed,
        }
    }
}

impl SpkConfig {
    pub fn new(cos_theta: f64, rho: f64) -> Result<Self> {
        let cfg = SpkConfig {
            cos_theta,
            rho,
            mode: CosineMode::Signed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: CosineMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cos_theta > 0.0 && self.cos_theta < 1.0) {
            return Err(Error::invalid_argument(format!(
                "cos_theta = {} must lie in (0, 1)",
                self.cos_theta
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::invalid_argument(format!(
                "rho = {} must lie in (0, 1]",
                self.rho
            )));
        }
        Ok(())
    }

    fn accepts(&self, cos: f64) -> bool {
        match self.mode {
            CosineMode::Signed => cos > self.cos_theta,
            CosineMode::Absolute => cos.abs() > self.cos_theta,
        }
    }
}

/// Result of the greedy cover.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeCover {
    peaks: Vec<usize>,
    assignment: Vec<Option<usize>>,
    alphas: Vec<f64>,
    directions: Vec<Vec<f64>>,
    covered_count: usize,
    countable: usize,
    spk: f64,
    config: SpkConfig,
}

impl SpikeCover {
    /// Peak rows, in selection order (non-increasing norm).
    pub fn peaks(&self) -> &[usize] {
        &self.peaks
    }

    /// Spike index of each row, `None` for rows left uncovered.
    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Euclidean norm of every row.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Unit direction of every spike (its peak, normalized).
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn num_spikes(&self) -> usize {
        self.peaks.len()
    }

    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    /// Rows with nonzero norm, the denominator of the coverage target.
    pub fn countable(&self) -> usize {
        self.countable
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn spk(&self) -> f64 {
        self.spk
    }

    pub fn config(&self) -> &SpkConfig {
        &self.config
    }

    /// Rows assigned to spike `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| (*a == Some(k)).then_some(i))
            .collect()
    }

    /// Rows assigned to any spike, ascending.
    pub fn assigned_rows(&self) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|_| i))
            .collect()
    }

    pub fn spike_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.peaks.len()];
        for k in self.assignment.iter().flatten() {
            sizes[*k] += 1;
        }
        sizes
    }

    /// `size → number of spikes of that size`.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for s in self.spike_sizes() {
            *hist.entry(s).or_insert(0) += 1;
        }
        hist
    }

    pub fn to_json(&self, row_ids: &[String]) -> serde_json::Value {
        let peaks: Vec<_> = self
            .peaks
            .iter()
            .map(|&p| json!({"row_id": row_ids[p], "norm": self.alphas[p]}))
            .collect();
        let histogram: Vec<_> = self
            .size_histogram()
            .into_iter()
            .map(|(size, count)| json!({"size": size, "count": count}))
            .collect();
        json!({
            "config": self.config,
            "n": self.n(),
            "spk": self.spk,
            "num_spikes": self.peaks.len(),
            "covered_count": self.covered_count,
            "peaks": peaks,
            "histogram": histogram,
        })
    }

    /// `row_id,spike_index,alpha`; uncovered rows leave `spike_index` empty.
    pub fn write_assignment_csv<W: Write>(&self, row_ids: &[String], mut w: W) -> std::io::Result<()> {
        writeln!(w, "row_id,spike_index,alpha")?;
        for (i, a) in self.assignment.iter().enumerate() {
            let idx = a.map(|k| k.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{}", row_ids[i], idx, self.alphas[i])?;
        }
        Ok(())
    }
}

/// Cosine between two rows with precomputed norms.
pub fn cosine(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm_a * norm_b)
}

/// `ceil(rho · count)`, ignoring rounding noise in the product.
fn coverage_target(rho: f64, count: usize) -> usize {
    let t = rho * count as f64;
    let r = t.round();
    let target = if (t - r).abs() <= 1e-9 * (count.max(1) as f64) {
        r
    } else {
        t.ceil()
    };
    (target as usize).clamp(1, count)
}

pub fn spike_cover(e: &Embeddings, cfg: &SpkConfig) -> Result<SpikeCover> {
    cfg.validate()?;
    let (n, f) = (e.n(), e.dim());
    let rows = e.rows_flat();
    let row = |i: usize| &rows[i * f..(i + 1) * f];
    let alphas: Vec<f64> = (0..n)
        .map(|i| row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let mut remaining: Vec<usize> = (0..n).filter(|&i| alphas[i] > 0.0).collect();
    let countable = remaining.len();
    if countable == 0 {
        return Err(Error::invalid_input("all embedding rows are zero"));
    }
    remaining.sort_by(|&a, &b| alphas[b].total_cmp(&alphas[a]).then(a.cmp(&b)));
    let target = coverage_target(cfg.rho, countable);

    let mut assignment = vec![None; n];
    let mut peaks = Vec::new();
    let mut directions = Vec::new();
    let mut covered = 0usize;
    while covered < target {
        let peak = remaining[0];
        let k = peaks.len();
        let (pv, pn) = (row(peak), alphas[peak]);
        remaining.retain(|&j| {
            if j == peak || cfg.accepts(cosine(pv, row(j), pn, alphas[j])) {
                assignment[j] = Some(k);
                covered += 1;
                false
            } else {
                true
            }
        });
        peaks.push(peak);
        directions.push(pv.iter().map(|x| x / pn).collect());
    }

    Ok(SpikeCover {
        spk: peaks.len() as f64 / n as f64,
        peaks,
        assignment,
        alphas,
        directions,
        covered_count: covered,
        countable,
        config: *cfg,
    })
}

pub fn spk_metric(e: &Embeddings, cfg: &SpkConfig) -> Result<f64> {
    Ok(spike_cover(e, cfg)?.spk())
}

/// One row of an `Spk`-versus-truncation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub f: usize,
    pub spk: f64,
    pub num_spikes: usize,
}

/// `Spk` of several truncations of the same item set, sorted by `f`.
pub fn spk_sweep(list: &[Embeddings], cfg: &SpkConfig) -> Result<Vec<SweepPoint>> {
    let Some(first) = list.first() else {
        return Ok(Vec::new());
    };
    let mut reference: Vec<&String> = first.row_ids().iter().collect();
    reference.sort();
    for e in &list[1..] {
        let mut ids: Vec<&String> = e.row_ids().iter().collect();
        ids.sort();
        if ids != reference {
            return Err(Error::invalid_input(
                "embeddings in a sweep must cover the same row ids",
            ));
        }
    }
    let mut out = list
        .iter()
        .map(|e| {
            let cover = spike_cover(e, cfg)?;
            Ok(SweepPoint {
                f: e.dim(),
                spk: cover.spk(),
                num_spikes: cover.num_spikes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|p| p.f);
    Ok(out)
}

/// `n × f` i.i.d. standard normal rows: the reference for how rarely random
/// directions fall within the angle of one another.
pub fn gaussian_baseline(n: usize, f: usize, seed: u64) -> Result<Embeddings> {
    if n == 0 || f == 0 {
        return Err(Error::invalid_argument("baseline needs n >= 1 and f >= 1"));
    }
    let mut rng = seed::rng(seed);
    let mut data = Vec::with_capacity(n * f);
    for _ in 0..n * f {
        data.push(StandardNormal.sample(&mut rng));
    }
    Embeddings::from_matrix(DMatrix::from_row_slice(n, f, &data))
}
