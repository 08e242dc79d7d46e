//! Interaction parsing and the symmetric co-occurrence pipeline:
//! records → Gram matrix `MMᵀ` → top-k per item → PPMI.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Raw `(item, context, weight)` records with stable first-seen indices.
///
/// Weights are strictly positive; zero-weight lines are dropped while parsing
/// and repeated `(item, context)` pairs are summed into the first occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTriples {
    records: Vec<(usize, usize, f64)>,
    item_ids: Vec<String>,
    context_ids: Vec<String>,
    item_index: HashMap<String, usize>,
}

impl InteractionTriples {
    pub fn records(&self) -> &[(usize, usize, f64)] {
        &self.records
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn context_ids(&self) -> &[String] {
        &self.context_ids
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn num_contexts(&self) -> usize {
        self.context_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records as `(item_id, context_id, weight)` string triples.
    pub fn iter_named(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.records.iter().map(move |&(i, c, w)| {
            (
                self.item_ids[i].as_str(),
                self.context_ids[c].as_str(),
                w,
            )
        })
    }
}

/// Parses tab-separated `item<TAB>context[<TAB>weight]` lines.
///
/// Blank lines and lines starting with `#` are skipped. A missing weight
/// defaults to 1.
pub fn parse_interactions<R: BufRead>(reader: R) -> Result<InteractionTriples> {
    let mut item_index: HashMap<String, usize> = HashMap::new();
    let mut context_index: HashMap<String, usize> = HashMap::new();
    let mut item_ids = Vec::new();
    let mut context_ids = Vec::new();
    let mut pair_slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut records: Vec<(usize, usize, f64)> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let (item, context, weight) = match fields.as_slice() {
            [item, context] => (*item, *context, 1.0),
            [item, context, weight] => {
                let w: f64 = weight
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(format!("non-numeric weight {weight:?}")))?;
                (*item, *context, w)
            }
            _ => {
                return Err(parse_err(format!(
                    "expected 2 or 3 tab-separated fields, found {}",
                    fields.len()
                )))
            }
        };
        if item.is_empty() || context.is_empty() {
            return Err(parse_err("empty item or context id".into()));
        }
        if !weight.is_finite() {
            return Err(parse_err(format!("non-finite weight {weight}")));
        }
        if weight < 0.0 {
            return Err(parse_err(format!("negative weight {weight}")));
        }
        if weight == 0.0 {
            continue;
        }

        let i = *item_index.entry(item.to_string()).or_insert_with(|| {
            item_ids.push(item.to_string());
            item_ids.len() - 1
        });
        let c = *context_index.entry(context.to_string()).or_insert_with(|| {
            context_ids.push(context.to_string());
            context_ids.len() - 1
        });
        match pair_slot.get(&(i, c)) {
            Some(&slot) => records[slot].2 += weight,
            None => {
                pair_slot.insert((i, c), records.len());
                records.push((i, c, weight));
            }
        }
    }

    Ok(InteractionTriples {
        records,
        item_ids,
        context_ids,
        item_index,
    })
}

pub fn parse_interactions_str(text: &str) -> Result<InteractionTriples> {
    parse_interactions(text.as_bytes())
}

/// Symmetric non-negative sparse matrix, stored as CSR with both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    row_ids: Vec<String>,
}

impl SparseSymmetric {
    /// Builds a matrix from unordered `(i, j, value)` entries.
    ///
    /// `(i, j)` and `(j, i)` denote the same entry and are summed if both are
    /// given. Zero values are dropped. `row_ids` defaults to `"0".."n-1"`.
    pub fn from_triplets<I>(n: usize, entries: I, row_ids: Option<Vec<String>>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::invalid_input(format!(
                    "entry ({i}, {j}) out of bounds for n = {n}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid_input(format!(
                    "entry ({i}, {j}) = {v} is not a finite non-negative value"
                )));
            }
            *upper.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((i, j), v) in upper {
            if v == 0.0 {
                continue;
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(rows, row_ids)
    }

    /// Builds from a dense matrix, requiring exact symmetry.
    pub fn from_dense(m: &DMatrix<f64>, row_ids: Option<Vec<String>>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid_input("matrix is not square"));
        }
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::invalid_input(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, entries, row_ids)
    }

    /// `rows[i]` must hold the full row `i`; it is sorted by column here.
    fn from_rows(mut rows: Vec<Vec<(usize, f64)>>, row_ids: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        let row_ids = match row_ids {
            Some(ids) if ids.len() != n => {
                return Err(Error::invalid_input(format!(
                    "{} row ids for {n} rows",
                    ids.len()
                )))
            }
            Some(ids) => ids,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(SparseSymmetric {
            n,
            indptr,
            indices,
            values,
            row_ids,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries counting both triangles.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries with `i <= j`.
    pub fn nnz_upper(&self) -> usize {
        self.upper_triplets().count()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn with_row_ids(mut self, row_ids: Vec<String>) -> Result<Self> {
        if row_ids.len() != self.n {
            return Err(Error::invalid_input(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                self.n
            )));
        }
        self.row_ids = row_ids;
        Ok(self)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.indptr[i];
        self.indices[start..self.indptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn upper_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j >= i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Every stored `(i, j)` has a bit-identical stored `(j, i)`.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .all(|(j, v)| self.position(j, i).is_some_and(|p| self.values[p] == v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `self · x` for a dense `n × k` block.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n, "dimension mismatch in sparse product");
        let k = x.ncols();
        let mut out = DMatrix::zeros(self.n, k);
        for c in 0..k {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.n {
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * xc[j];
                }
                oc[i] = acc;
            }
        }
        out
    }

    /// Writes the `SPKM` text form: a `SPKM n nnz` header then one
    /// `i j value` line per upper-triangle entry.
    pub fn write_spkm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut body = String::new();
        let mut count = 0usize;
        for (i, j, v) in self.upper_triplets() {
            writeln!(body, "{i} {j} {v:.16e}").expect("writing to a String cannot fail");
            count += 1;
        }
        writeln!(w, "SPKM {} {}", self.n, count)?;
        w.write_all(body.as_bytes())?;
        w.flush()
    }

    pub fn read_spkm<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| parse_err(1, e.to_string()))?,
            None => return Err(parse_err(1, "missing SPKM header".into())),
        };
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (n, nnz) = match parts.as_slice() {
            ["SPKM", n, nnz] => (
                n.parse::<usize>()
                    .map_err(|_| parse_err(1, format!("bad dimension {n:?}")))?,
                nnz.parse::<usize>()
                    .map_err(|_| parse_err(1, format!("bad entry count {nnz:?}")))?,
            ),
            _ => return Err(parse_err(1, format!("bad header {header:?}"))),
        };
        let mut entries = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let [i, j, v] = f.as_slice() else {
                return Err(parse_err(line_no, "expected `i j value`".into()));
            };
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad row index {i:?}")))?;
            let j: usize = j
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad column index {j:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value {v:?}")))?;
            if i > j {
                return Err(parse_err(line_no, format!("entry ({i}, {j}) below diagonal")));
            }
            if i >= n || j >= n {
                return Err(parse_err(line_no, format!("entry ({i}, {j}) out of bounds")));
            }
            entries.push((i, j, v));
        }
        if entries.len() != nnz {
            return Err(parse_err(
                nnz + 1,
                format!("header announces {nnz} entries, found {}", entries.len()),
            ));
        }
        Self::from_triplets(n, entries, None)
    }
}

/// Item–item Gram matrix `G(i, j) = Σ_c w(i, c) · w(j, c)`.
pub fn build_gram(t: &InteractionTriples) -> Result<SparseSymmetric> {
    if t.is_empty() {
        return Err(Error::invalid_input("no interactions to build a matrix from"));
    }
    let n = t.num_items();
    let mut by_context: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.num_contexts()];
    let mut by_item: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, c, w) in t.records() {
        by_context[c].push((i, w));
        by_item[i].push((c, w));
    }
    // Both (i, j) and (j, i) then accumulate the shared contexts in the same
    // ascending order, so the two halves are bit-identical.
    for contexts in by_item.iter_mut() {
        contexts.sort_unstable_by_key(|&(c, _)| c);
    }

    let mut acc = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for contexts in &by_item {
        for &(c, w_ic) in contexts {
            for &(j, w_jc) in &by_context[c] {
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j);
                }
                acc[j] += w_ic * w_jc;
            }
        }
        let mut row = Vec::with_capacity(touched.len());
        for &j in &touched {
            if acc[j] != 0.0 {
                row.push((j, acc[j]));
            }
            acc[j] = 0.0;
            seen[j] = false;
        }
        touched.clear();
        rows.push(row);
    }
    SparseSymmetric::from_rows(rows, Some(t.item_ids().to_vec()))
}

/// Keeps entry `(i, j)` when it ranks among the `k` largest of row `i` or of
/// row `j`. Ranking is by value descending, then column ascending.
pub fn topk_filter(m: &SparseSymmetric, k: usize) -> Result<SparseSymmetric> {
    if k == 0 {
        return Err(Error::invalid_argument("top-k filter needs k >= 1"));
    }
    let n = m.n();
    let mut in_topk = vec![false; m.nnz()];
    let mut order: Vec<usize> = Vec::new();
    for i in 0..n {
        let (start, end) = (m.indptr[i], m.indptr[i + 1]);
        if end - start <= k {
            in_topk[start..end].iter_mut().for_each(|f| *f = true);
            continue;
        }
        order.clear();
        order.extend(start..end);
        order.sort_by(|&a, &b| {
            m.values[b]
                .total_cmp(&m.values[a])
                .then(m.indices[a].cmp(&m.indices[b]))
        });
        for &p in &order[..k] {
            in_topk[p] = true;
        }
    }

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for p in m.indptr[i]..m.indptr[i + 1] {
            let j = m.indices[p];
            let mirror = m.position(j, i).expect("symmetric storage");
            if in_topk[p] || in_topk[mirror] {
                row.push((j, m.values[p]));
            }
        }
        rows.push(row);
    }
    SparseSymmetric::from_rows(rows, Some(m.row_ids.clone()))
}

/// Positive pointwise mutual information,
/// `max(0, ln(x_ij · T / (r_i · r_j)))` over stored entries.
///
/// Entries whose PMI is not positive are dropped.
pub fn ppmi(m: &SparseSymmetric) -> Result<SparseSymmetric> {
    let row_sums = m.row_sums();
    let total: f64 = row_sums.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::invalid_input(
            "PPMI needs a matrix with at least one positive entry",
        ));
    }
    let mut rows = Vec::with_capacity(m.n());
    for (i, &ri) in row_sums.iter().enumerate() {
        let mut row = Vec::new();
        for (j, x) in m.row(i) {
            let pmi = (x * total / (ri * row_sums[j])).ln();
            if pmi > 0.0 {
                row.push((j, pmi));
            }
        }
        rows.push(row);
    }
    SparseSymmetric::from_rows(rows, Some(m.row_ids.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(rows: &[&[f64]]) -> SparseSymmetric {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        SparseSymmetric::from_dense(&m, None).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let t = parse_interactions_str("a\tu1\t2\na\tu1\t3").unwrap();
        assert_eq!(t.records(), &[(0, 0, 5.0)]);
    }

    #[test]
    fn missing_weight_defaults_to_one() {
        let t = parse_interactions_str("a\tu1\nb\tu1").unwrap();
        let named: Vec<_> = t.iter_named().collect();
        assert_eq!(named, vec![("a", "u1", 1.0), ("b", "u1", 1.0)]);
    }

    #[test]
    fn negative_weight_is_rejected_with_line() {
        let err = parse_interactions_str("a\tu1\t-1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn malformed_lines_report_their_line() {
        let text = "# header\n\na\tu1\t1\nb\tu2\tx\n";
        assert!(matches!(
            parse_interactions_str(text),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_interactions_str("a\tb\tc\td"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_interactions_str("solo"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn zero_weights_and_comments_are_skipped() {
        let t = parse_interactions_str("# c\na\tu\t0\nb\tu\t2\n").unwrap();
        assert_eq!(t.item_ids(), &["b".to_string()]);
        assert_eq!(t.records(), &[(0, 0, 2.0)]);
    }

    #[test]
    fn gram_of_orthogonal_rows_is_identity() {
        let t = parse_interactions_str("a\tc1\nb\tc2").unwrap();
        let g = build_gram(&t).unwrap();
        assert_eq!(g.to_dense(), DMatrix::identity(2, 2));
    }

    #[test]
    fn gram_of_identical_rows() {
        let t = parse_interactions_str("a\tc1\na\tc2\nb\tc1\nb\tc2").unwrap();
        let g = build_gram(&t).unwrap();
        assert_eq!(g.to_dense(), DMatrix::from_element(2, 2, 2.0));
    }

    #[test]
    fn gram_hand_dot_products() {
        // a = (2, 1), b = (1, 0)
        let t = parse_interactions_str("a\tc1\t2\na\tc2\t1\nb\tc1\t1").unwrap();
        let g = build_gram(&t).unwrap();
        assert_eq!(g.get(0, 1), 2.0);
        assert_eq!(g.get(1, 0), 2.0);
        assert_eq!(g.get(0, 0), 5.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert_eq!(g.row_ids(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn gram_rejects_empty_input() {
        let t = parse_interactions_str("# nothing\n").unwrap();
        assert!(build_gram(&t).is_err());
    }

    #[test]
    fn topk_large_k_is_noop() {
        let m = dense(&[&[1.0, 2.0, 3.0], &[2.0, 0.0, 4.0], &[3.0, 4.0, 5.0]]);
        assert_eq!(topk_filter(&m, 3).unwrap(), m);
        assert_eq!(topk_filter(&m, 10).unwrap(), m);
    }

    #[test]
    fn topk_three_by_three_enumerated() {
        // Row tops at k = 1: row 0 -> (0,0)=5, row 1 -> (1,0)=3, row 2 -> (2,1)=2.
        // (0,2)=1 is top of neither row 0 nor row 2 and is dropped.
        let m = dense(&[&[5.0, 3.0, 1.0], &[3.0, 0.0, 2.0], &[1.0, 2.0, 0.0]]);
        let f = topk_filter(&m, 1).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[5.0, 3.0, 0.0, 3.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
        assert_eq!(f.to_dense(), expected);
        assert!(f.is_symmetric());
    }

    #[test]
    fn topk_ties_keep_lower_column() {
        let m = dense(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let f = topk_filter(&m, 1).unwrap();
        // Row 0 keeps column 1; column 2 survives through row 2's own top-1.
        assert_eq!(f.get(0, 1), 1.0);
        assert_eq!(f.get(0, 2), 1.0);
        assert!(topk_filter(&m, 0).is_err());
    }

    #[test]
    fn ppmi_of_uniform_matrix_is_empty() {
        let m = dense(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let p = ppmi(&m).unwrap();
        assert_eq!(p.nnz(), 0);
    }

    #[test]
    fn ppmi_of_identity_is_log_two() {
        let m = dense(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let p = ppmi(&m).unwrap();
        assert_relative_eq!(p.get(0, 0), 2f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(p.get(1, 1), 2f64.ln(), max_relative = 1e-15);
        assert_eq!(p.get(0, 1), 0.0);
    }

    #[test]
    fn ppmi_rejects_zero_matrix() {
        let m = SparseSymmetric::from_triplets(3, vec![], None).unwrap();
        assert!(ppmi(&m).is_err());
    }

    #[test]
    fn spkm_round_trip_is_bit_exact() {
        let m = dense(&[&[0.1, 1.0 / 3.0], &[1.0 / 3.0, 2.0f64.sqrt()]]);
        let mut buf = Vec::new();
        m.write_spkm(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("SPKM 2 3\n"));
        assert!(text.contains("0 1 3.3333333333333331e-1"));
        let back = SparseSymmetric::read_spkm(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn spkm_rejects_bad_files() {
        assert!(SparseSymmetric::read_spkm("SPKX 2 0\n".as_bytes()).is_err());
        assert!(SparseSymmetric::read_spkm("SPKM 2 1\n1 0 1.0\n".as_bytes()).is_err());
        assert!(SparseSymmetric::read_spkm("SPKM 2 2\n0 0 1.0\n".as_bytes()).is_err());
        assert!(SparseSymmetric::read_spkm("SPKM 2 1\n0 5 1.0\n".as_bytes()).is_err());
    }

    #[test]
    fn sparse_product_matches_dense() {
        let m = dense(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 3.0], &[0.0, 3.0, 1.0]]);
        let x = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        assert_eq!(m.mul_dense(&x), m.to_dense() * &x);
    }
}
