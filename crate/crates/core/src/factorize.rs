//! Truncated eigendecomposition of symmetric matrices and the embeddings
//! derived from it.
//!
//! For a symmetric `M = P D Pᵀ` with eigenvalues ranked by absolute value, the
//! truncated SVD is `U = P₁..f`, `Σ = |D₁..f|` and `V = U · sign(D₁..f)`. A
//! [`Factorization`] stores `U`, `Σ` and the sign vector; `V` is derived.
//!
//! Two routes compute it: [`truncated_svd`], a randomized range finder with
//! power iterations working on the sparse matrix, and [`exact_eig`], a dense
//! symmetric eigensolver used as the small-scale oracle.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::SparseSymmetric;
use crate::seed;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SPKE";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Largest dimension accepted by [`exact_eig`].
pub const EXACT_MAX_N: usize = 2000;
/// Largest dimension accepted by [`reconstruct`].
pub const RECONSTRUCT_MAX_N: usize = 5000;

pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Truncated SVD of a symmetric matrix: `M̂ = U Σ Vᵀ` with `V = U · diag(signs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    signs: Vec<i8>,
    row_ids: Vec<String>,
}

impl Factorization {
    /// Validates and assembles a factorization.
    ///
    /// `sigma` must be non-negative and non-increasing (up to `1e-12` relative
    /// rounding), `signs` must be ±1 and
    /// the columns of `u` orthonormal to within 1e-8.
    pub fn new(
        u: DMatrix<f64>,
        sigma: Vec<f64>,
        signs: Vec<i8>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        let (n, f) = u.shape();
        if sigma.len() != f || signs.len() != f {
            return Err(Error::invalid_input(format!(
                "U has {f} columns but {} singular values and {} signs",
                sigma.len(),
                signs.len()
            )));
        }
        if f > n {
            return Err(Error::invalid_input(format!("rank {f} exceeds dimension {n}")));
        }
        if row_ids.len() != n {
            return Err(Error::invalid_input(format!(
                "{} row ids for {n} rows",
                row_ids.len()
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid_input("singular values must be finite and >= 0"));
        }
        // Magnitudes that tie up to rounding may be ordered by sign instead.
        let top = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
        if sigma.windows(2).any(|w| w[1] - w[0] > 1e-12 * top) {
            return Err(Error::invalid_input("singular values must be sorted descending"));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::invalid_input("signs must be +1 or -1"));
        }
        let fac = Factorization {
            u,
            sigma,
            signs,
            row_ids,
        };
        let dev = fac.orthonormality_error();
        if !(dev <= ORTHONORMALITY_TOL) {
            return Err(Error::Numeric(format!(
                "columns of U are not orthonormal (max deviation {dev:.3e})"
            )));
        }
        Ok(fac)
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn f(&self) -> usize {
        self.sigma.len()
    }

    /// Signed eigenvalues `σ_i · sign_i`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .zip(&self.signs)
            .map(|(s, &g)| s * f64::from(g))
            .collect()
    }

    /// `V = U · diag(signs)`.
    pub fn v(&self) -> DMatrix<f64> {
        let mut v = self.u.clone();
        for (mut col, &g) in v.column_iter_mut().zip(&self.signs) {
            if g < 0 {
                col.neg_mut();
            }
        }
        v
    }

    /// `max |UᵀU − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.u.transpose() * &self.u;
        let f = gram.nrows();
        (gram - DMatrix::<f64>::identity(f, f)).amax()
    }

    pub fn with_row_ids(mut self, row_ids: Vec<String>) -> Result<Self> {
        if row_ids.len() != self.n() {
            return Err(Error::invalid_input(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                self.n()
            )));
        }
        self.row_ids = row_ids;
        Ok(self)
    }
}

/// Parameters of the randomized range finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iters: 4,
            seed: 0,
        }
    }
}

/// Randomized truncated eigendecomposition of a sparse symmetric matrix,
/// keeping the `f` eigenpairs of largest absolute eigenvalue.
///
/// A Gaussian sketch of width `f + oversample` is pushed through `M` and
/// re-orthonormalized `power_iters` times; the small projected matrix
/// `Qᵀ M Q` is then solved exactly. Output is bit-identical for a fixed seed.
pub fn truncated_svd(m: &SparseSymmetric, f: usize, opts: SvdOptions) -> Result<Factorization> {
    if !m.all_finite() {
        return Err(Error::invalid_input("matrix has non-finite entries"));
    }
    randomized_eig(m.n(), |x| m.mul_dense(x), f, opts, m.row_ids().to_vec())
}

/// [`truncated_svd`] for a dense symmetric matrix, which may have negative
/// entries.
pub fn truncated_svd_dense(m: &DMatrix<f64>, f: usize, opts: SvdOptions) -> Result<Factorization> {
    check_symmetric(m)?;
    let row_ids = (0..m.nrows()).map(|i| i.to_string()).collect();
    randomized_eig(m.nrows(), |x| m * x, f, opts, row_ids)
}

fn randomized_eig(
    n: usize,
    apply: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    f: usize,
    opts: SvdOptions,
    row_ids: Vec<String>,
) -> Result<Factorization> {
    check_rank(f, n)?;
    let width = (f + opts.oversample).min(n);

    let mut rng = seed::rng(opts.seed);
    let mut sketch = DMatrix::<f64>::zeros(n, width);
    for x in sketch.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }

    let mut q = apply(&sketch).qr().q();
    for _ in 0..opts.power_iters {
        q = apply(&q).qr().q();
    }

    let mq = apply(&q);
    let mut projected = q.transpose() * mq;
    symmetrize(&mut projected);

    let eig = SymmetricEigen::new(projected);
    let order = rank_by_magnitude(eig.eigenvalues.as_slice());
    let mut basis = DMatrix::<f64>::zeros(width, f);
    let mut values = Vec::with_capacity(f);
    for (c, &idx) in order.iter().take(f).enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(idx));
        values.push(eig.eigenvalues[idx]);
    }
    let u = q * basis;
    assemble(u, &values, row_ids)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid_input("matrix is not square"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid_input("matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::invalid_input(format!(
            "matrix is not symmetric (max |M - Mᵀ| = {asym:.3e})"
        )));
    }
    Ok(())
}

/// Dense exact eigendecomposition truncated to the `f` largest `|d_i|`.
///
/// Same ordering and sign conventions as [`truncated_svd`]. Intended as an
/// oracle: `n` is capped at [`EXACT_MAX_N`].
pub fn exact_eig(m: &DMatrix<f64>, f: usize) -> Result<Factorization> {
    let n = m.nrows();
    if n > EXACT_MAX_N {
        return Err(Error::invalid_argument(format!(
            "exact eigendecomposition is limited to n <= {EXACT_MAX_N}, got {n}"
        )));
    }
    check_symmetric(m)?;
    check_rank(f, n)?;

    let eig = SymmetricEigen::new(m.clone());
    let order = rank_by_magnitude(eig.eigenvalues.as_slice());
    let mut u = DMatrix::<f64>::zeros(n, f);
    let mut values = Vec::with_capacity(f);
    for (c, &idx) in order.iter().take(f).enumerate() {
        u.set_column(c, &eig.eigenvectors.column(idx));
        values.push(eig.eigenvalues[idx]);
    }
    let row_ids = (0..n).map(|i| i.to_string()).collect();
    assemble(u, &values, row_ids)
}

pub fn exact_eig_sparse(m: &SparseSymmetric, f: usize) -> Result<Factorization> {
    exact_eig(&m.to_dense(), f)?.with_row_ids(m.row_ids().to_vec())
}

fn check_rank(f: usize, n: usize) -> Result<()> {
    if f == 0 {
        return Err(Error::invalid_argument("rank f must be >= 1"));
    }
    if f > n {
        return Err(Error::invalid_argument(format!(
            "rank f = {f} exceeds matrix dimension n = {n}"
        )));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Indices sorted by `|d|` descending. Among magnitudes equal up to rounding,
/// positive eigenvalues come first.
fn rank_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then_with(|| sign_rank(values[a]).cmp(&sign_rank(values[b])))
            .then(a.cmp(&b))
    });
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale;
    // A plain sort can leave a negative eigenvalue ahead of a positive one whose
    // magnitude differs only by rounding; bubble those pairs back into place.
    let mut changed = true;
    while changed {
        changed = false;
        for k in 1..order.len() {
            let (a, b) = (values[order[k - 1]], values[order[k]]);
            if a < 0.0 && b >= 0.0 && (a.abs() - b.abs()).abs() <= tol {
                order.swap(k - 1, k);
                changed = true;
            }
        }
    }
    order
}

fn sign_rank(v: f64) -> u8 {
    if v >= 0.0 {
        0
    } else {
        1
    }
}

/// Applies the sign convention (largest-magnitude component of every column
/// is positive) and splits eigenvalues into `σ` and signs.
pub(crate) fn assemble(mut u: DMatrix<f64>, eigenvalues: &[f64], row_ids: Vec<String>) -> Result<Factorization> {
    for mut col in u.column_iter_mut() {
        let mut best = 0usize;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
    let sigma = eigenvalues.iter().map(|d| d.abs()).collect();
    let signs = eigenvalues
        .iter()
        .map(|&d| if d < 0.0 { -1 } else { 1 })
        .collect();
    Factorization::new(u, sigma, signs, row_ids)
}

/// Item embeddings `E = U · Σ^p`, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    e: DMatrix<f64>,
    p: f64,
    row_ids: Vec<String>,
    label: Option<String>,
}

impl Embeddings {
    pub fn new(e: DMatrix<f64>, p: f64, row_ids: Vec<String>, label: Option<String>) -> Result<Self> {
        if row_ids.len() != e.nrows() {
            return Err(Error::invalid_input(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                e.nrows()
            )));
        }
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid_input("embeddings contain non-finite values"));
        }
        if !p.is_finite() {
            return Err(Error::invalid_input("exponent p must be finite"));
        }
        Ok(Embeddings {
            e,
            p,
            row_ids,
            label,
        })
    }

    /// Wraps a plain matrix with numeric row ids and `p = 1`.
    pub fn from_matrix(e: DMatrix<f64>) -> Result<Self> {
        let ids = (0..e.nrows()).map(|i| i.to_string()).collect();
        Self::new(e, 1.0, ids, None)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn dim(&self) -> usize {
        self.e.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.e.row(i).iter().copied().collect()
    }

    /// Rows copied into one contiguous row-major buffer.
    pub fn rows_flat(&self) -> Vec<f64> {
        let (n, f) = self.e.shape();
        let mut out = vec![0.0; n * f];
        for c in 0..f {
            for (r, x) in self.e.column(c).iter().enumerate() {
                out[r * f + c] = *x;
            }
        }
        out
    }

    pub fn norms(&self) -> Vec<f64> {
        self.e.row_iter().map(|r| r.norm()).collect()
    }

    /// Keeps the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Embeddings {
        Embeddings {
            e: self.e.select_rows(rows),
            p: self.p,
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            label: self.label.clone(),
        }
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.n() == 0 {
            return Err(Error::invalid_input("refusing to write an empty snapshot"));
        }
        crate::cli::write_atomic(path, |w| self.write_snapshot_to(w))
    }

    /// Binary snapshot: `SPKE`, version, `n`, `f`, `p`, row-major `f64`
    /// values, the id table, then an optional label. All little-endian;
    /// strings are `u32`-length-prefixed UTF-8.
    pub fn write_snapshot_to<W: Write>(&self, w: W) -> Result<()> {
        if self.n() == 0 {
            return Err(Error::invalid_input("refusing to write an empty snapshot"));
        }
        let io_err = |e| Error::io("<snapshot>", e);
        let mut w = BufWriter::new(w);
        let (n, f) = self.e.shape();
        w.write_all(SNAPSHOT_MAGIC).map_err(io_err)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes()).map_err(io_err)?;
        w.write_all(&(n as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(f as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&self.p.to_le_bytes()).map_err(io_err)?;
        for x in self.rows_flat() {
            w.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
        for id in &self.row_ids {
            write_str(&mut w, id).map_err(io_err)?;
        }
        if let Some(label) = &self.label {
            write_str(&mut w, label).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Embeddings> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot_from(BufReader::new(file))
    }

    pub fn read_snapshot_from<R: Read>(mut r: R) -> Result<Embeddings> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::io("<snapshot>", e))?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
        };
        let magic = cur.take(4, "magic")?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {magic:?}, expected \"SPKE\""),
            });
        }
        let version_at = cur.pos;
        let version = u32::from_le_bytes(cur.array("version")?);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format {
                offset: version_at as u64,
                message: format!("unsupported version {version}"),
            });
        }
        let dims_at = cur.pos;
        let n = u64::from_le_bytes(cur.array("row count")?);
        let f = u64::from_le_bytes(cur.array("column count")?);
        if n == 0 {
            return Err(Error::Format {
                offset: dims_at as u64,
                message: "empty snapshot (n = 0)".into(),
            });
        }
        let p = f64::from_le_bytes(cur.array("exponent")?);
        let payload_at = cur.pos;
        let count = n
            .checked_mul(f)
            .and_then(|c| c.checked_mul(8))
            .filter(|&b| b <= (bytes.len() - payload_at) as u64)
            .ok_or_else(|| Error::Format {
                offset: payload_at as u64,
                message: format!("truncated payload: {n} x {f} values announced"),
            })?;
        let (n, f) = (n as usize, f as usize);
        let raw = cur.take(count as usize, "values")?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let e = DMatrix::from_row_slice(n, f, &data);
        let mut row_ids = Vec::with_capacity(n);
        for _ in 0..n {
            row_ids.push(cur.string("row id")?);
        }
        let label = if cur.pos < bytes.len() {
            Some(cur.string("label")?)
        } else {
            None
        };
        if cur.pos != bytes.len() {
            return Err(Error::Format {
                offset: cur.pos as u64,
                message: "trailing bytes after label".into(),
            });
        }
        Embeddings::new(e, p, row_ids, label).map_err(|err| Error::Format {
            offset: payload_at as u64,
            message: err.to_string(),
        })
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    let len = u32::try_from(s.len()).expect("string longer than u32::MAX bytes");
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!("truncated {what}: need {len} bytes"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("exact length"))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let at = self.pos;
        let len = u32::from_le_bytes(self.array(what)?) as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format {
            offset: at as u64,
            message: format!("{what} is not valid UTF-8"),
        })
    }
}

/// `E = U · diag(σ^p)` for `p ∈ [0, 1]`.
pub fn embeddings(fac: &Factorization, p: f64) -> Result<Embeddings> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid_argument(format!("exponent p = {p} is outside [0, 1]")));
    }
    let mut e = fac.u().clone();
    for (mut col, s) in e.column_iter_mut().zip(fac.sigma()) {
        col *= s.powf(p);
    }
    Embeddings::new(e, p, fac.row_ids().to_vec(), None)
}

/// Dense `M̂ = U diag(σ · signs) Uᵀ`, exactly symmetric.
pub fn reconstruct(fac: &Factorization) -> Result<DMatrix<f64>> {
    let n = fac.n();
    if n > RECONSTRUCT_MAX_N {
        return Err(Error::invalid_argument(format!(
            "reconstruction is limited to n <= {RECONSTRUCT_MAX_N}, got {n}"
        )));
    }
    let mut scaled = fac.u().clone();
    for (mut col, d) in scaled.column_iter_mut().zip(fac.eigenvalues()) {
        col *= d;
    }
    let mut m = scaled * fac.u().transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(m)
}

/// Squared Frobenius norm of `a − b`.
pub fn frobenius_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm_squared()
}

/// Haar-random orthogonal `n × n` matrix.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seed::rng(seed);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (c, mut col) in q.column_iter_mut().enumerate() {
        if r[(c, c)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// `Q diag(eigenvalues) Qᵀ` for a random orthogonal `Q`, exactly symmetric.
pub fn symmetric_with_spectrum(eigenvalues: &[f64], seed: u64) -> DMatrix<f64> {
    let n = eigenvalues.len();
    let q = random_orthogonal(n, seed);
    let mut scaled = q.clone();
    for (mut col, d) in scaled.column_iter_mut().zip(eigenvalues) {
        col *= *d;
    }
    let mut m = scaled * q.transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let proj = a * (a.transpose() * b);
    let residual = b - proj;
    let sin = residual.singular_values().max().min(1.0);
    sin.asin()
}
