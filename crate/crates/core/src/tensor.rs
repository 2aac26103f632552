//! Symmetric tensors keyed by sorted multisets, the GOTE sampler, and
//! contractions to symmetric matrices.
//!
//! An order-`r` symmetric tensor on `n` coordinates stores one real per
//! sorted multi-index, `C(n + r - 1, r)` entries in total.  Canonical
//! multi-indices are enumerated in colex order; the rank of a sorted index
//! `i_0 <= ... <= i_{r-1}` is `sum_t C(i_t + t, t + 1)`, which doubles as its
//! storage offset and as its draw position in the sampling stream.
//!
//! Indices are 0-based in code.  The text serialization writes 1-based
//! indices, one canonical entry per line, in rank order.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::rng::{GaussianStream, SeedKey};

/// Default cap on dense canonical storage.
pub const DEFAULT_ENTRY_CAP: u128 = 10_000_000;

const TENSOR_HEADER: &str = "gote-tensor v1";

/// Formats a float with 17 significant digits, enough to round-trip f64
/// exactly; shared by every serialization path in the crate.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Multi-index with components in `0..n`, held in canonical (sorted) form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: &[usize], n: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("multi-index must be non-empty".into()));
        }
        if let Some(&bad) = components.iter().find(|&&c| c >= n) {
            return Err(Error::Domain(format!(
                "index component {bad} out of range for n = {n}"
            )));
        }
        let mut idx = components.to_vec();
        idx.sort_unstable();
        Ok(MultiIndex(idx))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }
}

/// Number of distinct permutations of the components of `idx`,
/// `r! / prod_k(multiplicity_k!)`.
pub fn multiset_perm_count(idx: &MultiIndex) -> u64 {
    perm_count_sorted(idx.components())
}

/// Multinomial coefficient of the multiplicity profile of a sorted slice,
/// accumulated as a product of binomials so intermediates stay integral.
fn perm_count_sorted(sorted: &[usize]) -> u64 {
    let mut result: u128 = 1;
    let mut placed = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let mult = j - i;
        placed += mult;
        result *= binomial_u128(placed as u128, mult as u128)
            .expect("permutation count overflow");
        i = j;
    }
    u64::try_from(result).expect("permutation count exceeds u64")
}

fn binomial_u128(m: u128, t: u128) -> Option<u128> {
    let t = t.min(m - t.min(m));
    let mut acc: u128 = 1;
    for k in 0..t {
        acc = acc.checked_mul(m - k)?;
        acc /= k + 1;
    }
    Some(acc)
}

/// `C(n + r - 1, r)`: the number of canonical entries of an order-`r`
/// symmetric tensor on `n` coordinates.  `None` on u128 overflow.
pub fn canonical_count(r: usize, n: usize) -> Option<u128> {
    binomial_u128((n + r - 1) as u128, r as u128)
}

/// Colex successor of a non-decreasing tuple over `0..n`.
/// Returns false once the last tuple `(n-1, ..., n-1)` is reached.
fn advance_canonical(idx: &mut [usize], n: usize) -> bool {
    let r = idx.len();
    for t in 0..r {
        let limit = if t + 1 < r { idx[t + 1] } else { n - 1 };
        if idx[t] < limit {
            idx[t] += 1;
            idx[..t].fill(0);
            return true;
        }
    }
    false
}

/// Dense symmetric tensor over canonical multi-indices.
pub struct SymTensor {
    r: usize,
    n: usize,
    entries: Vec<f64>,
    /// Pascal table, row-major with stride `r + 1`: `btable[m*(r+1)+t] = C(m, t)`.
    btable: Vec<u64>,
}

impl SymTensor {
    pub fn zeros(r: usize, n: usize) -> Result<Self> {
        Self::zeros_with_cap(r, n, DEFAULT_ENTRY_CAP)
    }

    pub fn zeros_with_cap(r: usize, n: usize, cap: u128) -> Result<Self> {
        if r < 2 {
            return Err(Error::Domain(format!("tensor order must be >= 2, got {r}")));
        }
        if n < 1 {
            return Err(Error::Domain("tensor dimension must be >= 1".into()));
        }
        let count = canonical_count(r, n)
            .ok_or_else(|| Error::Domain(format!("entry count overflows for r={r}, n={n}")))?;
        if count > cap {
            return Err(Error::Capacity { required: count, cap });
        }
        let count = count as usize;
        let rows = n + r;
        let mut btable = vec![0u64; rows * (r + 1)];
        for m in 0..rows {
            btable[m * (r + 1)] = 1;
            for t in 1..=r.min(m) {
                btable[m * (r + 1) + t] = btable[(m - 1) * (r + 1) + t - 1]
                    .saturating_add(btable[(m - 1) * (r + 1) + t]);
            }
        }
        Ok(SymTensor { r, n, entries: vec![0.0; count], btable })
    }

    pub fn from_entries(r: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(r, n)?;
        if entries.len() != t.entries.len() {
            return Err(Error::Shape(format!(
                "expected {} canonical entries, got {}",
                t.entries.len(),
                entries.len()
            )));
        }
        t.entries = entries;
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored canonical entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    fn binom(&self, m: usize, t: usize) -> u64 {
        self.btable[m * (self.r + 1) + t]
    }

    /// Colex rank of a sorted multi-index; its storage offset.
    #[inline]
    fn rank_sorted(&self, sorted: &[usize]) -> usize {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        let mut rank = 0u64;
        for (t, &i) in sorted.iter().enumerate() {
            rank += self.binom(i + t, t + 1);
        }
        rank as usize
    }

    fn check_components(&self, indices: &[usize]) -> Result<()> {
        if indices.len() != self.r {
            return Err(Error::Shape(format!(
                "multi-index of length {} for order-{} tensor",
                indices.len(),
                self.r
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&c| c >= self.n) {
            return Err(Error::Domain(format!(
                "index component {bad} out of range for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Entry at an arbitrarily ordered multi-index.
    pub fn get(&self, indices: &[usize]) -> Result<f64> {
        self.check_components(indices)?;
        let mut key = indices.to_vec();
        key.sort_unstable();
        Ok(self.entries[self.rank_sorted(&key)])
    }

    /// Sets the entry shared by every permutation of `indices`.
    pub fn set(&mut self, indices: &[usize], value: f64) -> Result<()> {
        self.check_components(indices)?;
        let mut key = indices.to_vec();
        key.sort_unstable();
        let at = self.rank_sorted(&key);
        self.entries[at] = value;
        Ok(())
    }

    /// Visits canonical entries in rank order.
    pub fn for_each_canonical(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.r];
        for k in 0..self.entries.len() {
            f(&idx, self.entries[k]);
            advance_canonical(&mut idx, self.n);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for e in &mut self.entries {
            *e *= c;
        }
    }

    /// `self + c * other`, entrywise over canonical entries.
    pub fn add_scaled(&self, other: &SymTensor, c: f64) -> Result<SymTensor> {
        if self.r != other.r || self.n != other.n {
            return Err(Error::Shape("tensor shape mismatch".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + c * b)
            .collect();
        SymTensor::from_entries(self.r, self.n, entries)
    }

    pub fn sub(&self, other: &SymTensor) -> Result<SymTensor> {
        self.add_scaled(other, -1.0)
    }

    /// Frobenius norm over the full index hypercube.
    pub fn frobenius_norm(&self) -> f64 {
        frobenius_inner(self, self).expect("same shape").sqrt()
    }

    /// Order-2 tensors are symmetric matrices.
    pub fn as_matrix(&self) -> Result<SymMatrix> {
        if self.r != 2 {
            return Err(Error::Domain(format!(
                "as_matrix requires order 2, got {}",
                self.r
            )));
        }
        let mut m = SymMatrix::zeros(self.n);
        self.for_each_canonical(|idx, v| m.set(idx[0], idx[1], v));
        Ok(m)
    }

    /// Writes the text serialization: a fixed header, `r` and `n`, then one
    /// canonical entry per line as 1-based sorted indices and a value with
    /// 17 significant digits, in rank order.
    pub fn write_text(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{TENSOR_HEADER}")?;
        writeln!(out, "r={}", self.r)?;
        writeln!(out, "n={}", self.n)?;
        let mut line = String::new();
        let mut idx = vec![0usize; self.r];
        for k in 0..self.entries.len() {
            line.clear();
            for &i in idx.iter() {
                line.push_str(&(i + 1).to_string());
                line.push(',');
            }
            line.push_str(&fmt_float(self.entries[k]));
            writeln!(out, "{line}")?;
            advance_canonical(&mut idx, self.n);
        }
        Ok(())
    }

    /// Parses the text serialization, validating the header, the entry
    /// count, and that indices arrive canonical and in rank order.
    pub fn read_text(input: &mut impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tensor file".into()))??;
        if header.trim() != TENSOR_HEADER {
            return Err(Error::Parse(format!("unrecognized header {header:?}")));
        }
        let r = parse_header_field(lines.next(), "r")?;
        let n = parse_header_field(lines.next(), "n")?;
        let mut tensor = SymTensor::zeros(r, n)?;
        let mut expect = vec![0usize; r];
        for k in 0..tensor.entries.len() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing entry line {k}")))??;
            let mut parts = line.trim().split(',');
            for (t, want) in expect.iter().enumerate() {
                let got: usize = parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("short entry line {k}")))?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index on line {k}")))?;
                if got != want + 1 {
                    return Err(Error::Parse(format!(
                        "entry line {k}: index component {t} is {got}, expected {}",
                        want + 1
                    )));
                }
            }
            let value: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("missing value on line {k}")))?
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value on line {k}")))?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("trailing fields on line {k}")));
            }
            tensor.entries[k] = value;
            advance_canonical(&mut expect, n);
        }
        if lines.next().transpose()?.map_or(false, |l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing data after final entry".into()));
        }
        Ok(tensor)
    }
}

fn parse_header_field(line: Option<std::io::Result<String>>, name: &str) -> Result<usize> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing header field {name}")))??;
    let rest = line
        .trim()
        .strip_prefix(name)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected '{name}=...', got {line:?}")))?;
    rest.parse()
        .map_err(|_| Error::Parse(format!("bad value for header field {name}")))
}

/// Samples GOTE(r, n): independent centered Gaussian canonical entries with
/// variance `r / multiset_perm_count(idx)`.  Entry of rank `k` consumes draw
/// `k` of the keyed stream, so the law is storage-layout independent.
pub fn sample_gote(r: usize, n: usize, key: &SeedKey) -> Result<SymTensor> {
    sample_gote_with_cap(r, n, key, DEFAULT_ENTRY_CAP)
}

pub fn sample_gote_with_cap(r: usize, n: usize, key: &SeedKey, cap: u128) -> Result<SymTensor> {
    let mut tensor = SymTensor::zeros_with_cap(r, n, cap)?;
    let mut stream = GaussianStream::new(key);
    let mut idx = vec![0usize; r];
    let rf = r as f64;
    for k in 0..tensor.entries.len() {
        let sigma = (rf / perm_count_sorted(&idx) as f64).sqrt();
        tensor.entries[k] = sigma * stream.next_normal();
        advance_canonical(&mut idx, n);
    }
    Ok(tensor)
}

/// Contraction along one repeated unit direction:
/// `M_ij = sum_s G[i, j, s_1, ..., s_{r-2}] w_{s_1} ... w_{s_{r-2}}`.
pub fn contract_pure(t: &SymTensor, w: &[f64]) -> Result<SymMatrix> {
    if t.order() < 3 {
        return Err(Error::Domain(format!(
            "contraction requires order >= 3, got {}",
            t.order()
        )));
    }
    if w.len() != t.dim() {
        return Err(Error::Shape(format!(
            "direction length {} for dimension {}",
            w.len(),
            t.dim()
        )));
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "contraction direction must be unit norm, got {norm}"
        )));
    }
    let dirs: Vec<&[f64]> = vec![w; t.order() - 2];
    Ok(contract_with(t, &dirs))
}

/// Contraction along `r - 2` possibly distinct directions.
pub fn contract_mixed(t: &SymTensor, dirs: &[Vec<f64>]) -> Result<SymMatrix> {
    if t.order() < 3 {
        return Err(Error::Domain(format!(
            "contraction requires order >= 3, got {}",
            t.order()
        )));
    }
    if dirs.len() != t.order() - 2 {
        return Err(Error::Shape(format!(
            "expected {} directions, got {}",
            t.order() - 2,
            dirs.len()
        )));
    }
    for d in dirs {
        if d.len() != t.dim() {
            return Err(Error::Shape(format!(
                "direction length {} for dimension {}",
                d.len(),
                t.dim()
            )));
        }
    }
    let refs: Vec<&[f64]> = dirs.iter().map(|d| d.as_slice()).collect();
    Ok(contract_with(t, &refs))
}

/// Shared contraction kernel: odometer over ordered slot tuples with
/// on-the-fly canonicalization of each lookup.
fn contract_with(t: &SymTensor, dirs: &[&[f64]]) -> SymMatrix {
    let n = t.dim();
    let r = t.order();
    let slots_len = r - 2;
    let mut m = SymMatrix::zeros(n);
    let mut slots = vec![0usize; slots_len];
    let mut key = vec![0usize; r];
    for i in 0..n {
        for j in i..n {
            slots.fill(0);
            let mut sum = 0.0;
            loop {
                let mut weight = 1.0;
                for (s, d) in slots.iter().zip(dirs) {
                    weight *= d[*s];
                }
                if weight != 0.0 {
                    key[..slots_len].copy_from_slice(&slots);
                    key[slots_len] = i;
                    key[slots_len + 1] = j;
                    key.sort_unstable();
                    sum += t.entries[t.rank_sorted(&key)] * weight;
                }
                // advance the odometer
                let mut pos = 0;
                loop {
                    if pos == slots_len {
                        break;
                    }
                    slots[pos] += 1;
                    if slots[pos] < n {
                        break;
                    }
                    slots[pos] = 0;
                    pos += 1;
                }
                if pos == slots_len {
                    break;
                }
            }
            m.set(i, j, sum);
        }
    }
    m
}

/// Frobenius inner product over the full hypercube:
/// `sum_idx perm_count(idx) * a_idx * b_idx` over canonical indices.
pub fn frobenius_inner(a: &SymTensor, b: &SymTensor) -> Result<f64> {
    if a.order() != b.order() || a.dim() != b.dim() {
        return Err(Error::Shape("tensor shape mismatch".into()));
    }
    let mut idx = vec![0usize; a.order()];
    let mut sum = 0.0;
    for k in 0..a.entries.len() {
        sum += perm_count_sorted(&idx) as f64 * a.entries[k] * b.entries[k];
        advance_canonical(&mut idx, a.dim());
    }
    Ok(sum)
}

/// Symmetric matrix stored as its packed upper triangle, column by column,
/// so the backing buffer is exactly the half-vectorization
/// `(A_00, A_01, A_11, A_02, A_12, A_22, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Offset of `(i, j)` with `i <= j` in packed column-major upper storage.
#[inline]
pub fn vech_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    /// Builds from `f(i, j)` evaluated once per pair `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                m.data[vech_index(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_vech(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * (n + 1) / 2 {
            return Err(Error::Shape(format!(
                "vech length {} for dimension {}",
                data.len(),
                n
            )));
        }
        Ok(SymMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[vech_index(i, j)]
    }

    /// Sets `A_ij` and, implicitly, its mirror.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[vech_index(i, j)] = value;
    }

    /// The packed buffer, which is the half-vectorization of the matrix.
    pub fn vech(&self) -> &[f64] {
        &self.data
    }

    pub fn to_array2(&self) -> ndarray::Array2<f64> {
        let mut a = ndarray::Array2::zeros((self.n, self.n));
        for j in 0..self.n {
            for i in 0..=j {
                let v = self.data[vech_index(i, j)];
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.n {
            for i in 0..=j {
                let v = self.data[vech_index(i, j)];
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum.sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, c: f64) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Shape("matrix dimension mismatch".into()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    /// Writes the full square matrix as CSV, row-major, 17 significant
    /// digits per value.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let mut line = String::new();
        for i in 0..self.n {
            line.clear();
            for j in 0..self.n {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_float(self.get(i, j)));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads a full square CSV matrix, requiring symmetry within 1e-12
    /// relative to the largest entry; mirror pairs are averaged.
    pub fn read_csv(input: &mut impl BufRead) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.trim().split(',').map(|f| f.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|_| Error::Parse("bad matrix value".into()))?);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("matrix CSV must be square".into()));
        }
        let maxabs = rows
            .iter()
            .flatten()
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut m = SymMatrix::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * maxabs {
                    return Err(Error::Domain(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }
}
