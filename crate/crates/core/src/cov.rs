//! Closed-form covariances of contraction entries, assembly of the
//! half-vectorized covariance matrix, and the Frobenius / total-variation
//! bounds built on it.
//!
//! Two independent routes exist for every covariance: the seven-case
//! dispatch here, and the representation expansion in [`crate::law`]
//! (`rep_cov_pure`, `rep_cov_mixed4`).  Tests hold them to each other at
//! 1e-12; do not merge them.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, Eigh, UPLO};

use crate::error::{Error, Result};
use crate::law::{pure_params, PureLawParams};
use crate::tensor::vech_index;

/// Default cap on the side length of an assembled covariance matrix.
pub const DEFAULT_SIGMA_CAP: usize = 20_000;

/// Overlap pattern of two unordered entry positions `{i,j}` and `{k,l}`.
/// Every pattern lands in exactly one of the seven covariance cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexPairClass {
    /// Same diagonal entry twice: `Cov(M_ii, M_ii)`.
    VarDiag { i: usize },
    /// Same off-diagonal entry twice: `Cov(M_ij, M_ij)`, `i != j`.
    VarOffdiag { i: usize, j: usize },
    /// Two off-diagonal entries with no shared index.
    DisjointOffdiag { i: usize, j: usize, k: usize, l: usize },
    /// A diagonal entry against a disjoint off-diagonal one.
    DiagVsDisjoint { d: usize, k: usize, l: usize },
    /// Two distinct diagonal entries.
    DiagVsDiag { i: usize, k: usize },
    /// Two off-diagonal entries sharing one index `s`: `Cov(M_sp, M_sq)`.
    SharedRow { s: usize, p: usize, q: usize },
    /// A diagonal entry against an off-diagonal one in the same row.
    DiagVsShared { d: usize, l: usize },
}

/// Classifies an unordered pair of unordered index pairs.  Total: every
/// `((i,j),(k,l))` maps to exactly one case.
pub fn classify(ij: (usize, usize), kl: (usize, usize)) -> IndexPairClass {
    let (i, j) = if ij.0 <= ij.1 { ij } else { (ij.1, ij.0) };
    let (k, l) = if kl.0 <= kl.1 { kl } else { (kl.1, kl.0) };
    match (i == j, k == l) {
        (true, true) => {
            if i == k {
                IndexPairClass::VarDiag { i }
            } else {
                IndexPairClass::DiagVsDiag { i, k }
            }
        }
        (true, false) => classify_diag_offdiag(i, k, l),
        (false, true) => classify_diag_offdiag(k, i, j),
        (false, false) => {
            if (i, j) == (k, l) {
                IndexPairClass::VarOffdiag { i, j }
            } else if i == k {
                IndexPairClass::SharedRow { s: i, p: j, q: l }
            } else if i == l {
                IndexPairClass::SharedRow { s: i, p: j, q: k }
            } else if j == k {
                IndexPairClass::SharedRow { s: j, p: i, q: l }
            } else if j == l {
                IndexPairClass::SharedRow { s: j, p: i, q: k }
            } else {
                IndexPairClass::DisjointOffdiag { i, j, k, l }
            }
        }
    }
}

fn classify_diag_offdiag(d: usize, k: usize, l: usize) -> IndexPairClass {
    if d == k {
        IndexPairClass::DiagVsShared { d, l }
    } else if d == l {
        IndexPairClass::DiagVsShared { d, l: k }
    } else {
        IndexPairClass::DiagVsDisjoint { d, k, l }
    }
}

/// Covariance of pure-contraction entries `M_ij` and `M_kl` at order `r`
/// along the unit direction `w`, by seven-case dispatch:
///
/// ```text
///   Var(M_ii)           = 2 th2 + 4 b2 w_i^2 + a2 w_i^4
///   Var(M_ij)           = th2 + b2 (w_i^2 + w_j^2) + a2 w_i^2 w_j^2
///   Cov(M_ij, M_kl)     = a2 w_i w_j w_k w_l              (disjoint)
///   Cov(M_dd, M_kl)     = a2 w_d^2 w_k w_l                (disjoint)
///   Cov(M_ii, M_kk)     = a2 w_i^2 w_k^2
///   Cov(M_sp, M_sq)     = b2 w_p w_q + a2 w_s^2 w_p w_q
///   Cov(M_dd, M_dl)     = 2 b2 w_d w_l + a2 w_d^3 w_l
/// ```
///
/// with `a2, b2, th2` the squared coefficients from `pure_params(r)`.
pub fn cov_pure(r: usize, w: &[f64], ij: (usize, usize), kl: (usize, usize)) -> Result<f64> {
    let params = pure_params(r)?;
    Ok(cov_pure_with(&params, w, ij, kl))
}

pub fn cov_pure_with(
    params: &PureLawParams,
    w: &[f64],
    ij: (usize, usize),
    kl: (usize, usize),
) -> f64 {
    let a2 = params.alpha * params.alpha;
    let b2 = params.beta * params.beta;
    let th2 = params.theta * params.theta;
    match classify(ij, kl) {
        IndexPairClass::VarDiag { i } => {
            2.0 * th2 + 4.0 * b2 * w[i] * w[i] + a2 * w[i].powi(4)
        }
        IndexPairClass::VarOffdiag { i, j } => {
            th2 + b2 * (w[i] * w[i] + w[j] * w[j]) + a2 * w[i] * w[i] * w[j] * w[j]
        }
        IndexPairClass::DisjointOffdiag { i, j, k, l } => a2 * w[i] * w[j] * w[k] * w[l],
        IndexPairClass::DiagVsDisjoint { d, k, l } => a2 * w[d] * w[d] * w[k] * w[l],
        IndexPairClass::DiagVsDiag { i, k } => a2 * w[i] * w[i] * w[k] * w[k],
        IndexPairClass::SharedRow { s, p, q } => {
            b2 * w[p] * w[q] + a2 * w[s] * w[s] * w[p] * w[q]
        }
        IndexPairClass::DiagVsShared { d, l } => {
            2.0 * b2 * w[d] * w[l] + a2 * w[d].powi(3) * w[l]
        }
    }
}

/// Covariance of order-4 mixed-contraction entries along unit `u, v`.
/// With `rho = u'v` and `m(a,b) = u_a v_b + u_b v_a`:
///
/// ```text
///   Var(M_ii)       = (1+rho^2)/3 + (4/3) rho u_i v_i
///                     + (2/3)(u_i^2 + v_i^2) + (2/3) u_i^2 v_i^2
///   Var(M_ij)       = (1+rho^2)/6 + (rho/3)(u_i v_i + u_j v_j)
///                     + (u_i^2+u_j^2+v_i^2+v_j^2)/6 + m(i,j)^2/6
///   Cov(M_ij, M_kl) = m(i,j) m(k,l)/6                     (disjoint)
///   Cov(M_dd, M_kl) = u_d v_d m(k,l)/3                    (disjoint)
///   Cov(M_ii, M_kk) = (2/3) u_i v_i u_k v_k
///   Cov(M_sp, M_sq) = (u_p u_q + v_p v_q + rho m(p,q))/6 + m(s,p) m(s,q)/6
///   Cov(M_dd, M_dl) = (u_d u_l + v_d v_l)/3 + (rho/3) m(d,l)
///                     + (1/3) u_d v_d m(d,l)
/// ```
pub fn cov_mixed4(u: &[f64], v: &[f64], ij: (usize, usize), kl: (usize, usize)) -> f64 {
    let rho: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let m = |a: usize, b: usize| u[a] * v[b] + u[b] * v[a];
    match classify(ij, kl) {
        IndexPairClass::VarDiag { i } => {
            (1.0 + rho * rho) / 3.0
                + (4.0 / 3.0) * rho * u[i] * v[i]
                + (2.0 / 3.0) * (u[i] * u[i] + v[i] * v[i])
                + (2.0 / 3.0) * u[i] * u[i] * v[i] * v[i]
        }
        IndexPairClass::VarOffdiag { i, j } => {
            (1.0 + rho * rho) / 6.0
                + (rho / 3.0) * (u[i] * v[i] + u[j] * v[j])
                + (u[i] * u[i] + u[j] * u[j] + v[i] * v[i] + v[j] * v[j]) / 6.0
                + m(i, j) * m(i, j) / 6.0
        }
        IndexPairClass::DisjointOffdiag { i, j, k, l } => m(i, j) * m(k, l) / 6.0,
        IndexPairClass::DiagVsDisjoint { d, k, l } => u[d] * v[d] * m(k, l) / 3.0,
        IndexPairClass::DiagVsDiag { i, k } => (2.0 / 3.0) * u[i] * v[i] * u[k] * v[k],
        IndexPairClass::SharedRow { s, p, q } => {
            (u[p] * u[q] + v[p] * v[q] + rho * m(p, q)) / 6.0 + m(s, p) * m(s, q) / 6.0
        }
        IndexPairClass::DiagVsShared { d, l } => {
            (u[d] * u[l] + v[d] * v[l]) / 3.0
                + (rho / 3.0) * m(d, l)
                + (1.0 / 3.0) * u[d] * v[d] * m(d, l)
        }
    }
}

fn check_unit(name: &str, x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "direction {name} must be unit norm, got {norm}"
        )));
    }
    Ok(())
}

/// Entry-covariance model of one contraction matrix.
#[derive(Clone, Debug)]
pub enum CovModel {
    Pure { params: PureLawParams, w: Vec<f64> },
    Mixed4 { u: Vec<f64>, v: Vec<f64> },
}

impl CovModel {
    pub fn pure(r: usize, w: Vec<f64>) -> Result<Self> {
        check_unit("w", &w)?;
        Ok(CovModel::Pure { params: pure_params(r)?, w })
    }

    pub fn mixed4(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Shape("direction length mismatch".into()));
        }
        check_unit("u", &u)?;
        check_unit("v", &v)?;
        Ok(CovModel::Mixed4 { u, v })
    }

    pub fn n(&self) -> usize {
        match self {
            CovModel::Pure { w, .. } => w.len(),
            CovModel::Mixed4 { u, .. } => u.len(),
        }
    }

    pub fn entry_cov(&self, ij: (usize, usize), kl: (usize, usize)) -> f64 {
        match self {
            CovModel::Pure { params, w } => cov_pure_with(params, w, ij, kl),
            CovModel::Mixed4 { u, v } => cov_mixed4(u, v, ij, kl),
        }
    }

    /// Assembles `Cov(vech(M))`, a dense symmetric matrix of side
    /// `n(n+1)/2` in half-vectorization order.
    pub fn assemble_sigma(&self) -> Result<Array2<f64>> {
        self.assemble_sigma_with_cap(DEFAULT_SIGMA_CAP)
    }

    pub fn assemble_sigma_with_cap(&self, cap: usize) -> Result<Array2<f64>> {
        let n = self.n();
        let side = n * (n + 1) / 2;
        if side > cap {
            return Err(Error::Capacity { required: side as u128, cap: cap as u128 });
        }
        let pairs = vech_pairs(n);
        let mut sigma = Array2::zeros((side, side));
        for a in 0..side {
            for b in a..side {
                let c = self.entry_cov(pairs[a], pairs[b]);
                sigma[[a, b]] = c;
                sigma[[b, a]] = c;
            }
        }
        Ok(sigma)
    }
}

/// Entry positions `(i, j)`, `i <= j`, in half-vectorization order.
pub fn vech_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            debug_assert_eq!(pairs.len(), vech_index(i, j));
            pairs.push((i, j));
        }
    }
    pairs
}

/// The 0/1 selection operator `L` with `vech(A) = L vec(A)` for symmetric
/// `A`, where `vec` stacks columns.  Each row holds a single 1, so
/// `L L' = I` exactly.
#[derive(Clone, Copy, Debug)]
pub struct EliminationMatrix {
    n: usize,
}

impl EliminationMatrix {
    pub fn new(n: usize) -> Self {
        EliminationMatrix { n }
    }

    /// Dense `n(n+1)/2 x n^2` form.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n;
        let mut l = Array2::zeros((n * (n + 1) / 2, n * n));
        for j in 0..n {
            for i in 0..=j {
                l[[vech_index(i, j), j * n + i]] = 1.0;
            }
        }
        l
    }

    /// Applies `L` to a column-stacked square matrix.
    pub fn apply_vec(&self, vec_a: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if vec_a.len() != n * n {
            return Err(Error::Shape(format!(
                "vec length {} for dimension {n}",
                vec_a.len()
            )));
        }
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                out.push(vec_a[j * n + i]);
            }
        }
        Ok(out)
    }
}

/// `|Sigma_{u,v} - Sigma_{u,u}|_F` from exact assemblies.
pub fn frob_diff(u: &[f64], v: &[f64]) -> Result<f64> {
    let suv = CovModel::mixed4(u.to_vec(), v.to_vec())?.assemble_sigma()?;
    let suu = CovModel::mixed4(u.to_vec(), u.to_vec())?.assemble_sigma()?;
    Ok((&suv - &suu).iter().map(|t| t * t).sum::<f64>().sqrt())
}

/// The closed-form bound `5 n |u - v|_2` on `frob_diff`.
pub fn frob_diff_bound(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape("direction length mismatch".into()));
    }
    check_unit("u", u)?;
    check_unit("v", v)?;
    let dist = u
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(5.0 * u.len() as f64 * dist)
}

/// Two-sided bound on the total-variation distance between the entry laws
/// of the contractions along `(u, u)` and `(u, v)`:
///
/// ```text
///   Delta = |Sigma_uu^{-1/2} Sigma_uv Sigma_uu^{-1/2} - I|_F
///   bounds = (min(1, Delta)/100, (3/2) min(1, Delta))
/// ```
///
/// The inverse square root uses a full symmetric eigendecomposition with
/// eigenvalues floored at 1e-10; an eigenvalue below -1e-8 is a numeric
/// error (the assembled matrix must be PSD).
pub fn tv_bound(u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    let suu = CovModel::mixed4(u.to_vec(), u.to_vec())?.assemble_sigma()?;
    let suv = CovModel::mixed4(u.to_vec(), v.to_vec())?.assemble_sigma()?;
    let (eigs, q) = suu
        .eigh(UPLO::Upper)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e}")))?;
    if let Some(&bad) = eigs.iter().find(|&&l| l < -1e-8) {
        return Err(Error::Numeric(format!(
            "covariance matrix has eigenvalue {bad} below -1e-8"
        )));
    }
    let side = eigs.len();
    let mut inv_sqrt = Array2::zeros((side, side));
    for (k, &l) in eigs.iter().enumerate() {
        let scale = 1.0 / l.max(1e-10).sqrt();
        let col = q.column(k);
        for a in 0..side {
            for b in 0..side {
                inv_sqrt[[a, b]] += scale * col[a] * col[b];
            }
        }
    }
    let whitened = inv_sqrt.dot(&suv).dot(&inv_sqrt);
    let mut delta2 = 0.0;
    for a in 0..side {
        for b in 0..side {
            let d = whitened[[a, b]] - if a == b { 1.0 } else { 0.0 };
            delta2 += d * d;
        }
    }
    let delta = delta2.sqrt().min(1.0);
    Ok((delta / 100.0, 1.5 * delta))
}

/// Smallest eigenvalue of an assembled covariance matrix; the PSD check.
pub fn min_sigma_eigenvalue(sigma: &Array2<f64>) -> Result<f64> {
    let eigs = sigma
        .eigvalsh(UPLO::Upper)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e}")))?;
    Ok(eigs.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{rep_cov_mixed4, rep_cov_pure};
    use crate::rng::{GaussianStream, SeedKey};
    use approx::assert_abs_diff_eq;

    /// Brute-force classifier: compare by multiset overlap counts only.
    fn classify_brute(ij: (usize, usize), kl: (usize, usize)) -> &'static str {
        let (i, j) = ij;
        let (k, l) = kl;
        let d1 = i == j;
        let d2 = k == l;
        let mut shared = 0;
        let mut first: Vec<usize> = vec![i, j];
        for x in [k, l] {
            if let Some(pos) = first.iter().position(|&y| y == x) {
                first.remove(pos);
                shared += 1;
            }
        }
        match (d1, d2, shared) {
            (true, true, 2) => "var-diag",
            (true, true, 0) => "diag-vs-diag",
            (false, false, 2) => "var-offdiag",
            (false, false, 1) => "shared-row",
            (false, false, 0) => "disjoint-offdiag",
            (true, false, 1) | (false, true, 1) => "diag-vs-shared",
            (true, false, 0) | (false, true, 0) => "diag-vs-disjoint",
            other => panic!("impossible overlap pattern {other:?}"),
        }
    }

    fn class_name(c: IndexPairClass) -> &'static str {
        match c {
            IndexPairClass::VarDiag { .. } => "var-diag",
            IndexPairClass::VarOffdiag { .. } => "var-offdiag",
            IndexPairClass::DisjointOffdiag { .. } => "disjoint-offdiag",
            IndexPairClass::DiagVsDisjoint { .. } => "diag-vs-disjoint",
            IndexPairClass::DiagVsDiag { .. } => "diag-vs-diag",
            IndexPairClass::SharedRow { .. } => "shared-row",
            IndexPairClass::DiagVsShared { .. } => "diag-vs-shared",
        }
    }

    #[test]
    fn classification_matches_brute_force_on_all_small_patterns() {
        let n = 5;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert_eq!(
                            class_name(classify((i, j), (k, l))),
                            classify_brute((i, j), (k, l)),
                            "indices ({i},{j}),({k},{l})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn classification_is_order_invariant() {
        let cases = [((0, 1), (2, 3)), ((1, 1), (1, 2)), ((0, 2), (2, 4))];
        for (ij, kl) in cases {
            let base = classify(ij, kl);
            assert_eq!(base, classify((ij.1, ij.0), kl));
            assert_eq!(base, classify(ij, (kl.1, kl.0)));
        }
    }

    #[test]
    fn pure_variances_at_basis_direction() {
        // r = 4, w = first basis vector: the entry containing the spike
        // coordinate has variance 4, entries away from it have 1/3.
        let mut w = vec![0.0; 5];
        w[0] = 1.0;
        assert_abs_diff_eq!(cov_pure(4, &w, (0, 0), (0, 0)).unwrap(), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            cov_pure(4, &w, (1, 2), (1, 2)).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-14
        );
        assert!(cov_pure(2, &w, (0, 0), (0, 0)).is_err());
    }

    #[test]
    fn mixed_variance_away_from_both_directions() {
        // u = e1, v = e2: an entry meeting neither direction keeps only the
        // (1 + rho^2)/6 term with rho = 0.
        let n = 5;
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        u[0] = 1.0;
        v[1] = 1.0;
        assert_abs_diff_eq!(cov_mixed4(&u, &v, (2, 3), (2, 3)), 1.0 / 6.0, epsilon = 1e-14);
        // u = v = e1 at the spike entry reproduces the pure r = 4 value 4.
        assert_abs_diff_eq!(cov_mixed4(&u, &u, (0, 0), (0, 0)), 4.0, epsilon = 1e-14);
    }

    fn random_unit(stream: &mut GaussianStream, n: usize) -> Vec<f64> {
        stream.next_unit_vec(n)
    }

    #[test]
    fn dispatch_route_equals_representation_route_pure() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(13));
        let n = 6;
        for r in 3..=8 {
            let params = pure_params(r).unwrap();
            let w = random_unit(&mut stream, n);
            // One representative per class plus a scan over all pairs.
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let lhs = cov_pure_with(&params, &w, (i, j), (k, l));
                            let rhs = rep_cov_pure(&params, &w, i, j, k, l);
                            assert!(
                                (lhs - rhs).abs() < 1e-12,
                                "r={r} ({i},{j}),({k},{l}): {lhs} vs {rhs}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dispatch_route_equals_representation_route_mixed() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(14));
        let n = 6;
        for _ in 0..4 {
            let u = random_unit(&mut stream, n);
            let v = random_unit(&mut stream, n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let lhs = cov_mixed4(&u, &v, (i, j), (k, l));
                            let rhs = rep_cov_mixed4(&u, &v, i, j, k, l);
                            assert!(
                                (lhs - rhs).abs() < 1e-12,
                                "({i},{j}),({k},{l}): {lhs} vs {rhs}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_at_equal_directions_reduces_to_pure_order_4() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(15));
        let n = 5;
        let params = pure_params(4).unwrap();
        for _ in 0..8 {
            let u = random_unit(&mut stream, n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mixed = cov_mixed4(&u, &u, (i, j), (k, l));
                            let pure = cov_pure_with(&params, &u, (i, j), (k, l));
                            assert!((mixed - pure).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn elimination_matrix_rows_are_orthonormal() {
        for n in [1, 2, 3, 5] {
            let l = EliminationMatrix::new(n).to_dense();
            let gram = l.dot(&l.t());
            let side = n * (n + 1) / 2;
            for a in 0..side {
                for b in 0..side {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert_eq!(gram[[a, b]], want);
                }
            }
        }
    }

    #[test]
    fn elimination_matrix_extracts_vech() {
        let n = 4;
        let mut stream = GaussianStream::new(&SeedKey::from_u64(16));
        let m = crate::tensor::SymMatrix::from_fn(n, |_, _| stream.next_normal());
        let a = m.to_array2();
        // Column-stacked vec.
        let mut vec_a = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vec_a.push(a[[i, j]]);
            }
        }
        let lv = EliminationMatrix::new(n).apply_vec(&vec_a).unwrap();
        assert_eq!(lv.as_slice(), m.vech());
        let dense = EliminationMatrix::new(n).to_dense();
        let vec_arr = ndarray::Array1::from(vec_a);
        let lv2 = dense.dot(&vec_arr);
        assert_eq!(lv2.as_slice().unwrap(), m.vech());
    }

    #[test]
    fn sigma_spectrum_sandwich_for_equal_directions() {
        // Covariance of vech for u = v: eigenvalues stay inside [1/3, 4].
        let mut stream = GaussianStream::new(&SeedKey::from_u64(17));
        let n = 6;
        for _ in 0..50 {
            let u = random_unit(&mut stream, n);
            let sigma = CovModel::mixed4(u.clone(), u.clone())
                .unwrap()
                .assemble_sigma()
                .unwrap();
            let eigs = sigma.eigvalsh(UPLO::Upper).unwrap();
            let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(min >= 1.0 / 3.0 - 1e-8, "min eigenvalue {min}");
            assert!(max <= 4.0 + 1e-8, "max eigenvalue {max}");
        }
    }

    #[test]
    fn sigma_assembly_respects_cap_and_psd() {
        let mut w = vec![0.0; 8];
        w[3] = 1.0;
        let model = CovModel::pure(5, w).unwrap();
        assert!(matches!(
            model.assemble_sigma_with_cap(10),
            Err(Error::Capacity { .. })
        ));
        let sigma = model.assemble_sigma().unwrap();
        assert!(min_sigma_eigenvalue(&sigma).unwrap() >= -1e-8);
    }

    #[test]
    fn frobenius_difference_and_bound() {
        let n = 20;
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        assert_abs_diff_eq!(frob_diff(&u, &u).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(frob_diff_bound(&u, &u).unwrap(), 0.0, epsilon = 1e-14);

        let gamma = 0.1f64;
        let mut v = vec![0.0; n];
        v[0] = (1.0 - gamma * gamma).sqrt();
        v[1] = gamma;
        let diff = frob_diff(&u, &v).unwrap();
        let bound = frob_diff_bound(&u, &v).unwrap();
        assert!(diff <= bound + 1e-8, "diff {diff} bound {bound}");
        // The difference really is of order gamma * n.
        let ratio = diff / (gamma * n as f64);
        assert!(ratio > 0.05 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn frobenius_bound_holds_for_random_pairs() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(18));
        let n = 7;
        for _ in 0..100 {
            let u = random_unit(&mut stream, n);
            let v = random_unit(&mut stream, n);
            let diff = frob_diff(&u, &v).unwrap();
            let bound = frob_diff_bound(&u, &v).unwrap();
            assert!(diff <= bound + 1e-8, "diff {diff} bound {bound}");
        }
    }

    #[test]
    fn tv_bound_endpoints() {
        let n = 15;
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        let (lo, hi) = tv_bound(&u, &u).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(hi, 0.0, epsilon = 1e-10);

        // Orthogonal directions at this size saturate the clamp.
        let mut v = vec![0.0; n];
        v[1] = 1.0;
        let (lo, hi) = tv_bound(&u, &v).unwrap();
        assert_abs_diff_eq!(hi, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lo, 0.01, epsilon = 1e-12);
        assert!(lo <= hi);
    }
}
