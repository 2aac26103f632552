//! Finite-n equivalent laws for contraction matrices.
//!
//! A pure contraction of GOTE(r, n) along a unit direction `w` has the same
//! law as
//!
//! ```text
//!   X = alpha U w w' + beta (V w' + w V') + theta Z
//! ```
//!
//! with scalar `U ~ N(0,1)`, vector `V ~ N(0, I_n)`, `Z ~ GOE(n)` all
//! independent, and coefficients depending only on r:
//!
//! ```text
//!   alpha^2 = (r-2)(r-3)/(r-1),  beta^2 = (r-2)/(r-1),  theta^2 = 1/(r-1)
//! ```
//!
//! An order-4 contraction along two unit directions `u, v` has the same law
//! as
//!
//! ```text
//!   X = (U (uv' + vu') + V1 u' + u V1' + V2 v' + v V2'
//!        + sqrt(1 + rho^2) Z) / sqrt(6),     V2 = rho V1 + sqrt(1-rho^2) W
//! ```
//!
//! with `rho = u'v` and `W ~ N(0, I_n)` independent of the rest.  These
//! samplers cost O(n^2) instead of the O(n^r) tensor route and are exact in
//! law, which the integration tests check against direct tensor sampling.

use crate::error::{Error, Result};
use crate::rng::{GaussianStream, SeedKey};
use crate::tensor::SymMatrix;

/// Coefficients of the pure-contraction equivalent law at order `r`.
#[derive(Clone, Copy, Debug)]
pub struct PureLawParams {
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

pub fn pure_params(r: usize) -> Result<PureLawParams> {
    if r < 3 {
        return Err(Error::Domain(format!(
            "pure contraction law requires order >= 3, got {r}"
        )));
    }
    let rf = r as f64;
    Ok(PureLawParams {
        r,
        alpha: ((rf - 2.0) * (rf - 3.0) / (rf - 1.0)).sqrt(),
        beta: ((rf - 2.0) / (rf - 1.0)).sqrt(),
        theta: (1.0 / (rf - 1.0)).sqrt(),
    })
}

/// Samples GOE(n): symmetric with independent centered Gaussian entries,
/// variance 2 on the diagonal and 1 off it.  Entry `(i, j)`, `i <= j`,
/// consumes draw `vech_index(i, j)` of the keyed stream.
pub fn sample_goe(n: usize, key: &SeedKey) -> SymMatrix {
    let mut stream = GaussianStream::new(key);
    let mut m = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let sigma = if i == j { std::f64::consts::SQRT_2 } else { 1.0 };
            m.set(i, j, sigma * stream.next_normal());
        }
    }
    m
}

fn check_unit(name: &str, x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "direction {name} must be unit norm, got {norm}"
        )));
    }
    Ok(())
}

/// Spike ingredients of one pure-law sample, enough to reconstruct the
/// low-rank part exactly (every edge and overlap check conditions on them).
#[derive(Clone, Debug)]
pub struct SpikeScalars {
    /// Coefficient of the rank-one `w w'` term before scaling by alpha.
    pub u: f64,
    /// The Gaussian vector of the `Vw' + wV'` term.
    pub v: Vec<f64>,
    /// `w' V`.
    pub t: f64,
    /// `|V|^2`.
    pub q: f64,
}

/// The rank-two part `P = alpha U ww' + beta (Vw' + wV')` of a sample.
pub fn spike_matrix(params: &PureLawParams, w: &[f64], s: &SpikeScalars) -> Result<SymMatrix> {
    let n = w.len();
    if s.v.len() != n {
        return Err(Error::Shape(format!(
            "spike vector length {} for dimension {n}",
            s.v.len()
        )));
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        params.alpha * s.u * w[i] * w[j] + params.beta * (s.v[i] * w[j] + w[i] * s.v[j])
    }))
}

/// Draws the pure-law sample `X = alpha U ww' + beta (Vw' + wV') + theta Z`.
///
/// One stream serves the whole sample: draw 0 is U, draws `1..=n` are V,
/// and draws from `n + 1` on fill Z in half-vectorization order.
pub fn sample_pure_equivalent(
    n: usize,
    w: &[f64],
    params: &PureLawParams,
    key: &SeedKey,
) -> Result<(SymMatrix, SpikeScalars)> {
    if w.len() != n {
        return Err(Error::Shape(format!(
            "direction length {} for dimension {n}",
            w.len()
        )));
    }
    check_unit("w", w)?;
    let mut stream = GaussianStream::new(key);
    let u = stream.next_normal();
    let v = stream.next_normal_vec(n);
    let mut m = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let sigma = if i == j { std::f64::consts::SQRT_2 } else { 1.0 };
            let spike = params.alpha * u * w[i] * w[j]
                + params.beta * (v[i] * w[j] + w[i] * v[j]);
            m.set(i, j, spike + params.theta * sigma * stream.next_normal());
        }
    }
    let t = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    let q = v.iter().map(|x| x * x).sum();
    Ok((m, SpikeScalars { u, v, t, q }))
}

/// Spike ingredients of one mixed-law sample.
#[derive(Clone, Debug)]
pub struct MixedScalars {
    pub u: f64,
    pub v1: Vec<f64>,
    /// Correlated with v1: `V2 = rho V1 + sqrt(1 - rho^2) W`.
    pub v2: Vec<f64>,
}

/// The rank-at-most-four part of a mixed sample, including the `1/sqrt(6)`
/// prefactor:
/// `Q = (1/sqrt(6)) [U (uv' + vu') + V1 u' + u V1' + V2 v' + v V2']`.
pub fn mixed_low_rank(u: &[f64], v: &[f64], s: &MixedScalars) -> Result<SymMatrix> {
    let n = u.len();
    if v.len() != n || s.v1.len() != n || s.v2.len() != n {
        return Err(Error::Shape("mixed spike dimension mismatch".into()));
    }
    let inv_sqrt6 = 1.0 / 6.0f64.sqrt();
    Ok(SymMatrix::from_fn(n, |i, j| {
        inv_sqrt6
            * (s.u * (u[i] * v[j] + v[i] * u[j])
                + s.v1[i] * u[j]
                + u[i] * s.v1[j]
                + s.v2[i] * v[j]
                + v[i] * s.v2[j])
    }))
}

/// Draws the order-4 mixed-law sample along unit directions `u` and `v`.
///
/// Draw layout: 0 is the scalar U, `1..=n` is V1, `n+1..=2n` is W, and the
/// GOE Z follows in half-vectorization order.
pub fn sample_mixed4_equivalent(
    n: usize,
    u: &[f64],
    v: &[f64],
    key: &SeedKey,
) -> Result<(SymMatrix, MixedScalars)> {
    if u.len() != n || v.len() != n {
        return Err(Error::Shape(format!(
            "direction lengths {} and {} for dimension {n}",
            u.len(),
            v.len()
        )));
    }
    check_unit("u", u)?;
    check_unit("v", v)?;
    let rho: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let mut stream = GaussianStream::new(key);
    let us = stream.next_normal();
    let v1 = stream.next_normal_vec(n);
    let w = stream.next_normal_vec(n);
    let ortho = (1.0 - rho * rho).max(0.0).sqrt();
    let v2: Vec<f64> = v1.iter().zip(&w).map(|(a, b)| rho * a + ortho * b).collect();
    let zscale = (1.0 + rho * rho).sqrt();
    let inv_sqrt6 = 1.0 / 6.0f64.sqrt();
    let mut m = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let sigma = if i == j { std::f64::consts::SQRT_2 } else { 1.0 };
            let low_rank = us * (u[i] * v[j] + v[i] * u[j])
                + v1[i] * u[j]
                + u[i] * v1[j]
                + v2[i] * v[j]
                + v[i] * v2[j];
            let val = inv_sqrt6 * (low_rank + zscale * sigma * stream.next_normal());
            m.set(i, j, val);
        }
    }
    Ok((m, MixedScalars { u: us, v1, v2 }))
}

/// Covariance of entries `(i, j)` and `(k, l)` of a pure contraction,
/// straight from the equivalent representation:
///
/// ```text
///   alpha^2 w_i w_j w_k w_l
///   + beta^2 (w_i w_k d_jl + w_i w_l d_jk + w_j w_k d_il + w_j w_l d_ik)
///   + theta^2 (d_ik d_jl + d_il d_jk)
/// ```
pub fn rep_cov_pure(
    params: &PureLawParams,
    w: &[f64],
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let a2 = params.alpha * params.alpha;
    let b2 = params.beta * params.beta;
    let t2 = params.theta * params.theta;
    a2 * w[i] * w[j] * w[k] * w[l]
        + b2 * (w[i] * w[k] * d(j, l)
            + w[i] * w[l] * d(j, k)
            + w[j] * w[k] * d(i, l)
            + w[j] * w[l] * d(i, k))
        + t2 * (d(i, k) * d(j, l) + d(i, l) * d(j, k))
}

/// Covariance of entries `(i, j)` and `(k, l)` of an order-4 mixed
/// contraction along unit `u, v`, from the equivalent representation.
/// With `rho = u'v`, `m(a,b) = u_a v_b + u_b v_a` and
/// `t(a,b) = u_a u_b + v_a v_b + rho m(a,b)`:
///
/// ```text
///   ( m(i,j) m(k,l)
///     + t(j,l) d_ik + t(j,k) d_il + t(i,l) d_jk + t(i,k) d_jl
///     + (1 + rho^2)(d_ik d_jl + d_il d_jk) ) / 6
/// ```
pub fn rep_cov_mixed4(
    u: &[f64],
    v: &[f64],
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> f64 {
    let rho: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let m = |a: usize, b: usize| u[a] * v[b] + u[b] * v[a];
    let t = |a: usize, b: usize| u[a] * u[b] + v[a] * v[b] + rho * m(a, b);
    (m(i, j) * m(k, l)
        + t(j, l) * d(i, k)
        + t(j, k) * d(i, l)
        + t(i, l) * d(j, k)
        + t(i, k) * d(j, l)
        + (1.0 + rho * rho) * (d(i, k) * d(j, l) + d(i, l) * d(j, k)))
        / 6.0
}

/// Non-trivial eigenpairs of `B = a xx' + b (xy' + yx')` for unit `x, y`
/// with overlap `rho = x'y`, restricted to span{x, y}.
#[derive(Clone, Copy, Debug)]
pub struct Rank2Eigen {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Coefficients of the unit eigenvectors `v = gamma x + delta y`.
    pub gamma_plus: f64,
    pub delta_plus: f64,
    pub gamma_minus: f64,
    pub delta_minus: f64,
}

impl Rank2Eigen {
    /// Materializes the (+ or -) eigenvector in the ambient space.
    pub fn eigenvector(&self, plus: bool, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (g, d) = if plus {
            (self.gamma_plus, self.delta_plus)
        } else {
            (self.gamma_minus, self.delta_minus)
        };
        x.iter().zip(y).map(|(a, b)| g * a + d * b).collect()
    }
}

/// Closed-form eigenstructure of `B = a xx' + b (xy' + yx')`:
///
/// ```text
///   lambda_pm = (a + 2 b rho +- sqrt(a^2 + 4 a b rho + 4 b^2)) / 2
///   s_pm      = sqrt(lambda_pm^2 + b^2 (1 - rho^2))
///   v_pm      = gamma_pm x + delta_pm y,
///   gamma_pm  = sign(b)(lambda_pm - b rho) / s_pm,   delta_pm = |b| / s_pm
/// ```
///
/// so that `x'v_pm = sign(b) lambda_pm / s_pm`.  The two roots satisfy
/// `lambda_+ + lambda_- = a + 2 b rho` and
/// `lambda_+ lambda_- = -b^2 (1 - rho^2)`.
pub fn rank2_eigenstructure(a: f64, b: f64, rho: f64) -> Result<Rank2Eigen> {
    if b == 0.0 {
        return Err(Error::Degenerate(
            "rank-2 eigenstructure needs b != 0; the b = 0 matrix is rank one".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("overlap rho = {rho} outside [-1, 1]")));
    }
    let disc = a * a + 4.0 * a * b * rho + 4.0 * b * b;
    debug_assert!(disc >= 0.0, "(a + 2 b rho)^2 + 4 b^2 (1 - rho^2) >= 0");
    let root = disc.max(0.0).sqrt();
    let mid = a + 2.0 * b * rho;
    let lambda_plus = 0.5 * (mid + root);
    let lambda_minus = 0.5 * (mid - root);
    let off = b * b * (1.0 - rho * rho);
    let sign = b.signum();
    let coeffs = |lambda: f64| -> Result<(f64, f64)> {
        let s = (lambda * lambda + off).sqrt();
        if s == 0.0 {
            return Err(Error::Degenerate(
                "eigenvector normalizer vanished (collinear directions with zero root)".into(),
            ));
        }
        Ok((sign * (lambda - b * rho) / s, b.abs() / s))
    };
    let (gamma_plus, delta_plus) = coeffs(lambda_plus)?;
    let (gamma_minus, delta_minus) = coeffs(lambda_minus)?;
    Ok(Rank2Eigen {
        lambda_plus,
        lambda_minus,
        gamma_plus,
        delta_plus,
        gamma_minus,
        delta_minus,
    })
}

/// Exact extreme eigenvalues of the spike part
/// `P = alpha U ww' + beta (Vw' + wV')` from its three scalar statistics:
///
/// ```text
///   lambda_{1,n}(P) = alpha U / 2 + beta t
///                     +- sqrt(alpha^2 U^2 + 4 alpha beta U t + 4 beta^2 q) / 2
/// ```
///
/// where `t = w'V` and `q = |V|^2 >= t^2`.  The discriminant equals
/// `(alpha U + 2 beta t)^2 + 4 beta^2 (q - t^2)`, so it is never negative.
pub fn spike_eigenvalues_exact(params: &PureLawParams, s: &SpikeScalars) -> (f64, f64) {
    let a = params.alpha * s.u;
    let bt = params.beta * s.t;
    let disc = (a + 2.0 * bt) * (a + 2.0 * bt)
        + 4.0 * params.beta * params.beta * (s.q - s.t * s.t).max(0.0);
    let root = disc.sqrt();
    (0.5 * (a + 2.0 * bt + root), 0.5 * (a + 2.0 * bt - root))
}
