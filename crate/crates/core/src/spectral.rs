//! Eigendecomposition, spectral measures, semicircle analytics, and the
//! directional limit mixture.
//!
//! Everything here lives on explicit scales.  Semicircle functions take the
//! variance parameter directly.  The directional limit is canonical on the
//! unit-variance scale (matrix over `theta sqrt(n)`), where the continuous
//! spike component `nu` has density
//!
//! ```text
//!   (1 + b) / ((1 + b)^2 - b x^2) * f_sc(x; 1),     b = beta'^2
//! ```
//!
//! and mass `1/b`; `scaled(theta)` pushes forward to the `M/sqrt(n)` scale.

use ndarray::{Array2, ArrayView1};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{fmt_float, SymMatrix};

/// Full symmetric eigendecomposition, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, column `i` paired with `eigenvalues[i]`.
    pub eigenvectors: Array2<f64>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(i)
    }
}

/// Eigendecomposition of a packed symmetric matrix.
pub fn eigh(m: &SymMatrix) -> Result<EigenSystem> {
    eigh_dense_unchecked(&m.to_array2())
}

/// Eigendecomposition of a dense matrix, requiring symmetry within 1e-12.
pub fn eigh_dense(a: &Array2<f64>) -> Result<EigenSystem> {
    check_symmetric(a)?;
    eigh_dense_unchecked(a)
}

fn check_symmetric(a: &Array2<f64>) -> Result<()> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::Shape(format!("matrix is {rows} x {cols}, not square")));
    }
    for i in 0..rows {
        for j in (i + 1)..cols {
            if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "matrix not symmetric at ({i}, {j}): {} vs {}",
                    a[[i, j]],
                    a[[j, i]]
                )));
            }
        }
    }
    Ok(())
}

fn eigh_dense_unchecked(a: &Array2<f64>) -> Result<EigenSystem> {
    let (eigs, vecs) = a
        .eigh(UPLO::Upper)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e}")))?;
    let n = eigs.len();
    // LAPACK returns ascending order; flip to descending and fix each
    // eigenvector's sign so the first entry above 1e-12 is positive, making
    // the output deterministic up to eigenvalue ties.
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Array2::zeros((n, n));
    for (out_col, in_col) in (0..n).rev().enumerate() {
        eigenvalues.push(eigs[in_col]);
        let col = vecs.column(in_col);
        let flip = col
            .iter()
            .find(|v| v.abs() > 1e-12)
            .map_or(1.0, |v| if *v < 0.0 { -1.0 } else { 1.0 });
        for i in 0..n {
            eigenvectors[[i, out_col]] = flip * col[i];
        }
    }
    Ok(EigenSystem { eigenvalues, eigenvectors })
}

/// Descending eigenvalues only.
pub fn eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let eigs = m
        .to_array2()
        .eigvalsh(UPLO::Upper)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e}")))?;
    let mut out: Vec<f64> = eigs.to_vec();
    out.reverse();
    Ok(out)
}

/// Operator norm, `max_i |lambda_i|`.
pub fn op_norm(m: &SymMatrix) -> Result<f64> {
    let eigs = eigenvalues(m)?;
    Ok(eigs.iter().fold(0.0f64, |acc, l| acc.max(l.abs())))
}

/// Semicircle density `sqrt(4 sigma2 - x^2) / (2 pi sigma2)` on
/// `|x| <= 2 sqrt(sigma2)`.
pub fn semicircle_density(x: f64, sigma2: f64) -> Result<f64> {
    if sigma2 <= 0.0 {
        return Err(Error::Domain(format!("variance must be positive, got {sigma2}")));
    }
    let supp = 4.0 * sigma2 - x * x;
    if supp <= 0.0 {
        return Ok(0.0);
    }
    Ok(supp.sqrt() / (2.0 * std::f64::consts::PI * sigma2))
}

/// Closed-form semicircle CDF:
/// `1/2 + x sqrt(4 sigma2 - x^2) / (4 pi sigma2) + asin(x / 2 sigma) / pi`.
pub fn semicircle_cdf(x: f64, sigma2: f64) -> Result<f64> {
    if sigma2 <= 0.0 {
        return Err(Error::Domain(format!("variance must be positive, got {sigma2}")));
    }
    let edge = 2.0 * sigma2.sqrt();
    if x <= -edge {
        return Ok(0.0);
    }
    if x >= edge {
        return Ok(1.0);
    }
    let pi = std::f64::consts::PI;
    let val = 0.5 + x * (4.0 * sigma2 - x * x).sqrt() / (4.0 * pi * sigma2)
        + (x / edge).asin() / pi;
    Ok(val.clamp(0.0, 1.0))
}

/// Stieltjes transform of the standard semicircle,
/// `s(z) = (-z + sqrt(z^2 - 4)) / 2`, on the branch with `Im s > 0` for
/// `Im z > 0`.  Real `z` with `|z| > 2` is admitted as the boundary limit,
/// which is the root with `|s| <= 1`.
pub fn stieltjes_semicircle(z: Complex64) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::Domain("lower half-plane argument".into()));
    }
    if z.im == 0.0 {
        if z.re.abs() <= 2.0 {
            return Err(Error::Domain(format!(
                "real argument {} inside the bulk [-2, 2]; use the density",
                z.re
            )));
        }
        let root = (z.re * z.re - 4.0).sqrt();
        return Ok(Complex64::new(0.5 * (-z.re + z.re.signum() * root), 0.0));
    }
    let w = (z * z - 4.0).sqrt();
    let s = 0.5 * (-z + w);
    if s.im > 0.0 {
        Ok(s)
    } else {
        Ok(0.5 * (-z - w))
    }
}

/// Stieltjes transform of the directional limit on the unit-variance scale:
///
/// ```text
///   s(z) = rho^2 s_sc(z) / (1 - b s_sc(z)^2) + (1 - rho^2) s_sc(z),
/// ```
///
/// with `b = beta'^2`.  Near the poles `+-(beta' + 1/beta')` (within 1e-6)
/// the rational form is unusable and a pole error reports the location.
pub fn limit_stieltjes(z: Complex64, rho: f64, beta_prime: f64) -> Result<Complex64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("overlap rho = {rho} outside [-1, 1]")));
    }
    if beta_prime <= 1.0 {
        return Err(Error::Domain(format!(
            "beta' must exceed 1 (order >= 4), got {beta_prime}"
        )));
    }
    let pole = beta_prime + 1.0 / beta_prime;
    for p in [pole, -pole] {
        if (z - Complex64::new(p, 0.0)).norm() < 1e-6 {
            return Err(Error::Pole { location: p });
        }
    }
    let s = stieltjes_semicircle(z)?;
    let b = beta_prime * beta_prime;
    Ok(rho * rho * s / (1.0 - b * s * s) + (1.0 - rho * rho) * s)
}

/// Residue of `limit_stieltjes` at `z = beta' + 1/beta'`:
/// `-rho^2 (1 - 1/beta'^2) / 2`.  By symmetry the residue at the negative
/// pole is its negation... no: the measure is even, the atom masses are
/// equal, and the residue of a Stieltjes transform at an atom is minus the
/// mass, hence the same value at both poles.
pub fn limit_stieltjes_residue(rho: f64, beta_prime: f64) -> f64 {
    let b = beta_prime * beta_prime;
    -rho * rho * (1.0 - 1.0 / b) / 2.0
}

/// Finite measure given by weighted atoms, kept sorted by location.
#[derive(Clone, Debug)]
pub struct WeightedSpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl WeightedSpectralMeasure {
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !loc.is_finite() || !w.is_finite() {
                return Err(Error::Domain("non-finite atom".into()));
            }
            if w < 0.0 {
                return Err(Error::Domain(format!("negative atom weight {w}")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(WeightedSpectralMeasure { atoms })
    }

    /// Empirical spectral distribution: weight `1/n` per eigenvalue.
    pub fn esd(eigenvalues: &[f64]) -> Self {
        let w = 1.0 / eigenvalues.len() as f64;
        let mut atoms: Vec<(f64, f64)> = eigenvalues.iter().map(|&l| (l, w)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        WeightedSpectralMeasure { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|&(x, w)| x * w).sum()
    }

    /// Right-continuous CDF (raw cumulative weight).
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|&&(loc, _)| loc <= x)
            .map(|&(_, w)| w)
            .sum()
    }

    /// Stieltjes transform `sum_i w_i / (loc_i - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(loc, w)| w / (Complex64::new(loc, 0.0) - z))
            .sum()
    }

    /// CSV rows `location,weight` in location order, 17 significant digits.
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "location,weight")?;
        for &(loc, w) in &self.atoms {
            writeln!(out, "{},{}", fmt_float(loc), fmt_float(w))?;
        }
        Ok(())
    }
}

/// Spectral measure seen from a unit direction: atoms
/// `(lambda_i, (x' u_i)^2)`, total weight 1.
pub fn directional_measure(es: &EigenSystem, x: &[f64]) -> Result<WeightedSpectralMeasure> {
    let n = es.n();
    if x.len() != n {
        return Err(Error::Shape(format!(
            "direction length {} for dimension {n}",
            x.len()
        )));
    }
    let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "direction must be unit norm, got {norm}"
        )));
    }
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        let overlap: f64 = es.eigenvector(i).iter().zip(x).map(|(a, b)| a * b).sum();
        atoms.push((es.eigenvalues[i], overlap * overlap));
    }
    WeightedSpectralMeasure::from_atoms(atoms)
}

/// Limit of the directional spectral measure: a continuous mixture of the
/// unit semicircle and the spike component `nu`, plus two symmetric atoms.
///
/// Canonical on the unit-variance scale with `scale = 1`; `scaled(theta)`
/// yields the pushforward under `x -> theta x`.
#[derive(Clone, Debug)]
pub struct LimitMixture {
    rho: f64,
    beta_prime: f64,
    scale: f64,
    /// `(location, mass)`, empty when beta' = 1 (order 3).
    pub atoms: Vec<(f64, f64)>,
}

impl LimitMixture {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Continuous part of the density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let c = self.scale;
        let y = x / c;
        if y * y >= 4.0 {
            return 0.0;
        }
        let b = self.beta_prime * self.beta_prime;
        let sc = (4.0 - y * y).sqrt() / (2.0 * std::f64::consts::PI);
        let rho2 = self.rho * self.rho;
        // (1+b)^2 - b y^2 = (1-b)^2 + b (4 - y^2), nonzero inside (-2, 2).
        let spike = (1.0 + b) / ((1.0 - b) * (1.0 - b) + b * (4.0 - y * y));
        ((1.0 - rho2) * sc + rho2 * spike * sc) / c
    }

    /// Mass of the continuous part below `x`, by adaptive quadrature to
    /// 1e-8 after the substitution `y = 2 sin(phi)`, which removes the
    /// edge singularity of both the semicircle factor and the order-3
    /// arcsine degeneration.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        let y = (x / self.scale).clamp(-2.0, 2.0);
        let phi_hi = (y / 2.0).asin();
        let phi_lo = -std::f64::consts::FRAC_PI_2;
        if phi_hi <= phi_lo {
            return 0.0;
        }
        let b = self.beta_prime * self.beta_prime;
        let rho2 = self.rho * self.rho;
        // (1+b)^2 - 4b sin^2 = (1-b)^2 + 4b cos^2: the right-hand form keeps
        // cos^2 * spike finite at the endpoints even when b = 1 (order 3).
        let f = |phi: f64| {
            let cos2 = phi.cos().powi(2);
            let spike_cos2 = (1.0 + b) * cos2 / ((1.0 - b) * (1.0 - b) + 4.0 * b * cos2);
            (2.0 / std::f64::consts::PI) * ((1.0 - rho2) * cos2 + rho2 * spike_cos2)
        };
        integrate(&f, phi_lo, phi_hi, 1e-8)
    }

    /// Full right-continuous CDF: continuous part plus atom steps.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut c = self.continuous_cdf(x);
        for &(loc, mass) in &self.atoms {
            if loc <= x {
                c += mass;
            }
        }
        c.min(1.0)
    }

    /// Mass of the continuous part over the whole support.
    pub fn continuous_mass(&self) -> f64 {
        self.continuous_cdf(2.0 * self.scale)
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, m)| m).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// Quadrature mass of the spike component `nu` alone; analytically
    /// `1 / beta'^2`.
    pub fn nu_mass(&self) -> f64 {
        let b = self.beta_prime * self.beta_prime;
        let f = |phi: f64| {
            let cos2 = phi.cos().powi(2);
            let spike_cos2 = (1.0 + b) * cos2 / ((1.0 - b) * (1.0 - b) + 4.0 * b * cos2);
            (2.0 / std::f64::consts::PI) * spike_cos2
        };
        integrate(
            &f,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            1e-8,
        )
    }

    /// Pushforward under `x -> c x`.
    pub fn scaled(&self, c: f64) -> LimitMixture {
        LimitMixture {
            rho: self.rho,
            beta_prime: self.beta_prime,
            scale: self.scale * c,
            atoms: self.atoms.iter().map(|&(loc, m)| (loc * c, m)).collect(),
        }
    }

    /// Edge of the continuous support.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.scale
    }
}

/// Directional limit for overlap `rho` at order `r` on the unit-variance
/// scale: continuous density
/// `(1-rho^2) f_sc + rho^2 (1+b)/((1+b)^2 - b x^2) f_sc` with `b = r - 2`,
/// and atoms of mass `(rho^2/2)(1 - 1/b)` at `+-(beta' + 1/beta')`.
/// At `r = 3` the atoms vanish and the spike component degenerates to the
/// arcsine law; the mixture is returned with an empty atom list.
pub fn directional_limit(rho: f64, r: usize) -> Result<LimitMixture> {
    if r < 3 {
        return Err(Error::Domain(format!(
            "directional limit requires order >= 3, got {r}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("overlap rho = {rho} outside [-1, 1]")));
    }
    let beta_prime = ((r - 2) as f64).sqrt();
    let b = beta_prime * beta_prime;
    let mut atoms = Vec::new();
    let mass = (rho * rho / 2.0) * (1.0 - 1.0 / b);
    if mass > 0.0 {
        let loc = beta_prime + 1.0 / beta_prime;
        atoms.push((-loc, mass));
        atoms.push((loc, mass));
    }
    Ok(LimitMixture { rho, beta_prime, scale: 1.0, atoms })
}

/// Kolmogorov distance between an atomic measure and a reference CDF:
/// the sup over atom locations of the one-sided gaps
/// `|F(x-) - cdf(x)|` and `|F(x) - cdf(x)|`.
pub fn ks_distance(measure: &WeightedSpectralMeasure, cdf: impl Fn(f64) -> f64) -> f64 {
    let atoms = measure.atoms();
    let mut sup = 0.0f64;
    let mut cum = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let loc = atoms[i].0;
        let before = cum;
        while i < atoms.len() && atoms[i].0 == loc {
            cum += atoms[i].1;
            i += 1;
        }
        let target = cdf(loc);
        sup = sup.max((before - target).abs()).max((cum - target).abs());
    }
    sup
}

/// Spectral transport bound from matrix distance:
/// `d_W2(esd(a), esd(b)) <= |a - b|_F / sqrt(n)`.
pub fn w2_bound(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(diff.frobenius_norm() / (a.n() as f64).sqrt())
}

/// Exact quadratic transport cost between the two spectra under the sorted
/// (monotone) pairing, `sqrt((1/n) sum_i (lambda_i(a) - lambda_i(b))^2)`.
pub fn w2_matched_cost(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::Shape("matrix dimension mismatch".into()));
    }
    let la = eigenvalues(a)?;
    let lb = eigenvalues(b)?;
    let n = la.len() as f64;
    let sum: f64 = la.iter().zip(&lb).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / n).sqrt())
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{pure_params, rank2_eigenstructure, sample_goe};
    use crate::rng::{GaussianStream, SeedKey};
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigh_identity_and_diagonal() {
        let id = SymMatrix::from_fn(4, |i, j| if i == j { 1.0 } else { 0.0 });
        let es = eigh(&id).unwrap();
        for l in &es.eigenvalues {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-12);
        }

        let d = SymMatrix::from_fn(3, |i, j| {
            if i != j {
                0.0
            } else {
                [3.0, -1.0, 2.0][i]
            }
        });
        let es = eigh(&d).unwrap();
        assert_abs_diff_eq!(es.eigenvalues[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(es.eigenvalues[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(es.eigenvalues[2], -1.0, epsilon = 1e-12);
        // Coordinate eigenvectors with positive leading entry.
        assert_abs_diff_eq!(es.eigenvectors[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(es.eigenvectors[[2, 1]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(es.eigenvectors[[1, 2]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_dense_rejects_asymmetry() {
        let mut a = Array2::zeros((2, 2));
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0 + 1e-9;
        assert!(matches!(eigh_dense(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn eigh_invariants_on_random_matrices() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(31));
        for n in [2, 7, 24, 60] {
            for _ in 0..8 {
                let m = SymMatrix::from_fn(n, |_, _| stream.next_normal());
                let es = eigh(&m).unwrap();
                let a = m.to_array2();
                let opn = op_norm(&m).unwrap();
                // Descending order.
                for k in 1..n {
                    assert!(es.eigenvalues[k - 1] >= es.eigenvalues[k]);
                }
                // Residual and orthonormality.
                for k in 0..n {
                    let v = es.eigenvector(k);
                    let av = a.dot(&v);
                    let mut resid = 0.0f64;
                    for i in 0..n {
                        resid += (av[i] - es.eigenvalues[k] * v[i]).powi(2);
                    }
                    assert!(resid.sqrt() <= 1e-10 * opn.max(1.0), "residual");
                    for k2 in 0..n {
                        let dot: f64 = v.iter().zip(es.eigenvector(k2)).map(|(x, y)| x * y).sum();
                        let want = if k == k2 { 1.0 } else { 0.0 };
                        assert!((dot - want).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn eigh_matches_rank2_closed_form() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(32));
        let n = 6;
        for _ in 0..16 {
            let x = stream.next_unit_vec(n);
            let y = stream.next_unit_vec(n);
            let a = stream.next_normal();
            let b = stream.next_normal();
            if b.abs() < 1e-3 {
                continue;
            }
            let rho: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            let m = SymMatrix::from_fn(n, |i, j| {
                a * x[i] * x[j] + b * (x[i] * y[j] + y[i] * x[j])
            });
            let es = eigh(&m).unwrap();
            let closed = rank2_eigenstructure(a, b, rho).unwrap();
            assert_abs_diff_eq!(es.eigenvalues[0], closed.lambda_plus.max(0.0), epsilon = 1e-9);
            assert_abs_diff_eq!(
                es.eigenvalues[n - 1],
                closed.lambda_minus.min(0.0),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn semicircle_density_and_cdf_basics() {
        assert_abs_diff_eq!(
            semicircle_density(0.0, 1.0).unwrap(),
            1.0 / std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_eq!(semicircle_density(2.5, 1.0).unwrap(), 0.0);
        assert!(semicircle_density(0.0, 0.0).is_err());

        for sigma2 in [1.0f64, 0.5, 3.0] {
            let edge = 2.0 * sigma2.sqrt();
            assert_eq!(semicircle_cdf(-edge, sigma2).unwrap(), 0.0);
            assert_eq!(semicircle_cdf(edge, sigma2).unwrap(), 1.0);
            assert_abs_diff_eq!(semicircle_cdf(0.0, sigma2).unwrap(), 0.5, epsilon = 1e-14);
            // CDF matches quadrature of the density.
            for x in [-0.9 * edge, -0.3 * edge, 0.4 * edge, 0.97 * edge] {
                let quad = integrate(
                    &|t: f64| semicircle_density(t, sigma2).unwrap(),
                    -edge,
                    x,
                    1e-10,
                );
                assert_abs_diff_eq!(semicircle_cdf(x, sigma2).unwrap(), quad, epsilon = 1e-7);
            }
            let total = integrate(
                &|t: f64| semicircle_density(t, sigma2).unwrap(),
                -edge,
                edge,
                1e-10,
            );
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn semicircle_stieltjes_branch_and_values() {
        let s = stieltjes_semicircle(Complex64::new(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.im, std::f64::consts::SQRT_2 - 1.0, epsilon = 1e-12);

        let s3 = stieltjes_semicircle(Complex64::new(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(s3.re, (-3.0 + 5.0f64.sqrt()) / 2.0, epsilon = 1e-12);
        let sm3 = stieltjes_semicircle(Complex64::new(-3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(sm3.re, (3.0 - 5.0f64.sqrt()) / 2.0, epsilon = 1e-12);

        assert!(stieltjes_semicircle(Complex64::new(1.0, 0.0)).is_err());
        assert!(stieltjes_semicircle(Complex64::new(0.0, -1.0)).is_err());

        // Defining quadratic and Herglotz property across the upper plane.
        for re in [-3.0, -1.0, 0.0, 0.7, 2.5] {
            for im in [0.1, 1.0, 5.0] {
                let z = Complex64::new(re, im);
                let s = stieltjes_semicircle(z).unwrap();
                let residual = s * s + z * s + Complex64::new(1.0, 0.0);
                assert!(residual.norm() < 1e-12, "z = {z}");
                assert!(s.im > 0.0);
            }
        }
    }

    #[test]
    fn limit_stieltjes_reduces_and_respects_poles() {
        let z = Complex64::new(0.4, 0.8);
        let s0 = limit_stieltjes(z, 0.0, 2.0f64.sqrt()).unwrap();
        assert!((s0 - stieltjes_semicircle(z).unwrap()).norm() < 1e-14);

        // rho = 1, r = 4 (beta'^2 = 2) at z = 2i.
        let s1 = limit_stieltjes(Complex64::new(0.0, 2.0), 1.0, 2.0f64.sqrt()).unwrap();
        let ssc = std::f64::consts::SQRT_2 - 1.0;
        let want = ssc / (1.0 + 2.0 * ssc * ssc);
        assert_abs_diff_eq!(s1.im, want, epsilon = 1e-12);
        // Closed form (3 sqrt(2) + 1)/17 = 0.3083906...; and s must satisfy
        // the defining rational identity in terms of s_sc.
        assert_abs_diff_eq!(
            s1.im,
            (3.0 * std::f64::consts::SQRT_2 + 1.0) / 17.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s1.re, 0.0, epsilon = 1e-14);

        let bp = 2.0f64.sqrt();
        let pole = bp + 1.0 / bp;
        assert!(matches!(
            limit_stieltjes(Complex64::new(pole + 1e-9, 0.0), 0.5, bp),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            limit_stieltjes(Complex64::new(-pole, 1e-8), 0.5, bp),
            Err(Error::Pole { .. })
        ));
        assert!(limit_stieltjes(z, 0.5, 1.0).is_err());
    }

    #[test]
    fn limit_stieltjes_residue_matches_numerics() {
        let rho = 0.8;
        let bp = 3.0f64.sqrt(); // r = 5
        let pole = bp + 1.0 / bp;
        let exact = limit_stieltjes_residue(rho, bp);
        // (z - p) s(z) along a vertical approach.
        let eps = 1e-6;
        let z = Complex64::new(pole, eps);
        let s = limit_stieltjes(z, rho, bp).unwrap();
        let approx_res = (z - Complex64::new(pole, 0.0)) * s;
        assert_abs_diff_eq!(approx_res.re, exact, epsilon = 1e-3);
        // And the atom mass of the limit measure agrees with -residue.
        let mix = directional_limit(rho, 5).unwrap();
        let mass_at_pole = mix
            .atoms
            .iter()
            .find(|&&(loc, _)| loc > 0.0)
            .map(|&(_, m)| m)
            .unwrap();
        assert_abs_diff_eq!(mass_at_pole, -exact, epsilon = 1e-14);
    }

    #[test]
    fn directional_limit_masses() {
        // Total mass 1 across orders and overlaps.
        for r in 3..=8 {
            for rho in [0.0, 0.3, 0.7, 1.0] {
                let mix = directional_limit(rho, r).unwrap();
                assert_abs_diff_eq!(mix.total_mass(), 1.0, epsilon = 1e-6);
                // nu carries mass 1/beta'^2 regardless of rho.
                let b = (r - 2) as f64;
                assert_abs_diff_eq!(mix.nu_mass(), 1.0 / b, epsilon = 1e-6);
            }
        }
        // rho = 0: plain semicircle, no atoms.
        let sc = directional_limit(0.0, 4).unwrap();
        assert!(sc.atoms.is_empty());
        assert_abs_diff_eq!(
            sc.density(0.3),
            semicircle_density(0.3, 1.0).unwrap(),
            epsilon = 1e-14
        );
        // rho = 1, r = 4: atom masses 1/4.
        let full = directional_limit(1.0, 4).unwrap();
        assert_eq!(full.atoms.len(), 2);
        for &(_, m) in &full.atoms {
            assert_abs_diff_eq!(m, 0.25, epsilon = 1e-14);
        }
        // r = 3 degenerates: no atoms, still mass 1.
        let deg = directional_limit(0.9, 3).unwrap();
        assert!(deg.atoms.is_empty());
        assert_abs_diff_eq!(deg.total_mass(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn theta_scaling_moves_atoms_to_the_spike_edge() {
        // On the M/sqrt(n) scale the atoms must land at
        // +-(beta + theta^2/beta), for every order with atoms.
        for r in 4..=8 {
            let p = pure_params(r).unwrap();
            let mix = directional_limit(0.6, r).unwrap().scaled(p.theta);
            let want = p.beta + p.theta * p.theta / p.beta;
            let pos = mix.atoms.iter().find(|&&(l, _)| l > 0.0).unwrap().0;
            assert_abs_diff_eq!(pos, want, epsilon = 1e-12);
            // Mass is unchanged by scaling.
            assert_abs_diff_eq!(mix.total_mass(), 1.0, epsilon = 1e-6);
            // CDF endpoints.
            let hi = mix.support_radius().max(pos) + 1e-9;
            assert_abs_diff_eq!(mix.cdf(hi), 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(mix.cdf(-hi), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn directional_measure_basics() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(33));
        let n = 8;
        let m = SymMatrix::from_fn(n, |_, _| stream.next_normal());
        let es = eigh(&m).unwrap();

        // Direction equal to the top eigenvector: single unit atom.
        let u1: Vec<f64> = es.eigenvector(0).to_vec();
        let mu = directional_measure(&es, &u1).unwrap();
        assert_abs_diff_eq!(mu.total_weight(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(mu.cdf(es.eigenvalues[0]), 1.0, epsilon = 1e-10);
        assert!(mu.cdf(es.eigenvalues[0] - 1e-6) < 1e-10);

        // Random direction: total weight 1, first moment = x'Ax.
        let x = stream.next_unit_vec(n);
        let mu = directional_measure(&es, &x).unwrap();
        assert_abs_diff_eq!(mu.total_weight(), 1.0, epsilon = 1e-10);
        let a = m.to_array2();
        let mut xax = 0.0;
        for i in 0..n {
            for j in 0..n {
                xax += x[i] * a[[i, j]] * x[j];
            }
        }
        assert_abs_diff_eq!(mu.first_moment(), xax, epsilon = 1e-10);

        assert!(directional_measure(&es, &vec![1.0; n]).is_err());
    }

    #[test]
    fn esd_stieltjes_equals_trace_resolvent_formula() {
        let eigs = [1.5, -0.3, 0.0, 2.0];
        let mu = WeightedSpectralMeasure::esd(&eigs);
        let z = Complex64::new(1.0, 1.0);
        let direct: Complex64 = eigs
            .iter()
            .map(|&l| (Complex64::new(l, 0.0) - z).inv())
            .sum::<Complex64>()
            / 4.0;
        assert!((mu.stieltjes(z) - direct).norm() < 1e-14);
    }

    #[test]
    fn ks_distance_known_cases() {
        // Single atom at 0 against any CDF with value 1/2 there.
        let one = WeightedSpectralMeasure::from_atoms(vec![(0.0, 1.0)]).unwrap();
        let d = ks_distance(&one, |x| semicircle_cdf(x, 1.0).unwrap());
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-14);

        // Atoms at exact CDF midpoints of a continuous law: distance 1/(2k).
        let k = 20;
        let atoms: Vec<(f64, f64)> = (0..k)
            .map(|i| {
                let p = (i as f64 + 0.5) / k as f64;
                // Invert the semicircle CDF by bisection.
                let mut lo = -2.0;
                let mut hi = 2.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if semicircle_cdf(mid, 1.0).unwrap() < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (0.5 * (lo + hi), 1.0 / k as f64)
            })
            .collect();
        let mu = WeightedSpectralMeasure::from_atoms(atoms).unwrap();
        let d = ks_distance(&mu, |x| semicircle_cdf(x, 1.0).unwrap());
        assert!(d <= 0.5 / k as f64 + 1e-9, "distance {d}");
    }

    #[test]
    fn w2_bounds_and_matched_cost() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(34));
        let n = 12;
        let a = SymMatrix::from_fn(n, |_, _| stream.next_normal());
        assert_abs_diff_eq!(w2_bound(&a, &a).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w2_matched_cost(&a, &a).unwrap(), 0.0, epsilon = 1e-12);

        // Uniform shift: both the bound and the matched cost equal eps.
        let eps = 0.37;
        let mut shifted = a.clone();
        for i in 0..n {
            shifted.set(i, i, a.get(i, i) + eps);
        }
        assert_abs_diff_eq!(w2_bound(&a, &shifted).unwrap(), eps, epsilon = 1e-12);
        assert_abs_diff_eq!(w2_matched_cost(&a, &shifted).unwrap(), eps, epsilon = 1e-10);

        // Hoffman-Wielandt: matched cost never beats the Frobenius bound.
        for _ in 0..10 {
            let b = SymMatrix::from_fn(n, |_, _| stream.next_normal());
            let cost = w2_matched_cost(&a, &b).unwrap();
            let bound = w2_bound(&a, &b).unwrap();
            assert!(cost <= bound + 1e-10, "cost {cost} bound {bound}");
        }
    }

    #[test]
    fn weyl_inequality_on_random_pairs() {
        let mut stream = GaussianStream::new(&SeedKey::from_u64(35));
        let n = 20;
        for _ in 0..10 {
            let a = SymMatrix::from_fn(n, |_, _| stream.next_normal());
            let b = SymMatrix::from_fn(n, |_, _| 0.3 * stream.next_normal());
            let mut sum = a.clone();
            sum.add_scaled(&b, 1.0).unwrap();
            let la = eigenvalues(&a).unwrap();
            let ls = eigenvalues(&sum).unwrap();
            let bop = op_norm(&b).unwrap();
            for i in 0..n {
                assert!((ls[i] - la[i]).abs() <= bop + 1e-10);
            }
        }
    }

    #[test]
    fn goe_esd_is_near_semicircle() {
        // Scaled GOE at n = 600: KS distance to sc(1) small; Wigner check.
        let m = sample_goe(600, &SeedKey::from_u64(36));
        let mut scaled = m;
        scaled.scale(1.0 / 600.0f64.sqrt());
        let eigs = eigenvalues(&scaled).unwrap();
        let mu = WeightedSpectralMeasure::esd(&eigs);
        let d = ks_distance(&mu, |x| semicircle_cdf(x, 1.0).unwrap());
        assert!(d < 0.05, "KS distance {d}");
    }
}
