//! Closed-form limit and fluctuation predictors for the extreme eigenvalues
//! and spike overlaps of contraction matrices, organized by growth regime.
//!
//! Regime selection is always explicit caller input.  The four regimes are
//! asymptotic statements about how the tensor order `r` scales with the
//! dimension `n`; inferring one from a finite pair would be a silent
//! modeling choice, so we never do it.
//!
//! Random limits (the proportional and `r >> n` regimes) are represented as
//! distribution descriptors carrying an exact sampler, a CDF, and a
//! quantile function, so empirical spectra can be tested against them
//! directly.

use std::sync::LazyLock;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::law::{pure_params, PureLawParams};
use crate::rng::GaussianStream;

static STD_NORMAL: LazyLock<Normal> =
    LazyLock::new(|| Normal::new(0.0, 1.0).expect("standard normal"));

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    STD_NORMAL.cdf(x)
}

/// Standard normal quantile, `p` in (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    STD_NORMAL.inverse_cdf(p)
}

/// How the tensor order grows with the dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    /// `r` fixed, `n -> infinity`.
    FixedR,
    /// `1 << r << n` (fluctuation statements need `sqrt(n) << r`).
    RMuchLessN,
    /// `r / n -> c` for a finite positive `c`.
    Proportional { c: f64 },
    /// `r >> n`.
    RMuchGreaterN,
}

impl Regime {
    fn validate(&self) -> Result<()> {
        if let Regime::Proportional { c } = self {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::Domain(format!(
                    "proportional regime needs finite positive c, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Normalization under which a statement is made.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// Eigenvalues divided by `sqrt(n)`.
    SqrtN,
    /// Eigenvalues divided by `sqrt(r)`.
    SqrtR,
    /// Fluctuations magnified by `sqrt(n / r)`.
    SqrtNOverR,
}

/// Spike edge location `varpi_r = beta + theta^2 / beta`.  Since
/// `beta^2 + theta^2 = 1`, this equals `1/beta = sqrt((r-1)/(r-2))`.
pub fn varpi(r: usize) -> Result<f64> {
    let p = pure_params(r)?;
    Ok(p.beta + p.theta * p.theta / p.beta)
}

/// Law of the limiting pair `(lambda_1, lambda_n)` after scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeLaw {
    /// Deterministic limits.
    Point { top: f64, bottom: f64 },
    /// `(xi, -1/xi)` with `xi = (sqrt(c) z + sqrt(c z^2 + 4))/2`,
    /// `z ~ N(0,1)`.
    XiPair { c: f64 },
    /// `(z_+, -z_-) = (max(z, 0), min(z, 0))` for a single `z ~ N(0,1)`.
    HalfNormalPair,
}

/// Maps one standard normal draw to the proportional-regime top limit.
pub fn xi_from_zeta(zeta: f64, c: f64) -> f64 {
    0.5 * (c.sqrt() * zeta + (c * zeta * zeta + 4.0).sqrt())
}

impl EdgeLaw {
    pub fn is_random(&self) -> bool {
        !matches!(self, EdgeLaw::Point { .. })
    }

    /// Draws one limiting pair.  Point laws consume no randomness.
    pub fn sample_pair(&self, stream: &mut GaussianStream) -> (f64, f64) {
        match *self {
            EdgeLaw::Point { top, bottom } => (top, bottom),
            EdgeLaw::XiPair { c } => {
                let xi = xi_from_zeta(stream.next_normal(), c);
                (xi, -1.0 / xi)
            }
            EdgeLaw::HalfNormalPair => {
                let z = stream.next_normal();
                (z.max(0.0), z.min(0.0))
            }
        }
    }

    /// CDF of the top limit.
    pub fn top_cdf(&self, x: f64) -> f64 {
        match *self {
            EdgeLaw::Point { top, .. } => {
                if x >= top {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeLaw::XiPair { c } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x - 1.0 / x) / c.sqrt())
                }
            }
            EdgeLaw::HalfNormalPair => {
                if x < 0.0 {
                    0.0
                } else {
                    std_normal_cdf(x)
                }
            }
        }
    }

    /// CDF of the bottom limit.
    pub fn bottom_cdf(&self, x: f64) -> f64 {
        match *self {
            EdgeLaw::Point { bottom, .. } => {
                if x >= bottom {
                    1.0
                } else {
                    0.0
                }
            }
            // -1/xi <= x iff xi <= -1/x (for x < 0).
            EdgeLaw::XiPair { c } => {
                if x >= 0.0 {
                    1.0
                } else {
                    let y = -1.0 / x;
                    std_normal_cdf((y - 1.0 / y) / c.sqrt())
                }
            }
            EdgeLaw::HalfNormalPair => {
                if x >= 0.0 {
                    1.0
                } else {
                    std_normal_cdf(x)
                }
            }
        }
    }

    /// Quantile of the top limit, `p` in (0, 1).
    pub fn top_quantile(&self, p: f64) -> f64 {
        match *self {
            EdgeLaw::Point { top, .. } => top,
            EdgeLaw::XiPair { c } => xi_from_zeta(std_normal_quantile(p), c),
            EdgeLaw::HalfNormalPair => std_normal_quantile(p).max(0.0),
        }
    }
}

/// Prediction for the scaled extreme eigenvalues.
#[derive(Clone, Copy, Debug)]
pub struct EdgePrediction {
    pub regime: Regime,
    pub scale: Scale,
    pub law: EdgeLaw,
}

/// Limits of `(lambda_1, lambda_n)` of the full contraction matrix:
///
/// - fixed `r`: `(varpi_r, -varpi_r)` at scale `sqrt(n)` (at `r = 3` the
///   outliers stick to the bulk edge and `varpi_3 = 2 theta_3 = sqrt(2)`)
/// - `1 << r << n`: `(1, -1)` at scale `sqrt(n)`
/// - `r/n -> c`: the random pair `(xi, -1/xi)` at scale `sqrt(n)`
/// - `r >> n`: `(z_+, -z_-)` at scale `sqrt(r)`
pub fn edge_limits(r: usize, n: usize, regime: Regime) -> Result<EdgePrediction> {
    regime.validate()?;
    if r < 3 {
        return Err(Error::Domain(format!("contraction order must be >= 3, got {r}")));
    }
    if n < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let (scale, law) = match regime {
        Regime::FixedR => {
            let w = varpi(r)?;
            (Scale::SqrtN, EdgeLaw::Point { top: w, bottom: -w })
        }
        Regime::RMuchLessN => (Scale::SqrtN, EdgeLaw::Point { top: 1.0, bottom: -1.0 }),
        Regime::Proportional { c } => (Scale::SqrtN, EdgeLaw::XiPair { c }),
        Regime::RMuchGreaterN => (Scale::SqrtR, EdgeLaw::HalfNormalPair),
    };
    Ok(EdgePrediction { regime, scale, law })
}

/// Gaussian fluctuation of the scaled extreme pair around its centering.
#[derive(Clone, Copy, Debug)]
pub struct FluctuationCov {
    pub scale: Scale,
    /// Limits subtracted before magnification.
    pub center: (f64, f64),
    pub cov: [[f64; 2]; 2],
}

/// Joint Gaussian fluctuations of `(lambda_1, lambda_n)` of the full
/// contraction matrix:
///
/// - fixed `r >= 4`, scale `sqrt(n)`, centered at `(varpi_r, -varpi_r)`:
///   covariance `(r-3)/(4(r-2)(r-1)) [[r^2-1, r^2-9], [r^2-9, r^2-1]]`
/// - `sqrt(n) << r << n`, scale `sqrt(n/r)`, centered at `(1, -1)`:
///   covariance `(1/4)` times the all-ones matrix
///
/// The fixed `r = 3` fluctuation is an open problem and is refused.
pub fn edge_fluctuation_cov(r: usize, regime: Regime) -> Result<FluctuationCov> {
    regime.validate()?;
    match regime {
        Regime::FixedR => {
            if r < 4 {
                return Err(Error::Domain(
                    "edge fluctuations at fixed order 3 are not available".into(),
                ));
            }
            let rf = r as f64;
            let pref = (rf - 3.0) / (4.0 * (rf - 2.0) * (rf - 1.0));
            let diag = pref * (rf * rf - 1.0);
            let off = pref * (rf * rf - 9.0);
            let w = varpi(r)?;
            Ok(FluctuationCov {
                scale: Scale::SqrtN,
                center: (w, -w),
                cov: [[diag, off], [off, diag]],
            })
        }
        Regime::RMuchLessN => Ok(FluctuationCov {
            scale: Scale::SqrtNOverR,
            center: (1.0, -1.0),
            cov: [[0.25, 0.25], [0.25, 0.25]],
        }),
        _ => Err(Error::Domain(
            "edge fluctuation covariance is stated for fixed r and sqrt(n) << r << n only"
                .into(),
        )),
    }
}

/// Overlap limits between the contraction direction and the outlier
/// eigenvectors `s_1, s_n`, reported both directly
/// (`delta = (|w's_1|, |w's_n|)` ordered decreasingly) and in the rotated
/// frame `t_{1,2} = (s_1 +- s_n)/sqrt(2)`.
#[derive(Clone, Copy, Debug)]
pub enum PairLaw {
    Fixed {
        delta: (f64, f64),
        delta_tilde: (f64, f64),
        dist: f64,
    },
    /// Overlaps are deterministic functions of the edge variable `xi`;
    /// see [`overlaps_at_xi`].
    XiDependent { c: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OverlapPrediction {
    pub regime: Regime,
    pub law: PairLaw,
}

/// Proportional-regime overlaps as functions of `xi`:
///
/// ```text
///   delta       = (xi, 1) / sqrt(xi^2 + 1)            (then ordered)
///   delta_tilde = (xi + 1, xi - 1) / sqrt(2 (xi^2+1)) (then |.| ordered)
/// ```
///
/// Both pairs have squared norms summing to 1, as they must: the tilde pair
/// is an orthonormal rotation of the other.  (The source display carries a
/// spurious 1/sqrt(2) on the first pair, which would break that identity
/// and the continuity to the neighboring regimes; we use the consistent
/// form.)
pub fn overlaps_at_xi(xi: f64) -> ((f64, f64), (f64, f64)) {
    let norm = (xi * xi + 1.0).sqrt();
    let mut d = [(xi / norm).abs(), (1.0 / norm).abs()];
    if d[0] < d[1] {
        d.swap(0, 1);
    }
    let tnorm = (2.0 * (xi * xi + 1.0)).sqrt();
    let mut t = [((xi + 1.0) / tnorm).abs(), ((xi - 1.0) / tnorm).abs()];
    if t[0] < t[1] {
        t.swap(0, 1);
    }
    ((d[0], d[1]), (t[0], t[1]))
}

/// Overlap limits per regime.  Fixed `r >= 4`:
/// `delta = (1/sqrt(2)) sqrt(1 - theta^2/beta^2) (1, 1)`,
/// `delta_tilde = (sqrt(1 - theta^2/beta^2), 0)`, and the distance of `w`
/// to the outlier eigenvector span tends to `theta / beta`.
/// At `r = 3` there are no outliers and no overlap statement.
pub fn overlap_limits(r: usize, regime: Regime) -> Result<OverlapPrediction> {
    regime.validate()?;
    if r < 4 && regime == Regime::FixedR {
        return Err(Error::Domain(
            "no outlier eigenvectors at fixed order 3; overlaps undefined".into(),
        ));
    }
    let law = match regime {
        Regime::FixedR => {
            let p = pure_params(r)?;
            let q = 1.0 - (p.theta * p.theta) / (p.beta * p.beta);
            PairLaw::Fixed {
                delta: ((q / 2.0).sqrt(), (q / 2.0).sqrt()),
                delta_tilde: (q.sqrt(), 0.0),
                dist: p.theta / p.beta,
            }
        }
        Regime::RMuchLessN => PairLaw::Fixed {
            delta: (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            delta_tilde: (1.0, 0.0),
            dist: 0.0,
        },
        Regime::Proportional { c } => PairLaw::XiDependent { c },
        Regime::RMuchGreaterN => PairLaw::Fixed {
            delta: (1.0, 0.0),
            delta_tilde: (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            dist: 0.0,
        },
    };
    Ok(OverlapPrediction { regime, law })
}

/// Predictions for the spike part `P_n` alone.
#[derive(Clone, Copy, Debug)]
pub struct SpikePrediction {
    pub edge: EdgePrediction,
    /// Present in the regimes with stated Gaussian fluctuations.
    pub fluctuation: Option<FluctuationCov>,
}

/// Four-regime predictions for `(lambda_1(P_n), lambda_n(P_n))`:
///
/// - fixed `r`: limits `(beta, -beta)` at scale `sqrt(n)` with covariance
///   `[[a2/4 + 3 b2/2, a2/4 + b2/2], [a2/4 + b2/2, a2/4 + 3 b2/2]]`
/// - `1 << r << n`: limits `(1, -1)`, fluctuation `(1/4)` all-ones at
///   `sqrt(n/r)`
/// - proportional and `r >> n`: same random limits as the full matrix
pub fn spike_regime_limits(r: usize, n: usize, regime: Regime) -> Result<SpikePrediction> {
    regime.validate()?;
    if n < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let p = pure_params(r)?;
    match regime {
        Regime::FixedR => {
            let a2 = p.alpha * p.alpha;
            let b2 = p.beta * p.beta;
            let diag = a2 / 4.0 + 1.5 * b2;
            let off = a2 / 4.0 + 0.5 * b2;
            Ok(SpikePrediction {
                edge: EdgePrediction {
                    regime,
                    scale: Scale::SqrtN,
                    law: EdgeLaw::Point { top: p.beta, bottom: -p.beta },
                },
                fluctuation: Some(FluctuationCov {
                    scale: Scale::SqrtN,
                    center: (p.beta, -p.beta),
                    cov: [[diag, off], [off, diag]],
                }),
            })
        }
        Regime::RMuchLessN => Ok(SpikePrediction {
            edge: EdgePrediction {
                regime,
                scale: Scale::SqrtN,
                law: EdgeLaw::Point { top: 1.0, bottom: -1.0 },
            },
            fluctuation: Some(FluctuationCov {
                scale: Scale::SqrtNOverR,
                center: (1.0, -1.0),
                cov: [[0.25, 0.25], [0.25, 0.25]],
            }),
        }),
        Regime::Proportional { c } => Ok(SpikePrediction {
            edge: EdgePrediction {
                regime,
                scale: Scale::SqrtN,
                law: EdgeLaw::XiPair { c },
            },
            fluctuation: None,
        }),
        Regime::RMuchGreaterN => Ok(SpikePrediction {
            edge: EdgePrediction {
                regime,
                scale: Scale::SqrtR,
                law: EdgeLaw::HalfNormalPair,
            },
            fluctuation: None,
        }),
    }
}

/// Bulk and edge predictions for the order-4 mixed contraction along unit
/// directions with overlap `rho`.
#[derive(Clone, Copy, Debug)]
pub struct MixedPrediction {
    pub rho: f64,
    /// Bulk semicircle variance `(1 + rho^2)/6` on the `M/sqrt(n)` scale.
    pub bulk_sigma2: f64,
    /// Edge of the bulk, `2 sqrt(bulk_sigma2)`.
    pub bulk_edge: f64,
    /// Known limit of `lambda_1/sqrt(n)`: `2/sqrt(6)` at `rho = 0` (no
    /// outlier), `varpi_4` at `|rho| = 1` (the pure case); open in between.
    pub lambda1_limit: Option<f64>,
}

pub fn mixed_limits(rho: f64) -> Result<MixedPrediction> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("overlap rho = {rho} outside [-1, 1]")));
    }
    let bulk_sigma2 = (1.0 + rho * rho) / 6.0;
    let bulk_edge = 2.0 * bulk_sigma2.sqrt();
    let lambda1_limit = if rho == 0.0 {
        Some(2.0 / 6.0f64.sqrt())
    } else if rho.abs() == 1.0 {
        Some(varpi(4)?)
    } else {
        None
    };
    Ok(MixedPrediction { rho, bulk_sigma2, bulk_edge, lambda1_limit })
}

/// Convenience: the squared-coefficient triple at order `r`.
pub fn coefficients(r: usize) -> Result<PureLawParams> {
    pure_params(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedKey;
    use approx::assert_abs_diff_eq;

    #[test]
    fn varpi_values_and_identity() {
        assert_abs_diff_eq!(varpi(4).unwrap(), (1.5f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(varpi(3).unwrap(), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(varpi(5).unwrap(), 2.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        // beta + theta^2/beta = 1/beta because beta^2 + theta^2 = 1.
        for r in 3..=50 {
            let p = pure_params(r).unwrap();
            assert_abs_diff_eq!(varpi(r).unwrap(), 1.0 / p.beta, epsilon = 1e-12);
            assert_abs_diff_eq!(
                varpi(r).unwrap(),
                ((r as f64 - 1.0) / (r as f64 - 2.0)).sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn edge_limits_per_regime() {
        let fixed = edge_limits(4, 1000, Regime::FixedR).unwrap();
        assert_eq!(fixed.scale, Scale::SqrtN);
        match fixed.law {
            EdgeLaw::Point { top, bottom } => {
                assert_abs_diff_eq!(top, (1.5f64).sqrt(), epsilon = 1e-15);
                assert_abs_diff_eq!(bottom, -(1.5f64).sqrt(), epsilon = 1e-15);
            }
            other => panic!("expected point law, got {other:?}"),
        }

        // r = 3 sticks to the bulk edge 2 theta = sqrt(2).
        let r3 = edge_limits(3, 1000, Regime::FixedR).unwrap();
        match r3.law {
            EdgeLaw::Point { top, .. } => {
                assert_abs_diff_eq!(top, std::f64::consts::SQRT_2, epsilon = 1e-15)
            }
            other => panic!("expected point law, got {other:?}"),
        }

        let inter = edge_limits(100, 10000, Regime::RMuchLessN).unwrap();
        assert!(matches!(inter.law, EdgeLaw::Point { top, bottom } if top == 1.0 && bottom == -1.0));

        let prop = edge_limits(500, 500, Regime::Proportional { c: 1.0 }).unwrap();
        assert!(prop.law.is_random());
        let big = edge_limits(4000, 40, Regime::RMuchGreaterN).unwrap();
        assert_eq!(big.scale, Scale::SqrtR);

        assert!(edge_limits(2, 10, Regime::FixedR).is_err());
        assert!(edge_limits(5, 10, Regime::Proportional { c: 0.0 }).is_err());
        assert!(edge_limits(5, 10, Regime::Proportional { c: f64::INFINITY }).is_err());
    }

    #[test]
    fn xi_pair_identities_and_cdf() {
        // zeta = 0 maps to xi = 1 for every c.
        for c in [0.2, 1.0, 5.0] {
            assert_abs_diff_eq!(xi_from_zeta(0.0, c), 1.0, epsilon = 1e-15);
        }
        let law = EdgeLaw::XiPair { c: 2.5 };
        let mut stream = GaussianStream::new(&SeedKey::from_u64(44));
        for _ in 0..200 {
            let (top, bottom) = law.sample_pair(&mut stream);
            assert!(top > 0.0 && bottom < 0.0);
            // Product of magnitudes is exactly 1 per sample.
            assert_abs_diff_eq!(top * (-bottom), 1.0, epsilon = 1e-12);
        }
        // CDF/quantile round trip and median at xi = 1.
        assert_abs_diff_eq!(law.top_quantile(0.5), 1.0, epsilon = 1e-12);
        for p in [0.05, 0.3, 0.5, 0.9, 0.99] {
            let x = law.top_quantile(p);
            assert_abs_diff_eq!(law.top_cdf(x), p, epsilon = 1e-10);
        }
        // Bottom CDF consistency: -1/xi <= -1/x iff xi <= x.
        let p = 0.7;
        let x = law.top_quantile(p);
        assert_abs_diff_eq!(law.bottom_cdf(-1.0 / x), p, epsilon = 1e-10);
    }

    #[test]
    fn half_normal_pair_has_mass_at_zero() {
        let law = EdgeLaw::HalfNormalPair;
        let mut stream = GaussianStream::new(&SeedKey::from_u64(45));
        let mut zeros = 0;
        let total = 4000;
        for _ in 0..total {
            let (top, bottom) = law.sample_pair(&mut stream);
            assert!(top >= 0.0 && bottom <= 0.0);
            // Exactly one of the two is zero (almost surely).
            assert!((top == 0.0) ^ (bottom == 0.0));
            if top == 0.0 {
                zeros += 1;
            }
        }
        let frac = zeros as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.05, "zero fraction {frac}");
        assert_abs_diff_eq!(law.top_cdf(0.0), 0.5, epsilon = 1e-12);
        assert_eq!(law.top_quantile(0.3), 0.0);
    }

    #[test]
    fn edge_fluctuation_matrices() {
        let f4 = edge_fluctuation_cov(4, Regime::FixedR).unwrap();
        assert_abs_diff_eq!(f4.cov[0][0], 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(f4.cov[0][1], 7.0 / 24.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f4.center.0, (1.5f64).sqrt(), epsilon = 1e-15);

        let f5 = edge_fluctuation_cov(5, Regime::FixedR).unwrap();
        assert_abs_diff_eq!(f5.cov[0][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f5.cov[0][1], 2.0 / 3.0, epsilon = 1e-15);

        assert!(edge_fluctuation_cov(3, Regime::FixedR).is_err());
        assert!(edge_fluctuation_cov(5, Regime::Proportional { c: 1.0 }).is_err());

        // PSD up to r = 50: 2x2 with diag >= |off|.
        for r in 4..=50 {
            let f = edge_fluctuation_cov(r, Regime::FixedR).unwrap();
            assert!(f.cov[0][0] >= 0.0);
            let det = f.cov[0][0] * f.cov[1][1] - f.cov[0][1] * f.cov[1][0];
            assert!(det >= -1e-12, "r = {r} det {det}");
        }

        // Intermediate regime: rank-one quarter matrix at sqrt(n/r).
        let mid = edge_fluctuation_cov(100, Regime::RMuchLessN).unwrap();
        assert_eq!(mid.scale, Scale::SqrtNOverR);
        let tr = mid.cov[0][0] + mid.cov[1][1];
        let det = mid.cov[0][0] * mid.cov[1][1] - mid.cov[0][1] * mid.cov[1][0];
        assert_abs_diff_eq!(tr, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(det, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn overlap_limits_per_regime() {
        let o4 = overlap_limits(4, Regime::FixedR).unwrap();
        match o4.law {
            PairLaw::Fixed { delta, delta_tilde, dist } => {
                assert_abs_diff_eq!(delta.0, 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(delta.1, 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(delta_tilde.0, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
                assert_abs_diff_eq!(delta_tilde.1, 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(dist, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
            }
            other => panic!("expected fixed law, got {other:?}"),
        }
        assert!(overlap_limits(3, Regime::FixedR).is_err());

        // Sum of squared projections onto the outlier plane: 1 - theta^2/beta^2.
        for r in 4..=12 {
            let p = pure_params(r).unwrap();
            let q = 1.0 - p.theta * p.theta / (p.beta * p.beta);
            match overlap_limits(r, Regime::FixedR).unwrap().law {
                PairLaw::Fixed { delta, delta_tilde, dist } => {
                    assert_abs_diff_eq!(delta.0 * delta.0 + delta.1 * delta.1, q, epsilon = 1e-12);
                    assert_abs_diff_eq!(
                        delta_tilde.0 * delta_tilde.0 + delta_tilde.1 * delta_tilde.1,
                        q,
                        epsilon = 1e-12
                    );
                    // Pythagoras: projection + distance = full norm.
                    assert_abs_diff_eq!(q + dist * dist, 1.0, epsilon = 1e-12);
                }
                other => panic!("expected fixed law, got {other:?}"),
            }
        }

        match overlap_limits(100, Regime::RMuchLessN).unwrap().law {
            PairLaw::Fixed { delta_tilde, .. } => {
                assert_abs_diff_eq!(delta_tilde.0, 1.0, epsilon = 1e-15)
            }
            other => panic!("expected fixed law, got {other:?}"),
        }
        match overlap_limits(4000, Regime::RMuchGreaterN).unwrap().law {
            PairLaw::Fixed { delta, .. } => assert_abs_diff_eq!(delta.0, 1.0, epsilon = 1e-15),
            other => panic!("expected fixed law, got {other:?}"),
        }
    }

    #[test]
    fn proportional_overlaps_are_a_rotation() {
        // At xi = 1 the tilde pair is (1, 0) and the plain pair is the
        // diagonal (1/sqrt(2))(1, 1): continuity with the r << n regime.
        let ((d1, dn), (t1, tn)) = overlaps_at_xi(1.0);
        assert_abs_diff_eq!(d1, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(dn, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(t1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tn, 0.0, epsilon = 1e-15);

        // Squared sums agree samplewise: the frames differ by a rotation.
        let mut stream = GaussianStream::new(&SeedKey::from_u64(46));
        for _ in 0..100 {
            let xi = xi_from_zeta(stream.next_normal(), 1.7);
            let ((d1, dn), (t1, tn)) = overlaps_at_xi(xi);
            assert_abs_diff_eq!(d1 * d1 + dn * dn, t1 * t1 + tn * tn, epsilon = 1e-12);
            assert_abs_diff_eq!(d1 * d1 + dn * dn, 1.0, epsilon = 1e-12);
            assert!(d1 >= dn && t1 >= tn && dn >= 0.0 && tn >= 0.0);
        }

        // Large xi approaches the r >> n limits.
        let ((d1, dn), (t1, tn)) = overlaps_at_xi(1e9);
        assert_abs_diff_eq!(d1, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dn, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t1, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(tn, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn spike_predictions() {
        let s4 = spike_regime_limits(4, 1000, Regime::FixedR).unwrap();
        let f = s4.fluctuation.unwrap();
        assert_abs_diff_eq!(f.cov[0][0], 7.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.cov[0][1], 0.5, epsilon = 1e-14);
        let p = pure_params(4).unwrap();
        assert_abs_diff_eq!(f.center.0, p.beta, epsilon = 1e-15);

        let mid = spike_regime_limits(64, 4096, Regime::RMuchLessN).unwrap();
        let mf = mid.fluctuation.unwrap();
        assert_eq!(mf.scale, Scale::SqrtNOverR);
        assert_abs_diff_eq!(mf.cov[0][0], 0.25, epsilon = 1e-15);

        let big = spike_regime_limits(4000, 40, Regime::RMuchGreaterN).unwrap();
        assert!(big.fluctuation.is_none());
        assert_eq!(big.edge.scale, Scale::SqrtR);
        assert!(matches!(big.edge.law, EdgeLaw::HalfNormalPair));
    }

    #[test]
    fn mixed_limit_values() {
        let orth = mixed_limits(0.0).unwrap();
        assert_abs_diff_eq!(orth.bulk_sigma2, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(orth.bulk_edge, 2.0 / 6.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(orth.lambda1_limit.unwrap(), orth.bulk_edge, epsilon = 1e-15);
        assert_abs_diff_eq!(orth.bulk_edge, 0.816497, epsilon = 1e-6);

        let pure = mixed_limits(1.0).unwrap();
        assert_abs_diff_eq!(pure.bulk_sigma2, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pure.lambda1_limit.unwrap(), (1.5f64).sqrt(), epsilon = 1e-15);
        // The outlier sits strictly above the bulk edge in the pure case.
        assert!(pure.lambda1_limit.unwrap() > pure.bulk_edge);

        assert!(mixed_limits(0.4).unwrap().lambda1_limit.is_none());
        assert!(mixed_limits(1.2).is_err());

        // Monotone bulk variance in |rho|.
        let mut prev = -1.0;
        for k in 0..=10 {
            let rho = k as f64 / 10.0;
            let s = mixed_limits(rho).unwrap().bulk_sigma2;
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn normal_helpers_are_inverse() {
        for p in [0.01, 0.25, 0.5, 0.8, 0.999] {
            assert_abs_diff_eq!(std_normal_cdf(std_normal_quantile(p)), p, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(std_normal_cdf(0.0), 0.5, epsilon = 1e-15);
    }
}
