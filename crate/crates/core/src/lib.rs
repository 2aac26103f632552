//! Simulation and verification tools for spectra of matrix-valued
//! contractions of the Gaussian orthogonal tensor ensemble (GOTE).
//!
//! A symmetric order-`r` tensor `G` on `n` coordinates is contracted along
//! `r - 2` directions into a symmetric `n x n` matrix.  This crate provides:
//!
//! * [`tensor`]: multiset-keyed symmetric tensor storage, the GOTE sampler,
//!   and direct contractions;
//! * [`law`]: low-rank-plus-GOE samplers that are equal in law to the
//!   contractions, with the exact spike scalars recorded;
//! * [`cov`]: closed-form entry covariances of contracted matrices, assembled
//!   covariance matrices on half-vectorized coordinates, and total-variation
//!   bounds between nearby contraction directions;
//! * [`spectral`]: eigendecomposition, semicircle laws, Stieltjes transforms,
//!   weighted spectral measures, and their limiting mixtures;
//! * [`theory`]: limit predictions for edge eigenvalues, fluctuations, and
//!   eigenvector overlaps across the `(r, n)` scaling regimes.
//!
//! All randomness flows through counter-style seeded streams ([`rng`]), so
//! every sampler is a pure function of its inputs.

pub mod cov;
pub mod error;
pub mod law;
pub mod rng;
pub mod spectral;
pub mod tensor;
pub mod theory;

pub use error::{Error, Result};
