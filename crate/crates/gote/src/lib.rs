//! Seeded Monte Carlo laboratory for contraction spectra: experiment
//! configuration, replication seeding, the nine experiment kinds, and the
//! CSV/JSON emitters behind the `gote` binary.

pub mod config;
pub mod emit;
pub mod experiment;
pub mod json;
pub mod seed;
