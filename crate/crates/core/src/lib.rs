//! Exact finite-depth construction of a Shannon orbit equivalence between a
//! `ℤ`-odometer with supernatural number `q` and the universal odometer.
//!
//! All measures are exact rationals over the levels of the `B_M` tower of the
//! truncation `ℤ/d_M`; logarithms enter only when entropies are evaluated.

pub mod artifact;
pub mod checks;
pub mod error;
pub mod growth;
pub mod ladder;
pub mod measure;
pub mod odometer;
pub mod orbit;
pub mod remark;
pub mod schedule;
pub mod witness;
