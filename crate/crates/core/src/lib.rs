//! Ranks of the first spurious variable along sparse regression paths.
//!
//! Forward stepwise, lasso and least angle regression enter variables one at
//! a time. On simulated data with a known support, [`rankstat`] finds the
//! position at which the first noise variable enters, [`predict`] gives a
//! closed-form estimate of that position, and [`harness`] runs the Monte
//! Carlo studies that compare the two.

pub mod cholesky;
pub mod design;
pub mod diagram;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod predict;
pub mod rankstat;
pub mod rng;
pub mod seqpath;

pub use nalgebra;

pub use design::{Dataset, DesignSpec, Family, SignalSpec};
pub use error::{Error, Result};
pub use seqpath::{Method, PathTrace};
