//! Row-projection solvers for ill-conditioned overdetermined systems.
//!
//! The crate provides Randomized Kaczmarz (RK) and Sampling Kaczmarz-Motzkin
//! (SKM) engines together with three families of acceleration strategies:
//!
//! - [`feasibility`]: binary classification recast as the feasibility problem
//!   `A'x <= 0`, optionally augmented with all pairwise row differences.
//! - [`clustering`]: inner-product coresets, epsilon-cover row partitions and
//!   an online active-set reduction schedule.
//! - [`sampling`]: uniform, squared-norm and spectral-weighted row
//!   distributions.
//!
//! [`matgen`] builds synthetic systems with prescribed spectra, [`metrics`]
//! measures iterates and [`runner`] drives the reproducible experiments behind
//! the `kzlab` command-line tool.

pub mod clustering;
pub mod error;
pub mod feasibility;
pub mod matgen;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod qr;
pub mod rng;
pub mod runner;
pub mod sampling;
pub mod solvers;
pub mod system;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use system::{LinearSystem, Relation, SvdFactors};
