//! Continuous black-box optimization with covariance matrix adaptation,
//! optionally sampling inside a PCA-reduced subspace, plus the test-function
//! suite and benchmark harness used to compare the variants.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: dense symmetric matrices, a Jacobi eigensolver, seeded
//!   RNG streams, and multivariate normal sampling.
//! * [`es`]: the evolution strategy state and its update rules.
//! * [`pca`]: principal-component fits and the covariance transform used to
//!   push the search distribution into the reduced space.
//! * [`strategy`]: the three sampling variants (plain, always-reduced, and
//!   stochastically gated) sharing one generation loop.
//! * [`objectives`]: seeded instances of the multi-modal test suite.
//! * [`bench`]: the experiment runner and ERT / ECDF / loss-ratio statistics.
//! * [`selftest`]: fast internal consistency checks for the CLI.

pub mod bench;
pub mod error;
pub mod es;
pub mod numerics;
pub mod objective;
pub mod objectives;
pub mod pca;
pub mod selftest;
pub mod strategy;
pub mod trace;

pub use error::{Error, Result};
pub use numerics::RngStream;
