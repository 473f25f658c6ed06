//! Dense linear algebra and randomness primitives sized for search-space
//! dimensions in the tens, not thousands. Everything here is deterministic
//! given the inputs; randomness only enters through an explicit [`RngStream`].

mod eigen;
mod matrix;
mod rng;
mod sampling;

pub use eigen::{eig_sym, inv_sqrt, EigenDecomposition};
pub use matrix::{Mat, SymMatrix};
pub use rng::{fnv1a64, RngStream};
pub use sampling::{expected_norm, sample_mvn, sample_standard};
