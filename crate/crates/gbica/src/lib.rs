//! Decomposing large-alphabet memoryless sources into "as statistically
//! independent as possible" binary components, and entropy-coding the
//! components instead of the raw symbols.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`prob`] — joint distributions over `q^d` words, entropies,
//!   bit-marginals and synthetic source generators (Zipf, uniform simplex,
//!   symmetric Markov).
//! - [`transforms`] — invertible symbol relabelings (order permutation,
//!   block order permutation, explicit tables, GF(2) matrices), their cost
//!   `C(p, g) = Σ H(Y_j) − H(X)`, and the closed-form average/worst case
//!   theory behind the order permutation.
//! - [`bica`] — minimizers of the sum of marginal entropies: exact recovery
//!   when independent components exist, a branch-and-bound search over word
//!   allocations, a piecewise-linear relaxation, and GF(2) linear methods.
//! - [`coding`] — bit-exact entropy coders: Huffman, canonical Huffman with
//!   compact codebook serialization, and integer arithmetic coding (static
//!   and adaptive).
//! - [`universal`] — minimax redundancy formulas, the block-wise universal
//!   compression pipeline, and permutation-coded adaptive schemes.
//! - [`vq`] — entropy-constrained vector quantization, its marginal-coding
//!   variant, and fixed-lattice quantization with rate accounting.
//! - [`experiments`] — the seeded experiment harness behind the CLI.
//!
//! Everything is deterministic given an explicit seed; random number
//! generation goes through ChaCha so results are reproducible across
//! platforms.

pub mod bica;
pub mod coding;
pub mod error;
pub mod experiments;
pub mod io;
pub mod math;
pub mod prob;
pub mod transforms;
pub mod universal;
pub mod vq;

pub use error::{Error, Result};
pub use prob::{binary_entropy, EmpiricalCounts, JointDistribution};
pub use transforms::PermutationTransform;
