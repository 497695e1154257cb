//! Minimizers of the sum of component marginal entropies.

pub mod exact;
pub mod linear;
pub mod relax;
