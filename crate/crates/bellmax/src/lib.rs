//! Exact Bellman functions for dyadic-like maximal operators on weighted
//! spaces, the extremal functions and trees that attain them, and a numerical
//! harness that verifies every bound and sharpness claim.
//!
//! The crate is organised bottom-up:
//!
//! * [`tree`] — finite tree-structured probability spaces, the associated
//!   maximal operator, and the special `S_alpha` family of trees.
//! * [`step`] — piecewise power-sum functions on `(0,1]`, decreasing
//!   rearrangements, the Hardy averaging operator, and weighted integrals
//!   (closed form where possible, adaptive quadrature otherwise).
//! * [`bellman`] — the inverse `omega_p` of `H_p(z) = -(p-1)z^p + p z^(p-1)`,
//!   the unweighted and weighted Bellman-type upper bounds, the one-parameter
//!   envelope bound and its minimisation, and moment bounds for weighted
//!   maximal operators.
//! * [`weight`] — Muckenhoupt-type constants on trees and best pairs `(a, c)`
//!   for nonincreasing weights on `(0,1]`, exact for power weights.
//! * [`extremal`] — the extremal family `g(t) = f (1-a) t^(-a)`, geometric
//!   rank profiles on `S_alpha` trees, and the small-`alpha` limit experiment
//!   that exhibits sharpness of the weighted bound.
//! * [`verify`] — seeded randomized checks for each inequality, the
//!   symmetrization (rearrangement) comparison, a brute-force supremum
//!   search, and report types with stable JSON/CSV output.
//! * [`cli`] — the command-line driver used by the `bellmax` binary.
//!
//! Everything is deterministic: randomized checks take an explicit seed and
//! produce bit-identical instances and reports for identical inputs.

pub mod bellman;
pub mod cli;
pub mod error;
pub mod extremal;
mod quad;
pub mod step;
pub mod tree;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
