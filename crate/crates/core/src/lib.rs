//! Diversities are multiway metrics: nonnegative functions on the finite
//! subsets of a ground set that vanish on singletons and satisfy a
//! triangle-like axiom. This crate implements concrete diversities with
//! exact solvers (diameter, minimum spanning tree, exact graph Steiner
//! trees, Euclidean Steiner bounds), axiom and bound verifiers, sequence
//! convergence analysis, a desk-scale completion model, conformities (the
//! uniform-space analogue of diversities over finite grounds), the
//! chain/cycle metrization construction that recovers a pseudodiversity
//! from a nested base, and power conformities.
//!
//! All real comparisons use the crate-wide absolute tolerance [`TOL`].
//! Everything is pure and immutable after construction; with the default
//! `parallel` feature, batch operations run on rayon and produce
//! schedule-independent results.

pub mod analysis;
pub mod axioms;
pub mod completion;
pub mod conformity;
pub mod ground;
pub mod metric;
pub mod metrization;
pub mod par;
pub mod power;
pub mod zoo;

pub use ground::{DiversityValue, Error, FiniteSubset, GroundSet, Result, TOL};
