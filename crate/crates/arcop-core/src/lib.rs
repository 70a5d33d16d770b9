//! Exact combinatorial engine for brane-labelled windowed surfaces and their
//! algebraic shadows.
//!
//! The crate is built around three layers:
//!
//! * [`algebra`] — finite-dimensional Frobenius algebras over an exact field,
//!   brane-labelled systems of such algebras, adjoints and the condition
//!   checks (C)/(E)/(I).
//! * [`surface`] and [`gluing`] — windowed surfaces carrying weighted arc
//!   graphs with explicit complementary-region decompositions, and the four
//!   closed/open (self-)gluing operations on them.
//! * [`bar`], [`correlator`], [`sullivan`] and [`moduli`] — double-sided bar
//!   complexes, the region-product correlator of a discretely weighted arc
//!   graph, its dualizations into operations, the cell layer and the
//!   moduli-space predicates.
//!
//! Everything is exact: scalars are arbitrary-precision rationals or residues
//! mod 2, never floats. All values are immutable after construction.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod bar;
pub mod correlator;
pub mod error;
pub mod field;
pub mod gluing;
pub mod moduli;
pub mod sullivan;
pub mod surface;

mod complex;

pub use error::Error;
pub use field::{Field, Mod2, Rational};
