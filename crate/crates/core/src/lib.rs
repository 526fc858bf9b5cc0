//! Spectral-gap rigidity toolkit.
//!
//! Finite abelian groups and their duals, spectral-gap constants of measures
//! on finite groups, linear codes and the measures they induce, tracial matrix
//! algebras, constructive Gowers-Hatami rounding, and the non-local games
//! (commutation, magic square, combined Pauli game) together with checkers for
//! every quantitative rigidity bound.

pub mod abelian;
pub mod algebra;
pub mod codes;
pub mod error;
pub mod field;
pub mod fourier;
pub mod games;
pub mod group;
pub mod io;
pub mod linalg;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
/// Exact rational weights for measures.
pub type Q = num_rational::Ratio<i64>;
