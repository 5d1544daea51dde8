//! Coupled nonlocal peridynamic operators on the periodic unit torus, with the
//! Marcinkiewicz-type integrals, fractional seminorms, matrix Poisson kernels,
//! g-functions and Riesz/Bessel potentials that surround them.
//!
//! Everything is generic over the field scalar ([`Real`]: `f32` or `f64`);
//! the `f64` aliases below cover the common case.

pub mod grid;
pub mod kernels;
pub mod marcinkiewicz;
pub mod operator;
pub mod poisson;
pub mod potentials;
pub mod random;
pub mod scalar;
pub mod solver;
pub mod special;

pub use scalar::Real;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("conjugate symmetry violated: relative imaginary residue {residue:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolation { residue: f64, tolerance: f64 },
    #[error("bond undefined for coincident points")]
    Diagonal,
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("field has mean {0:.3e}; the multiplier is undefined at frequency zero")]
    NonzeroMean(f64),
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type VectorField = grid::GridVectorField<f64>;
pub type ScalarField = grid::ScalarGridField<f64>;
pub type Spectrum = grid::SpectralVectorField<f64>;
pub type VectorField32 = grid::GridVectorField<f32>;
pub type ScalarField32 = grid::ScalarGridField<f32>;
pub type Spectrum32 = grid::SpectralVectorField<f32>;
pub type Operator = operator::DirectOperator<f64>;
