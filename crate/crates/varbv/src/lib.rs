//! Exact symbolic engine for the variational bicomplex over trivial graded
//! vector bundles on ℝⁿ, with the homotopy operators, homological
//! perturbation machinery, bracket tower and Batalin–Vilkovisky
//! certification layer on top.
//!
//! All core algebra is generic over the coefficient [`Scalar`]; the engine
//! is meant to run over exact rationals ([`Rat`]), where every certified
//! identity holds on the nose.

pub mod bv;
pub mod calculus;
pub mod error;
pub mod homotopy;
pub mod hpl;
pub mod linfty;
pub mod localforms;
pub mod probe;
pub mod scalar;
pub mod theory;

pub use error::Error;
pub use scalar::Scalar;

/// Exact rational coefficients: the default scalar type of the engine.
pub type Rat = num_rational::BigRational;
/// A local form with exact rational coefficients.
pub type Form = localforms::LocalForm<Rat>;
/// An evolutionary vector field with exact rational coefficients.
pub type EvField = calculus::EvolutionaryField<Rat>;
/// A horizontal-cone element with exact rational coefficients.
pub type Cone = homotopy::ConeElement<Rat>;

pub type Result<T> = std::result::Result<T, Error>;
