//! Lee-Yang zeros of the nonlinear collective-spin model `gamma*Jz^k + h*Jz`,
//! their detection through a coupled probe qubit, and the quantum Fisher
//! information matrix of that qubit for the coupling `lambda` and inverse
//! temperature `beta`.
//!
//! All quantities are dimensionless: the model is parameterized by
//! `beta*gamma`, `beta*h` and, for the probe, `lambda*t`.

pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod probe;
pub mod qfim;
pub mod rootfinder;

pub use error::{Error, Result};
pub use model::{ModelSpec, ScaledPolynomial, SpectrumLevel};
pub use numeric::LogComplex;
pub use probe::{QubitSpec, QubitState};
pub use rootfinder::ZeroSet;
