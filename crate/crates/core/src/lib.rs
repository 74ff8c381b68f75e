//! Periodic homogenization of a monotone electrostatic equation coupled to
//! linear elasticity with electrostriction, on the unit square in 2D.

pub mod cell;
pub mod constitutive;
pub mod corrector;
pub mod effective;
pub mod error;
pub mod fem;
pub mod fields;
pub mod fine;
pub mod homogenized;

pub use error::{HkError, Result};
