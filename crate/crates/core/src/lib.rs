//! Numerical analysis of weighted Bergman-type operators on the unit ball of C^N.
//!
//! The core types are generic over the floating-point scalar ([`Real`]);
//! the aliases below fix it to `f64`.

pub mod classes;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod integration;
pub mod kernels;
pub mod maximal;
pub mod operators;
pub mod sampling;
pub mod scalar;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::{lit, Real};

pub type Point = geometry::BallPoint<f64>;
pub type Ball = geometry::PseudoBall<f64>;
pub type Estimate = integration::MCEstimate<f64>;
pub type ComplexEstimate = integration::MCEstimate<f64, num_complex::Complex<f64>>;
pub type Weight = weights::Weight<f64>;
pub type Point32 = geometry::BallPoint<f32>;
pub type Ball32 = geometry::PseudoBall<f32>;
