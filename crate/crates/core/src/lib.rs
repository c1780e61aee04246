//! Numerical toolkit for slow heating in periodically driven spin systems with
//! power-law interactions.
//!
//! Everything is generic over a [`Real`] scalar (`f32` or `f64`); the `*64`
//! aliases below fix `f64`.

pub mod bounds_math;
pub mod error;
pub mod exact_backend;
pub mod heating_lab;
pub mod lattice_ops;
pub mod lieb_robinson;
pub mod linear_response;
pub mod magnus_engine;
pub mod models;
pub mod pauli_algebra;
pub mod scalar;
pub mod time_periodic;

pub use error::{Error, Result};
pub use lattice_ops::{Boundary, Lattice, LatticeConstants, SiteSet};
pub use pauli_algebra::{OperatorSum, Pauli, PauliString, PowerLawSpec};
pub use scalar::Real;
pub use time_periodic::FourierOperator;

pub type OperatorSum64 = OperatorSum<f64>;
pub type FourierOperator64 = FourierOperator<f64>;
pub type PowerLawSpec64 = PowerLawSpec<f64>;
pub type MagnusConfig64 = magnus_engine::MagnusConfig<f64>;
pub type MagnusResult64 = magnus_engine::MagnusResult<f64>;
pub type BoundParams64 = lieb_robinson::BoundParams<f64>;
pub type ResponseConfig64 = linear_response::ResponseConfig<f64>;
pub type ResponseResult64 = linear_response::ResponseResult<f64>;
pub type HeatingConfig64 = heating_lab::HeatingConfig<f64>;
pub type HeatingTrace64 = heating_lab::HeatingTrace<f64>;
pub type DeltaTrace64 = heating_lab::DeltaTrace<f64>;
