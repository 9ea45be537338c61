//! IMEX Runge-Kutta finite-volume solver for the two-dimensional isentropic
//! Euler equations in the low Mach number regime, together with tools for
//! analysing double Butcher tableaux.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

// Guards are written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod implicit;
pub mod integrator;
pub mod mesh;
pub mod num;
pub mod physics;
pub mod spatial;
pub mod tableaux;

pub use error::{Error, Result};

pub type Grid = mesh::Grid2D<f64>;
pub type Field64 = mesh::Field<f64>;
pub type State64 = integrator::State<f64>;
pub type Tableau = tableaux::DoubleTableau<f64>;
pub type Params = physics::EulerParams<f64>;
pub type Case = cases::CaseSpec<f64>;
