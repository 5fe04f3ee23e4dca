#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Finite-element simulation of thermally coupled phase-field fracture in 2D.

pub mod analytic;
pub mod energy;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod physics;
pub mod scenarios;
pub mod steppers;
pub mod verify;

pub use error::{Error, Result};
