//! Simulation of radiation-based thermal servoing.
//!
//! A robot moves planar objects in front of a hot circular source to
//! regulate their temperatures. This crate computes source-to-object view
//! factors for arbitrary 6-DOF poses, turns their gradients into thermal
//! interaction matrices, and closes the loop with a model-based and an
//! adaptive velocity controller.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod control;
pub mod estimation;
pub mod feasibility;
pub mod geometry;
pub mod interaction;
pub mod simulator;
pub mod thermal;
pub mod viewfactor;

pub use error::{Error, Result};
