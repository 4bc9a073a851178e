//! Multi-layer robust crop planning: land units on a grid, crop rotation
//! dynamics, neighbour interactions, and a Wasserstein distributionally
//! robust objective over Monte Carlo scenarios.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod seed;
pub mod spatial;
pub mod temporal;
pub mod uncertainty;

pub use error::{Error, Result};
pub use model::{
    validate_instance, AgronomicState, Cell, Crop, CropCategory, InstanceViolation,
    InteractionMatrix, LandType, LandUnit, Plan, PlanningInstance,
};
