//! Valve-regulated lead-acid battery ageing in solar home systems.
//!
//! The crate couples an electro-chemical battery model, positive-grid
//! corrosion and active-mass degradation, a three-stage charge controller
//! with an adaptive full-recharge schedule, and synthetic household load and
//! solar profiles. [`engine::run_scenario`] runs the closed loop until end of
//! life.

// `!(x > 0.0)` style checks reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod calibration;
pub mod cli;
pub mod config;
pub mod control;
pub mod degradation;
pub mod engine;
pub mod error;
pub mod profiles;

pub use error::{Error, Result};
