//! Simulation of optical pulse storage in a two-component Bose-Einstein
//! condensate: dark-state write-in of a slow-light probe pulse, coupled
//! Gross-Pitaevskii storage dynamics with inelastic loss, phase separation
//! and magnetic steering, and an accounting model of the read-out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod eit;
pub mod error;
pub mod gpe;
pub mod grid;
pub mod io;
pub mod protocol;
pub mod scattering;
pub mod units;

pub use error::{Error, Result};
