//! Simulation and analysis toolkit for a peristaltic micropump driven by
//! three piezo-composite (LIPCA) actuators.
//!
//! * [`laminate`]: classical laminate theory with thermal-analogy piezo loading.
//! * [`signal`]: the three-phase drive schedule.
//! * [`pump`]: lumped flow characteristic, calibration and cycle bookkeeping.
//! * [`power`]: sense-resistor power measurement and synthetic load channels.
//! * [`scope`], [`config`]: the oscilloscope CSV and configuration file formats.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod laminate;
pub mod output;
pub mod power;
pub mod pump;
pub mod scope;
pub mod signal;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
