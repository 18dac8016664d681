//! Experiment harness around the Bregman subgradient toolkit: config
//! parsing, seeded runs with persisted traces, stepsize/seed sweeps,
//! trace diagnostics, and a self-test battery.

// Guards written as `!(x > 0.0)` intentionally reject NaN along with the
// wrong sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod diagnose;
pub mod runner;
