#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Scenarios, file formats and the command-line front end built on
//! [`clockphase_core`].
//!
//! The binary is a thin wrapper around [`cli::run`]; everything it does is
//! reachable from here so that tests can drive it in-process.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod scenarios;
pub mod svg;
