//! Command-line driver: configuration, a rayon executor, report layouts and
//! the command implementations behind the `pruefer` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod pool;
pub mod report;
