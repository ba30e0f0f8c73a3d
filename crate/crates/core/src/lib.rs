#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod artifacts;
pub mod barrier;
pub mod config;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod projection;
pub mod sets;
pub mod solver;
pub mod stepsize;
