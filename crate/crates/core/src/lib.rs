//! Device characterization and circuit simulation for intrinsically
//! stretchable organic thin-film transistors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyses;
pub mod cli;
pub mod engine;
pub mod extract;
pub mod fixtures;
pub mod model;
pub mod netlist;
pub mod par;
