//! Local synchronization analysis of power-system devices through the
//! complex frequency of their terminal voltage and current.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cf;
pub mod cli;
pub mod devices;
pub mod network;
pub mod scenarios;
pub mod sim;
pub mod synccheck;
