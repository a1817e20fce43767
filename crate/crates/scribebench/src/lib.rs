//! IO, wire clients, pipelines, and the command-line surface for the
//! scribebench toolkit. The pure metric and parsing kernels live in
//! `scribebench-core` and are re-exported here as [`core`] modules.

pub mod cli;
pub mod client;
pub mod config;
pub mod dataset;
pub mod embed;
pub mod generator;
pub mod judging;
pub mod report;
pub mod synthesis;
pub mod util;

pub use scribebench_core as core;
