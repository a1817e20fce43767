//! Core algorithms for benchmarking medical-note generation: the section
//! grammar for structured clinical notes, from-scratch ROUGE metrics,
//! BERTScore greedy matching over pluggable embeddings, judge-assessment
//! parsing, and report aggregation.
//!
//! This crate is `no_std`-compatible (with `alloc`); everything here is pure
//! computation. IO, the wire client, and the CLI live in the companion
//! `scribebench` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bertscore;
pub mod judge;
pub mod note;
pub mod report;
pub mod rouge;
