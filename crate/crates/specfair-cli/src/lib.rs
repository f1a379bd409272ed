//! Experiment pipelines and output plumbing behind the `specfair` binary.
//!
//! Each subcommand corresponds to one pipeline in [`experiments`]; the
//! binary itself only parses flags, resolves defaults, and writes the
//! returned rows through [`output`]. The acceptance suite drives the same
//! pipeline functions directly.

pub mod experiments;
pub mod output;
