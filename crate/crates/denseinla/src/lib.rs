//! Std companion to `denseinla-core`: worker pools, model specs, CSV and
//! JSON formats, simulation presets and the `denseinla` command line.

pub mod cli;
pub mod compare;
pub mod graph_io;
pub mod pool;
pub mod report;
pub mod scenario;
pub mod spec;
pub mod wire;
