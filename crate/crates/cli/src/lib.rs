//! Library surface of the `erwlab` command-line tool: resolved run
//! configurations, table serialization, and reproducibility manifests.
//! The binary in `main.rs` is a thin argument-parsing layer over this.

pub mod commands;
pub mod manifest;
pub mod output;
