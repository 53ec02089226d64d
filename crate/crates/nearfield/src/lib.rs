//! Experiment runner for `nearfield-core`: TOML configuration, a
//! trial-parallel sweep driver, CSV/SVG/JSON outputs and the `nearfield`
//! command-line tool.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod output;
pub mod sweep;

pub use config::Config;
