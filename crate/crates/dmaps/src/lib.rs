//! Command-line experiments and file formats on top of `dmaps-core`.
//!
//! The `dmaps` binary exposes four commands:
//!
//! - `bias-sweep`: continuum-operator eigenvalue errors against the limiting
//!   generator over an `eps` grid, with log-log rate fits;
//! - `variance-sweep`: eigenspace errors of sampled diffusion maps over
//!   sample sizes, bandwidths and trials;
//! - `assa-trace`: residual traces of plain Sinkhorn iteration and ASSA;
//! - `spectrum`: the diffusion-map spectrum of a point cloud from a CSV file.
//!
//! Each command writes CSV tables (first row: tool version, configuration
//! hash and seed), a gnuplot script and a JSON summary. Output is a pure
//! function of the configuration and seed.

pub mod config;
pub mod experiments;
pub mod io;
pub mod plot;
