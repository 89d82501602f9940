//! Batch front end for `stokes-spectra`: config handling, sweeps and report
//! files. The binary in `main.rs` is a thin clap layer over [`commands`].

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
