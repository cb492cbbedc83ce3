//! File formats, dataset ingestion and the `imtrans` command line on top of
//! `imtrans-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod losslog;
pub mod manifest;
pub mod png_io;

pub use error::{CliError, Result};
