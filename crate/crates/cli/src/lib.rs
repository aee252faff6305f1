//! Pipeline stages and configuration behind the `eventshot` binary.

pub mod config;
pub mod error;
pub mod pipeline;
