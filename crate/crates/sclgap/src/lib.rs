//! File formats, the command-line front end and the acceptance suite for
//! `sclgap-core`.

pub mod acceptance;
pub mod cli;
pub mod formats;
