//! Command-line verbs and the HTTP service around the `unproject` core.

pub mod cli;
pub mod output;
pub mod service;
