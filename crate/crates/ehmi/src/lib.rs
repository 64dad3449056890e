//! File formats, command line and HTTP API around [`ehmi_core`].

pub mod cli;
pub mod data;
pub mod engine;
pub mod export;
pub mod io;
pub mod replicate;
pub mod service;
