//! Command-line driver: configuration, subcommands, and the framed client/server
//! protocol for delegating evaluation to another process.

pub mod commands;
pub mod config;
pub mod frame;
pub mod protocol;
pub mod wire;
