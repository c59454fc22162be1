//! Library side of the `eicp` command: configuration schema and commands.

pub mod commands;
pub mod config;
