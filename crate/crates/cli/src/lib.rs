//! Command-line and HTTP front end: configuration, one function per
//! subcommand, and the query service.

pub mod commands;
pub mod config;
pub mod engine;
pub mod server;
pub mod status;

pub use config::EngineConfig;
pub use engine::Engine;
