//! HTTP service and command-line front end for the `wealth_target` engines.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod schema;
pub mod service;
pub mod sessions;
