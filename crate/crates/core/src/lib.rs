pub mod catalog;
pub mod chaining;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod model;
pub mod profile;
pub mod quantum;
pub mod region;
pub mod sc;
pub mod scheme;
pub mod synthesis;
pub mod transform;

pub use error::{Error, Result};
