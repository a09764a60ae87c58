pub mod anchor;
pub mod artifact;
pub mod cli;
pub mod diff;
pub mod error;
pub mod forge;
pub mod persist;
pub mod project;
pub mod report;
pub mod topology;
pub mod vcs;
pub mod workflow;

pub use error::{Error, ErrorFamily, Result};
