pub mod classifier;
pub mod corpus;
pub mod error;
pub mod ingest;
pub mod features;
pub mod flow;
pub mod linguistics;
pub mod pipeline;
pub mod search;

pub use error::{Error, Result};
