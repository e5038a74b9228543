pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod lexical;
pub mod pipeline;
pub mod reranker;
pub mod run;
pub mod scoring;
pub mod supervision;

pub use error::{Error, Result};
