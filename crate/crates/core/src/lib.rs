//! Process algebra with true concurrency: terms, operational semantics,
//! event structures, behavioural equivalences and an axiomatic rewriter.

pub mod actor;
pub mod cases;
pub mod data;
pub mod dsl;
pub mod enumerate;
pub mod equiv;
pub mod error;
pub mod fuzz;
pub mod model;
pub mod pes;
pub mod rewrite;
pub mod sos;
pub mod term;

pub use error::{Error, Result};
