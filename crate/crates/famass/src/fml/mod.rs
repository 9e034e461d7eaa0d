//! Front end for the FAMASS Model Language: model types, parser, canonical
//! serializer, and whole-model validation.
//!
//! The usual flow is [`parse_fml`] → [`resolve`] → hand the model to
//! [`crate::deploy`]. An empty resolve report guarantees all three
//! deployment stages succeed.

pub mod model;
mod parse;
mod resolve;
mod serialize;
mod token;

pub use model::AnalysisModel;
pub use parse::{parse_fml, ParsedModel, SourceMap};
pub use resolve::{resolve, resolve_with_spans};
pub use serialize::serialize_fml;
pub use token::{ParseError, ParseErrorKind};
