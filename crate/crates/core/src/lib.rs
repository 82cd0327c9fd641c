//! Multistationarity certificates for fully open mass-action networks.
//!
//! The crate covers the network model ([`model`]), a text format
//! ([`parser`]), the determinant optimization method ([`engine`]) and the
//! closed forms for the sequestration family ([`seqnet`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod linalg;
pub mod model;
pub mod numfmt;
pub mod parser;
pub mod seqnet;

pub use model::{
    Complex, ConcentrationVector, ModelError, Network, RateAssignment, Reaction, ReactionKind,
};
pub use parser::{parse_network, serialize_network, ParseError};
