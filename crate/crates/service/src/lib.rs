//! HTTP services, chain client and command line for the `ctcfuse` decoder.
//!
//! Three services share one set of [`pipeline::Models`]:
//!
//! - transcription: `POST /transcribe` (multipart `file`) and
//!   `POST /transcribe_lattice` (RLAT body)
//! - hyphen and capitalization: `GET|POST /correct` with `text`
//! - unknown words: `GET|POST /correct` with `text`
//!
//! [`chain::ChainClient`] calls them in order; [`pipeline::Models::run_chain`]
//! does the same in-process.

pub mod chain;
pub mod cli;
pub mod config;
pub mod http;
pub mod pipeline;
