//! Reference implementations shared by the integration tests and the
//! acceptance harness. Each one is written directly from the definitions,
//! with no attempt at speed, and shares no code with the library.
#![allow(dead_code)]

pub mod kn;
pub mod lattices;
pub mod wer;
