//! Batch front-end for `silov-core`: system specs in, JSON reports out.

pub mod analyze;
pub mod app;
pub mod corpus;
pub mod io;
pub mod report;
pub mod settings;
pub mod spec;
pub mod tensor;
pub mod verify;
