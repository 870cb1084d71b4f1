//! File formats, reports and the command line for `lcn-core`.

pub mod cli;
pub mod dot;
pub mod json;
pub mod verify;
