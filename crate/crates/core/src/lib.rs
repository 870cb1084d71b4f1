//! Logical credal networks: formulas, models, graphs and independence.
//!
//! Everything here works without `std`; only `alloc` is required.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod build;
pub mod factorize;
pub mod formula;
pub mod gen;
pub mod graph;
pub mod markov;
pub mod model;
pub mod oracle;

pub use formula::{parse_formula, Assignment, CanonicalKey, Formula, FormulaError, PropId, Scope};
pub use graph::{GraphBuilder, GraphError, MixedGraph, NodeId, NodeSet};
pub use model::{parse_lcn, validate, Constraint, Diagnostic, Group, Lcn, LcnError};
