//! Scoring engine for external human-machine interface (eHMI) proposals.
//!
//! A proposal is scored in seven categories from per-question answers. Each
//! category's questionnaire is data: a schema lists its questions, their
//! point expressions and the skip logic between them. Category scores are
//! combined with a weight vector summing to 7 into a total out of 70.
//!
//! This crate has no IO. `ehmi` adds file formats, the CLI and the HTTP API.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod answers;
pub mod costkit;
pub mod formula;
pub mod report;
pub mod schema;
pub mod scoring;

pub use answers::{validate, AnswerValue, Binary, NormalizedAnswerSet, ProposalAnswerSet, Validated};
pub use formula::{Env, Expr};
pub use report::{compare, weight_sweep, ComparisonReport, SensitivityReport, SweepSpec};
pub use schema::{load_schema, AnswerKind, Category, QuestionnaireSchema, SchemaDocument, SchemaSet};
pub use scoring::{evaluate_proposal, CategoryScores, Evaluation, WeightVector};
