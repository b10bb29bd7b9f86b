//! Mining, cleaning and evaluating self-admitted technical debt (SATD)
//! repayments in Java and Python projects.
//!
//! * [`code_model`]: comments, debt markers, method spans, canonical forms.
//! * [`history`]: follows each debt comment through a repository's history.
//! * [`dataset`]: turns lifespans into a filtered, split repayment dataset.
//! * [`judge`]: chat-completion client and the relevance judge.
//! * [`metrics`]: line diffs, BLEU, CrystalBLEU, diff variants, EM, LEMOD.
//! * [`harness`]: prompt templates, scoring runs and run-level analyses.
//!
//! Scores are generic over [`scalar::Score`]; the aliases below fix them to
//! `f64`, which is what the file formats carry.

pub mod code_model;
pub mod dataset;
pub mod harness;
pub mod history;
pub mod judge;
pub mod metrics;
pub mod scalar;

pub use code_model::{CommentSpan, Language, MethodSpan, TokenStream};
pub use dataset::{RepaymentSample, SatdRecord};

/// Per-item metric report in double precision.
pub type MetricReport = metrics::MetricReport<f64>;
/// Per-item metric report in single precision.
pub type MetricReportF32 = metrics::MetricReport<f32>;
/// LEMOD precision/recall/F1 in double precision.
pub type LineScores = metrics::LineScores<f64>;
/// LEMOD precision/recall/F1 as exact fractions.
pub type ExactLineScores = metrics::LineScores<num_rational::Ratio<i64>>;
/// Aggregate row in double precision.
pub type AggregateRow = harness::AggregateRow<f64>;
/// A run item carrying an `f64` report.
pub type RunItem = harness::RunItem<f64>;
/// An experiment run carrying `f64` reports.
pub type ExperimentRun = harness::ExperimentRun<f64>;
