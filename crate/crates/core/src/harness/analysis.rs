use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AggregateRow, ExperimentRun, RunItem};
use crate::scalar::{from_count, RealScore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("runs do not cover the same sample keys")]
    MismatchedKeys,
    #[error("no runs given")]
    NoRuns,
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooShort(usize),
    #[error("correlation undefined for a constant vector")]
    ConstantVector,
}

fn em_by_key<T>(run: &ExperimentRun<T>) -> BTreeMap<&str, u8> {
    run.items.iter().map(|i| (i.sample_key.as_str(), i.report.exact_match)).collect()
}

/// Per-key exact-match vectors, checked to cover the same keys.
fn aligned<T>(runs: &[ExperimentRun<T>]) -> Result<(Vec<&str>, Vec<Vec<u8>>), AnalysisError> {
    let first = runs.first().ok_or(AnalysisError::NoRuns)?;
    let keys: Vec<&str> = em_by_key(first).into_keys().collect();
    let mut columns = Vec::with_capacity(runs.len());
    for run in runs {
        let map = em_by_key(run);
        if map.len() != keys.len() || run.items.len() != keys.len() {
            return Err(AnalysisError::MismatchedKeys);
        }
        let col: Option<Vec<u8>> = keys.iter().map(|k| map.get(k).copied()).collect();
        columns.push(col.ok_or(AnalysisError::MismatchedKeys)?);
    }
    Ok((keys, columns))
}

/// Exact-match percentage when each item takes its best template.
pub fn oracle_em<T: RealScore>(runs: &[ExperimentRun<T>]) -> Result<T, AnalysisError> {
    let (keys, columns) = aligned(runs)?;
    if keys.is_empty() {
        return Ok(T::zero());
    }
    let solved = (0..keys.len()).filter(|&i| columns.iter().any(|c| c[i] == 1)).count();
    Ok(from_count::<T>(100) * from_count::<T>(solved) / from_count::<T>(keys.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub items: usize,
    pub addressed_by_all: usize,
    pub addressed_by_at_least_one: usize,
    pub addressed_by_exactly_one: usize,
}

/// How many items are exactly matched by every, some, or exactly one run.
pub fn coverage_counts<T>(runs: &[ExperimentRun<T>]) -> Result<Coverage, AnalysisError> {
    let (keys, columns) = aligned(runs)?;
    let solved: Vec<usize> = (0..keys.len()).map(|i| columns.iter().filter(|c| c[i] == 1).count()).collect();
    Ok(Coverage {
        items: keys.len(),
        addressed_by_all: solved.iter().filter(|&&n| n == runs.len()).count(),
        addressed_by_at_least_one: solved.iter().filter(|&&n| n >= 1).count(),
        addressed_by_exactly_one: solved.iter().filter(|&&n| n == 1).count(),
    })
}

/// Pearson product-moment correlation.
pub fn pearson<T: RealScore>(x: &[T], y: &[T]) -> Result<T, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort(x.len()));
    }
    let n = from_count::<T>(x.len());
    let mean = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(AnalysisError::ConstantVector);
    }
    Ok((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

pub const CORRELATION_LABELS: [&str; 6] =
    ["EM", "BLEU-whole", "CrystalBLEU-whole", "BLEU-diff", "CrystalBLEU-diff", "LineF1"];

/// Square correlation matrix over [`CORRELATION_LABELS`]; `None` where a
/// column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<T> {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<T>>>,
}

fn matrix<T: RealScore>(columns: [Vec<T>; 6]) -> CorrelationMatrix<T> {
    let values = columns
        .iter()
        .map(|a| columns.iter().map(|b| pearson(a, b).ok()).collect())
        .collect();
    CorrelationMatrix { labels: CORRELATION_LABELS.iter().map(|s| s.to_string()).collect(), values }
}

/// Correlations across experiments, one point per aggregate row.
pub fn correlation_matrix<T: RealScore>(rows: &[AggregateRow<T>]) -> CorrelationMatrix<T> {
    matrix([
        rows.iter().map(|r| r.em_percent).collect(),
        rows.iter().map(|r| r.bleu_whole).collect(),
        rows.iter().map(|r| r.crystal_whole).collect(),
        rows.iter().map(|r| r.bleu_diff).collect(),
        rows.iter().map(|r| r.crystal_diff).collect(),
        rows.iter().map(|r| r.line_f).collect(),
    ])
}

/// Correlations across individual items of all runs.
pub fn item_correlation_matrix<T: RealScore>(runs: &[ExperimentRun<T>]) -> CorrelationMatrix<T> {
    let items: Vec<&RunItem<T>> = runs.iter().flat_map(|r| &r.items).collect();
    matrix([
        items.iter().map(|i| from_count::<T>(usize::from(i.report.exact_match))).collect(),
        items.iter().map(|i| i.report.bleu_whole).collect(),
        items.iter().map(|i| i.report.crystal_whole).collect(),
        items.iter().map(|i| i.report.bleu_diff).collect(),
        items.iter().map(|i| i.report.crystal_diff).collect(),
        items.iter().map(|i| i.report.line_f).collect(),
    ])
}

/// Distinct model identifiers, sorted.
pub fn models<T>(runs: &[ExperimentRun<T>]) -> Vec<String> {
    runs.iter().map(|r| r.model_id.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}
