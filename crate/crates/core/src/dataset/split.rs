use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::RepaymentSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.85, validation: 0.05, test: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("cannot split {repositories} repositories into three disjoint sets")]
    SplitImpossible { repositories: usize },
    #[error("split ratios must be nonnegative and sum to 1")]
    InvalidRatios,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<RepaymentSample>,
    pub validation: Vec<RepaymentSample>,
    pub test: Vec<RepaymentSample>,
    pub seed: u64,
}

/// Repository counts per bucket. Nonzero validation and test ratios get at
/// least one repository each; training takes the remainder.
fn bucket_sizes(n: usize, r: SplitRatios) -> Result<(usize, usize, usize), SplitError> {
    let ratios = [r.train, r.validation, r.test];
    if ratios.iter().any(|x| !x.is_finite() || *x < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::InvalidRatios);
    }
    if n < 3 {
        return Err(SplitError::SplitImpossible { repositories: n });
    }
    let size = |ratio: f64| if ratio > 0.0 { ((ratio * n as f64).round() as usize).max(1) } else { 0 };
    let (val, test) = (size(r.validation), size(r.test));
    match n.checked_sub(val + test) {
        Some(0) if r.train > 0.0 => Err(SplitError::SplitImpossible { repositories: n }),
        Some(train) => Ok((train, val, test)),
        None => Err(SplitError::SplitImpossible { repositories: n }),
    }
}

/// Shuffles the repositories (by user and project) with `seed` and
/// allocates whole repositories to train, validation and test. Samples keep
/// their input order within each bucket.
pub fn split_by_repository(
    samples: &[RepaymentSample],
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit, SplitError> {
    let repos: BTreeSet<(&str, &str)> =
        samples.iter().map(|s| (s.record.user.as_str(), s.record.project.as_str())).collect();
    let mut repos: Vec<(&str, &str)> = repos.into_iter().collect();
    let (train, val, _) = bucket_sizes(repos.len(), ratios)?;
    repos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let bucket: HashMap<(&str, &str), usize> = repos
        .iter()
        .enumerate()
        .map(|(i, repo)| (*repo, if i < train { 0 } else if i < train + val { 1 } else { 2 }))
        .collect();
    let mut out = DatasetSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new(), seed };
    for s in samples {
        let target = match bucket[&(s.record.user.as_str(), s.record.project.as_str())] {
            0 => &mut out.train,
            1 => &mut out.validation,
            _ => &mut out.test,
        };
        target.push(s.clone());
    }
    Ok(out)
}
