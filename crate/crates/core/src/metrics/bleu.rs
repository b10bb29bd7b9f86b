use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::code_model::TokenStream;
use crate::scalar::{from_count, from_f64, RealScore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Any order with zero matches makes the score zero.
    None,
    /// Zero-match orders get precision `epsilon / total`.
    Epsilon(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BleuConfigError {
    #[error("max n-gram order must be at least 1")]
    ZeroOrder,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weights must be nonnegative and sum to 1 (sum = {0})")]
    WeightSum(f64),
}

/// N-gram order and per-order weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuConfig<T: RealScore = f64> {
    max_order: usize,
    weights: Vec<T>,
    pub smoothing: Smoothing,
}

impl<T: RealScore> BleuConfig<T> {
    pub fn new(weights: Vec<T>) -> Result<Self, BleuConfigError> {
        if weights.is_empty() {
            return Err(BleuConfigError::ZeroOrder);
        }
        let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
        let sum64 = sum.to_f64().unwrap_or(f64::NAN);
        if weights.iter().any(|w| *w < T::zero()) || (sum64 - 1.0).abs() > 1e-6 {
            return Err(BleuConfigError::WeightSum(sum64));
        }
        Ok(BleuConfig { max_order: weights.len(), weights, smoothing: Smoothing::None })
    }

    pub fn with_order(max_order: usize, weights: Vec<T>) -> Result<Self, BleuConfigError> {
        if max_order == 0 {
            return Err(BleuConfigError::ZeroOrder);
        }
        if weights.len() != max_order {
            return Err(BleuConfigError::WeightCount { expected: max_order, got: weights.len() });
        }
        Self::new(weights)
    }

    pub fn uniform(max_order: usize) -> Result<Self, BleuConfigError> {
        if max_order == 0 {
            return Err(BleuConfigError::ZeroOrder);
        }
        let w = T::one() / from_count::<T>(max_order);
        Self::new(vec![w; max_order])
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

impl<T: RealScore> Default for BleuConfig<T> {
    /// BLEU-4 with equal weights.
    fn default() -> Self {
        Self::uniform(4).expect("order 4 is valid")
    }
}

pub type Ngram = Vec<String>;

/// The most frequent n-grams of a corpus, excluded by CrystalBLEU.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriviallySharedNgrams {
    pub ngrams: HashSet<Ngram>,
    pub k: usize,
}

impl TriviallySharedNgrams {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    fn contains(&self, gram: &[String]) -> bool {
        // HashSet<Vec<String>> can be probed with a slice through Borrow
        self.ngrams.contains(gram)
    }
}

/// For every order `1..=max_order`, the `k` most frequent n-grams over the
/// corpus (ties broken by lexicographic n-gram order), unioned.
pub fn trivially_shared(corpus: &[TokenStream], k: usize, max_order: usize) -> TriviallySharedNgrams {
    let mut ngrams = HashSet::new();
    if k == 0 {
        return TriviallySharedNgrams { ngrams, k };
    }
    for n in 1..=max_order {
        let mut freq: HashMap<&[String], usize> = HashMap::new();
        for stream in corpus {
            for gram in stream.as_slice().windows(n) {
                *freq.entry(gram).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&[String], usize)> = freq.into_iter().collect();
        ranked.sort_unstable_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
        ngrams.extend(ranked.into_iter().take(k).map(|(g, _)| g.to_vec()));
    }
    TriviallySharedNgrams { ngrams, k }
}

fn counts<'t>(tokens: &'t [String], n: usize, exclude: Option<&TriviallySharedNgrams>) -> HashMap<&'t [String], usize> {
    let mut out = HashMap::new();
    for gram in tokens.windows(n) {
        if exclude.is_some_and(|s| s.contains(gram)) {
            continue;
        }
        *out.entry(gram).or_insert(0) += 1;
    }
    out
}

fn score<T: RealScore>(
    candidate: &[String],
    reference: &[String],
    cfg: &BleuConfig<T>,
    exclude: Option<&TriviallySharedNgrams>,
) -> T {
    if candidate.is_empty() {
        return T::zero();
    }
    let mut log_sum = T::zero();
    let mut weight_sum = T::zero();
    for (idx, &w) in cfg.weights.iter().enumerate() {
        let n = idx + 1;
        let cand = counts(candidate, n, exclude);
        let total: usize = cand.values().sum();
        if total == 0 {
            continue;
        }
        let refs = counts(reference, n, exclude);
        let matched: usize = cand.iter().map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
        let p = if matched > 0 {
            from_count::<T>(matched) / from_count::<T>(total)
        } else {
            match cfg.smoothing {
                Smoothing::None => return T::zero(),
                Smoothing::Epsilon(eps) => from_f64::<T>(eps) / from_count::<T>(total),
            }
        };
        log_sum = log_sum + w * p.ln();
        weight_sum = weight_sum + w;
    }
    if weight_sum <= T::zero() {
        return T::zero();
    }
    let c = from_count::<T>(candidate.len());
    let r = from_count::<T>(reference.len());
    let bp = if c > r { T::one() } else { (T::one() - r / c).exp() };
    let s = bp * (log_sum / weight_sum).exp();
    s.max(T::zero()).min(T::one())
}

/// Sentence BLEU with clipped n-gram precisions and brevity penalty.
///
/// Orders for which the candidate has no n-grams are skipped and the
/// remaining weights renormalised; an empty candidate scores 0.
pub fn bleu<T: RealScore>(candidate: &TokenStream, reference: &TokenStream, cfg: &BleuConfig<T>) -> T {
    score(candidate.as_slice(), reference.as_slice(), cfg, None)
}

/// BLEU with `shared` n-grams removed from both sides' counts. The brevity
/// penalty still uses full token lengths.
pub fn crystal_bleu<T: RealScore>(
    candidate: &TokenStream,
    reference: &TokenStream,
    shared: &TriviallySharedNgrams,
    cfg: &BleuConfig<T>,
) -> T {
    score(candidate.as_slice(), reference.as_slice(), cfg, Some(shared))
}
