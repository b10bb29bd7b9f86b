//! Repayment experiments: prompting, code extraction, scoring, aggregation
//! and cross-run analyses.

mod analysis;
mod templates;

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{lex_tokens, strip_icd, Language, TokenStream};
use crate::dataset::RepaymentSample;
use crate::judge::{ChatClient, ChatRequest, ClientError};
use crate::metrics::{line_diff, trivially_shared, BleuConfig, Direction, MetricError, MetricReport, TriviallySharedNgrams};
use crate::scalar::{from_count, RealScore};

pub use analysis::{
    correlation_matrix, coverage_counts, item_correlation_matrix, models, oracle_em, pearson, AnalysisError,
    CorrelationMatrix, Coverage, CORRELATION_LABELS,
};
pub use templates::{render_repayment_prompt, PromptTemplate, TemplateError, TemplateName, CODE_SLOT, COMMENT_SLOT};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("sample {key}: {source}")]
    Metric {
        key: String,
        #[source]
        source: MetricError,
    },
    #[error("duplicate sample key {0}")]
    DuplicateKey(String),
    #[error("no generation for sample {0}")]
    MissingGeneration(String),
}

/// The code a model proposed: the last fenced block (an unclosed final
/// fence runs to the end), else whatever follows the last "Updated code"
/// heading, else the whole response.
pub fn extract_code_from_response(response: &str) -> String {
    let lines: Vec<&str> = response.lines().collect();
    let fences: Vec<usize> =
        lines.iter().enumerate().filter(|(_, l)| l.trim_start().starts_with("```")).map(|(i, _)| i).collect();
    if !fences.is_empty() {
        let (open, close) = if fences.len() % 2 == 1 {
            (fences[fences.len() - 1], lines.len())
        } else {
            (fences[fences.len() - 2], fences[fences.len() - 1])
        };
        return lines[open + 1..close].join("\n");
    }
    let heading = lines.iter().rposition(|l| {
        l.trim().trim_start_matches(['#', '*', ' ']).to_ascii_lowercase().starts_with("updated code")
    });
    match heading {
        Some(i) => lines[i + 1..].join("\n").trim().to_string(),
        None => response.trim().to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        })
    }
}

pub const EASY_MAX_INSERTED: usize = 2;

/// Easy when the developer's repayment inserts at most two lines, ignoring
/// imports, comments and docstrings; deletions do not count.
pub fn classify_difficulty(sample: &RepaymentSample) -> Difficulty {
    let lang = sample.language();
    let diff = line_diff(&strip_icd(&sample.method_before, lang), &strip_icd(&sample.method_after, lang));
    if diff.count(Direction::Insert) <= EASY_MAX_INSERTED {
        Difficulty::Easy
    } else {
        Difficulty::Hard
    }
}

/// Scores one generation against the developer's repayment.
pub fn evaluate_item<T: RealScore>(
    sample: &RepaymentSample,
    generated_code: &str,
    shared: &TriviallySharedNgrams,
    cfg: &BleuConfig<T>,
) -> Result<MetricReport<T>, HarnessError> {
    MetricReport::compute(&sample.method_before, &sample.method_after, generated_code, sample.language(), shared, cfg)
        .map_err(|source| HarnessError::Metric { key: sample.key(), source })
}

/// Trivially shared n-grams of the ground-truth methods of `lang`.
pub fn shared_ngrams_for(samples: &[RepaymentSample], lang: Language, k: usize, max_order: usize) -> TriviallySharedNgrams {
    let corpus: Vec<TokenStream> = samples
        .iter()
        .filter(|s| s.language() == lang)
        .map(|s| lex_tokens(&strip_icd(&s.method_after, lang), lang))
        .collect();
    trivially_shared(&corpus, k, max_order)
}

/// A raw model response for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub sample_key: String,
    pub model_id: String,
    pub template_name: String,
    pub generated_raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunItem<T> {
    pub sample_key: String,
    pub model_id: String,
    pub template_name: String,
    pub generated_raw: String,
    pub extracted_code: String,
    pub difficulty: Difficulty,
    #[serde(flatten)]
    pub report: MetricReport<T>,
}

/// All scored items of one (model, template) pair on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun<T> {
    pub model_id: String,
    pub template_name: String,
    pub dataset_id: String,
    pub items: Vec<RunItem<T>>,
}

impl<T> ExperimentRun<T> {
    pub fn new(model_id: &str, template_name: &str, dataset_id: &str, items: Vec<RunItem<T>>) -> Result<Self, HarnessError> {
        let mut seen = HashSet::new();
        if let Some(dup) = items.iter().find(|i| !seen.insert(i.sample_key.as_str())) {
            return Err(HarnessError::DuplicateKey(dup.sample_key.clone()));
        }
        Ok(ExperimentRun {
            model_id: model_id.into(),
            template_name: template_name.into(),
            dataset_id: dataset_id.into(),
            items,
        })
    }

    /// Groups run-file items by (model, template).
    pub fn group(items: Vec<RunItem<T>>, dataset_id: &str) -> Result<Vec<Self>, HarnessError> {
        type Group<T> = ((String, String), Vec<RunItem<T>>);
        let mut groups: Vec<Group<T>> = Vec::new();
        for item in items {
            let key = (item.model_id.clone(), item.template_name.clone());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(item),
                None => groups.push((key, vec![item])),
            }
        }
        groups.into_iter().map(|((m, t), items)| ExperimentRun::new(&m, &t, dataset_id, items)).collect()
    }
}

/// Sends every sample through `tpl` to `model`, in sample order.
pub fn generate(
    samples: &[RepaymentSample],
    tpl: &PromptTemplate,
    client: &ChatClient,
    model: &str,
) -> Vec<Result<Generation, ClientError>> {
    let requests: Vec<ChatRequest> = samples
        .iter()
        .map(|s| ChatRequest::new(model, tpl.render(&s.method_before, &s.record.comment_text)))
        .collect();
    samples
        .iter()
        .zip(client.complete_many(&requests))
        .map(|(s, r)| {
            r.map(|generated_raw| Generation {
                sample_key: s.key(),
                model_id: model.to_string(),
                template_name: tpl.name.to_string(),
                generated_raw,
            })
        })
        .collect()
}

/// Scores generations against their samples. Items follow sample order;
/// generations are matched by (model, template, key).
pub fn evaluate_generations<T: RealScore>(
    samples: &[RepaymentSample],
    generations: &[Generation],
    shared: &HashMap<Language, TriviallySharedNgrams>,
    cfg: &BleuConfig<T>,
) -> Result<Vec<RunItem<T>>, HarnessError> {
    let keys: HashMap<String, (usize, &RepaymentSample)> =
        samples.iter().enumerate().map(|(i, s)| (s.key(), (i, s))).collect();
    let empty = TriviallySharedNgrams::empty();
    let mut scored: Vec<(usize, usize, RunItem<T>)> = generations
        .par_iter()
        .enumerate()
        .map(|(g, gen)| {
            let (idx, sample) = *keys.get(&gen.sample_key).ok_or_else(|| HarnessError::MissingGeneration(gen.sample_key.clone()))?;
            let extracted_code = extract_code_from_response(&gen.generated_raw);
            let ngrams = shared.get(&sample.language()).unwrap_or(&empty);
            let report = evaluate_item(sample, &extracted_code, ngrams, cfg)?;
            Ok((idx, g, RunItem {
                sample_key: gen.sample_key.clone(),
                model_id: gen.model_id.clone(),
                template_name: gen.template_name.clone(),
                generated_raw: gen.generated_raw.clone(),
                extracted_code,
                difficulty: classify_difficulty(sample),
                report,
            }))
        })
        .collect::<Result<_, HarnessError>>()?;
    scored.sort_by_key(|(idx, g, _)| (*idx, *g));
    Ok(scored.into_iter().map(|(_, _, item)| item).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Easy,
    Hard,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::All => "all",
            Subset::Easy => "easy",
            Subset::Hard => "hard",
        })
    }
}

/// Means over one subset of a run; exact match as a percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow<T> {
    pub model: String,
    pub template: String,
    pub subset: Subset,
    pub n: usize,
    pub em_percent: T,
    pub bleu_whole: T,
    pub crystal_whole: T,
    pub bleu_diff: T,
    pub crystal_diff: T,
    pub line_p: T,
    pub line_r: T,
    pub line_f: T,
    pub avg_deleted: T,
    pub avg_inserted: T,
}

fn summarize<T: RealScore>(run: &ExperimentRun<T>, subset: Subset, items: &[&RunItem<T>]) -> AggregateRow<T> {
    let n = from_count::<T>(items.len());
    let mean = |f: &dyn Fn(&RunItem<T>) -> T| items.iter().fold(T::zero(), |a, i| a + f(i)) / n;
    let exact = items.iter().filter(|i| i.report.exact_match == 1).count();
    AggregateRow {
        model: run.model_id.clone(),
        template: run.template_name.clone(),
        subset,
        n: items.len(),
        em_percent: from_count::<T>(100) * from_count::<T>(exact) / n,
        bleu_whole: mean(&|i| i.report.bleu_whole),
        crystal_whole: mean(&|i| i.report.crystal_whole),
        bleu_diff: mean(&|i| i.report.bleu_diff),
        crystal_diff: mean(&|i| i.report.crystal_diff),
        line_p: mean(&|i| i.report.line_p),
        line_r: mean(&|i| i.report.line_r),
        line_f: mean(&|i| i.report.line_f),
        avg_deleted: mean(&|i| from_count(i.report.deleted_lines)),
        avg_inserted: mean(&|i| from_count(i.report.inserted_lines)),
    }
}

/// Rows for all items, then the easy and hard subsets; empty subsets are
/// omitted, so an empty run yields no rows.
pub fn aggregate<T: RealScore>(run: &ExperimentRun<T>) -> Vec<AggregateRow<T>> {
    let all: Vec<&RunItem<T>> = run.items.iter().collect();
    if all.is_empty() {
        return Vec::new();
    }
    let mut rows = vec![summarize(run, Subset::All, &all)];
    for (subset, d) in [(Subset::Easy, Difficulty::Easy), (Subset::Hard, Difficulty::Hard)] {
        let part: Vec<&RunItem<T>> = all.iter().copied().filter(|i| i.difficulty == d).collect();
        if !part.is_empty() {
            rows.push(summarize(run, subset, &part));
        }
    }
    rows
}
