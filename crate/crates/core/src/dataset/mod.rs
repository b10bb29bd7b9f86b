//! From raw debt lifespans to a clean repayment dataset: method-pair
//! extraction, the heuristic and judge filters, persistence and
//! repository-wise splitting.

mod io;
mod judge_step;
mod source;
mod split;

use std::collections::{HashMap, HashSet};
use std::fmt;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code_model::{
    canonicalize, containing_method, extract_comments, extract_methods, lex_tokens, satd_word_count, CommentSpan,
    Language, MethodSpan, SatdDetector,
};
use crate::history::GitRepo;

pub use crate::history::SatdRecord;
pub use io::{read_dataset, read_jsonl, read_stats, write_dataset, write_jsonl, write_stats, DatasetError};
pub use judge_step::{apply_judge_filter, JudgeOutcome};
pub use source::{MemorySource, SourceError, SourceProvider};
pub use split::{split_by_repository, DatasetSplit, SplitError, SplitRatios};

/// A debt comment together with its containing method before and after
/// the commit that removed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepaymentSample {
    #[serde(flatten)]
    pub record: SatdRecord,
    pub method_before: String,
    pub method_after: String,
}

impl RepaymentSample {
    /// Stable identifier used to join generations and reports.
    pub fn key(&self) -> String {
        let r = &self.record;
        format!(
            "{}/{}:{}:{}:{}",
            r.user,
            r.project,
            r.deletion_commit.as_deref().unwrap_or("-"),
            r.file_path,
            r.line_before_deletion.unwrap_or(0)
        )
    }

    pub fn language(&self) -> Language {
        self.record.language
    }
}

/// Why a record did not become a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    NotDeleted,
    TooShort,
    NotInMethod,
    NameGone,
    NotUpdated,
    SatdCount,
    Duplicate,
    NonAscii,
    TooLong,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NotDeleted => "step1_not_deleted",
            Rejection::TooShort => "step2_too_short",
            Rejection::NotInMethod => "step3_not_in_method",
            Rejection::NameGone => "step4_name_gone",
            Rejection::NotUpdated => "step5_not_updated",
            Rejection::SatdCount => "step9_satd_count",
            Rejection::Duplicate => "step6_duplicate",
            Rejection::NonAscii => "step7_non_ascii",
            Rejection::TooLong => "step8_too_long",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Survivor counts per filter step, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub rows: Vec<(String, usize)>,
}

impl FilterStats {
    pub fn push(&mut self, step: &str, count: usize) {
        self.rows.push((step.to_string(), count));
    }

    pub fn count(&self, step: &str) -> Option<usize> {
        self.rows.iter().find(|(s, _)| s == step).map(|(_, c)| *c)
    }

    pub fn last(&self) -> Option<usize> {
        self.rows.last().map(|(_, c)| *c)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

pub mod steps {
    pub const TOTAL: &str = "total";
    pub const DELETED: &str = "deleted";
    pub const MIN_WORDS: &str = "min_words";
    pub const IN_METHOD: &str = "in_method";
    pub const NAME_SURVIVES: &str = "name_survives";
    pub const METHOD_UPDATED: &str = "method_updated";
    pub const SINGLE_SATD: &str = "single_satd";
    pub const DEDUP: &str = "dedup";
    pub const ASCII_ONLY: &str = "ascii_only";
    pub const TOKEN_LIMIT: &str = "token_limit";
    pub const LLM_JUDGE: &str = "llm_judge";
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub detector: SatdDetector,
    pub min_words: usize,
    /// Maximum lexer tokens per method version.
    pub max_tokens: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { detector: SatdDetector::default(), min_words: 3, max_tokens: 1024 }
    }
}

/// Finds the repository a record came from.
pub trait RepoAccess: Sync {
    fn source_for(&self, record: &SatdRecord) -> Option<&dyn SourceProvider>;
}

impl RepoAccess for GitRepo {
    fn source_for(&self, _: &SatdRecord) -> Option<&dyn SourceProvider> {
        Some(self)
    }
}

impl RepoAccess for MemorySource {
    fn source_for(&self, _: &SatdRecord) -> Option<&dyn SourceProvider> {
        Some(self)
    }
}

/// Several repositories, looked up by `(user, project)`.
#[derive(Default)]
pub struct RepoSet {
    repos: HashMap<(String, String), Box<dyn SourceProvider + Send>>,
}

impl RepoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: &str, project: &str, source: impl SourceProvider + Send + 'static) {
        self.repos.insert((user.into(), project.into()), Box::new(source));
    }

    pub fn len(&self) -> usize {
        self.repos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.repos.is_empty()
    }
}

impl RepoAccess for RepoSet {
    fn source_for(&self, record: &SatdRecord) -> Option<&dyn SourceProvider> {
        let source = self.repos.get(&(record.user.clone(), record.project.clone()))?;
        Some(source.as_ref() as &dyn SourceProvider)
    }
}

fn lines_between(source: &str, start: usize, end: usize) -> String {
    source.lines().skip(start - 1).take(end + 1 - start).collect::<Vec<_>>().join("\n")
}

/// First line of the comment block directly attached (no blank lines) above
/// `start`.
fn attached_start(source: &str, comments: &[CommentSpan], mut start: usize) -> usize {
    let lines: Vec<&str> = source.lines().collect();
    while start > 1 {
        let above = comments.iter().find(|c| {
            c.end_line == start - 1
                && lines
                    .get(c.start_line - 1)
                    .is_some_and(|l| l.trim_start().starts_with(c.text.lines().next().unwrap_or("").trim_start()))
        });
        match above {
            Some(c) => start = c.start_line,
            None => break,
        }
    }
    start
}

fn fetch(result: Result<Option<String>, SourceError>, what: &str) -> Option<String> {
    result.unwrap_or_else(|e| {
        warn!("cannot read {what}: {e}");
        None
    })
}

/// Containing method of the deleted comment at the parent of the deletion
/// commit, and the same-named method at the deletion commit. Methods carry
/// the comment block attached directly above them.
pub fn extract_method_pair(record: &SatdRecord, source: &dyn SourceProvider) -> Result<(String, String), Rejection> {
    let (Some(deletion), Some(line)) = (record.deletion_commit.as_deref(), record.line_before_deletion) else {
        return Err(Rejection::NotDeleted);
    };
    let lang = record.language;
    let parent = fetch(source.parent_of(deletion), "parent commit").ok_or(Rejection::NotInMethod)?;
    let before_src =
        fetch(source.file_at(&parent, &record.file_path), &record.file_path).ok_or(Rejection::NotInMethod)?;
    let methods = extract_methods(&before_src, lang).map_err(|_| Rejection::NotInMethod)?;
    let comments = extract_comments(&before_src, lang);
    let method: &MethodSpan =
        containing_method(line, &methods, &comments, &before_src, lang).ok_or(Rejection::NotInMethod)?;

    let after_path = source
        .path_after(&parent, deletion, &record.file_path, lang)
        .unwrap_or_else(|e| {
            warn!("cannot resolve {} after {deletion}: {e}", record.file_path);
            None
        })
        .ok_or(Rejection::NameGone)?;
    let after_src = fetch(source.file_at(deletion, &after_path), &after_path).ok_or(Rejection::NameGone)?;
    let after_methods = extract_methods(&after_src, lang).map_err(|_| Rejection::NameGone)?;
    let twin = after_methods
        .iter()
        .filter(|a| a.name == method.name && (lang != Language::Java || a.param_count == method.param_count))
        .min_by_key(|a| (a.start_line.abs_diff(method.start_line), a.start_line))
        .ok_or(Rejection::NameGone)?;

    let before_start = attached_start(&before_src, &comments, method.start_line).min(line);
    let before = lines_between(&before_src, before_start, method.end_line);
    let after_comments = extract_comments(&after_src, lang);
    let after = lines_between(&after_src, attached_start(&after_src, &after_comments, twin.start_line), twin.end_line);
    if canonicalize(&before, lang) == canonicalize(&after, lang) {
        return Err(Rejection::NotUpdated);
    }
    Ok((before, after))
}

fn satd_count(text: &str, lang: Language, detector: &SatdDetector) -> usize {
    extract_comments(text, lang).iter().filter(|c| detector.is_satd(&c.text)).count()
}

fn order_key(s: &RepaymentSample) -> (String, i64, String, usize, String, String) {
    let r = &s.record;
    (
        r.project.clone(),
        r.deletion_timestamp.unwrap_or(i64::MAX),
        r.file_path.clone(),
        r.line_before_deletion.unwrap_or(0),
        r.user.clone(),
        r.creation_commit.clone(),
    )
}

/// The heuristic filter steps, with survivor counts after each. Samples are
/// ordered by project, deletion time, file and line.
pub fn apply_heuristic_filters<A: RepoAccess + ?Sized>(
    records: &[SatdRecord],
    access: &A,
    cfg: &FilterConfig,
) -> (Vec<RepaymentSample>, FilterStats) {
    let mut stats = FilterStats::default();
    stats.push(steps::TOTAL, records.len());
    let deleted: Vec<&SatdRecord> =
        records.iter().filter(|r| r.deletion_commit.is_some() && r.line_before_deletion.is_some()).collect();
    stats.push(steps::DELETED, deleted.len());
    let worded: Vec<&SatdRecord> =
        deleted.into_iter().filter(|r| satd_word_count(&r.comment_text) >= cfg.min_words).collect();
    stats.push(steps::MIN_WORDS, worded.len());

    let extracted: Vec<Result<RepaymentSample, Rejection>> = worded
        .par_iter()
        .map(|r| {
            let source = access.source_for(r).ok_or(Rejection::NotInMethod)?;
            let (method_before, method_after) = extract_method_pair(r, source)?;
            let mut record = (*r).clone();
            if record.deletion_timestamp.is_none() {
                let deletion = record.deletion_commit.as_deref().expect("filtered above");
                record.deletion_timestamp = source.timestamp_of(deletion).ok().flatten();
            }
            Ok(RepaymentSample { record, method_before, method_after })
        })
        .collect();
    let rejected = |why: Rejection| extracted.iter().filter(|e| e.as_ref().err() == Some(&why)).count();
    let in_method = worded.len() - rejected(Rejection::NotInMethod);
    let name_survives = in_method - rejected(Rejection::NameGone);
    let updated = name_survives - rejected(Rejection::NotUpdated);
    stats.push(steps::IN_METHOD, in_method);
    stats.push(steps::NAME_SURVIVES, name_survives);
    stats.push(steps::METHOD_UPDATED, updated);

    let mut samples: Vec<RepaymentSample> = extracted.into_iter().filter_map(Result::ok).collect();
    samples.retain(|s| {
        let lang = s.language();
        satd_count(&s.method_before, lang, &cfg.detector) == 1 && satd_count(&s.method_after, lang, &cfg.detector) == 0
    });
    stats.push(steps::SINGLE_SATD, samples.len());

    samples.sort_by_cached_key(order_key);
    let mut seen: HashSet<(String, String)> = HashSet::new();
    samples.retain(|s| seen.insert((s.method_before.clone(), s.method_after.clone())));
    stats.push(steps::DEDUP, samples.len());

    samples.retain(|s| s.record.comment_text.is_ascii() && s.method_before.is_ascii() && s.method_after.is_ascii());
    stats.push(steps::ASCII_ONLY, samples.len());

    samples.retain(|s| {
        let lang = s.language();
        lex_tokens(&s.method_before, lang).len() <= cfg.max_tokens
            && lex_tokens(&s.method_after, lang).len() <= cfg.max_tokens
    });
    stats.push(steps::TOKEN_LIMIT, samples.len());
    (samples, stats)
}
