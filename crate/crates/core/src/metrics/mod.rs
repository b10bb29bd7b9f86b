//! Evaluation metrics for generated repayments.
//!
//! Whole-method metrics ([`bleu`], [`crystal_bleu`], [`exact_match`]) compare
//! the generated method with the developer's version directly. Diff metrics
//! ([`diff_based_score`], [`lemod`]) compare what each version *changed*
//! relative to the method before repayment. Every metric strips imports,
//! comments and docstrings first.

mod bleu;
mod sequence;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, crystal_bleu, trivially_shared, BleuConfig, BleuConfigError, Ngram, Smoothing, TriviallySharedNgrams};

use crate::code_model::{canonicalize, lex_fragment, strip_icd, Language, TokenStream};
use crate::scalar::{from_count, RealScore, Score};
use sequence::SequenceMatcher;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference diff is empty: ground truth equals the input after stripping")]
    EmptyReferenceDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Delete,
    Insert,
}

impl Direction {
    pub fn marker(self) -> &'static str {
        match self {
            Direction::Delete => "-",
            Direction::Insert => "+",
        }
    }
}

/// One changed line. `index` is the 0-based line position in the old text
/// for deletions and in the new text for insertions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffLine {
    pub direction: Direction,
    pub text: String,
    pub index: usize,
}

/// Changed lines between two texts, in document order, trailing whitespace
/// stripped. Unchanged lines are not represented.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineDiff {
    pub elements: Vec<DiffLine>,
}

impl LineDiff {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Unique `(direction, line)` pairs.
    pub fn set_view(&self) -> BTreeSet<(Direction, &str)> {
        self.elements.iter().map(|e| (e.direction, e.text.as_str())).collect()
    }

    pub fn count(&self, direction: Direction) -> usize {
        self.elements.iter().filter(|e| e.direction == direction).count()
    }

    /// Replays the diff on `old`, yielding the new text's lines (trailing
    /// whitespace stripped).
    pub fn apply(&self, old: &str) -> Vec<String> {
        let old_lines: Vec<&str> = split_lines(old);
        let mut out: Vec<String> = Vec::new();
        let mut pos = 0;
        for e in &self.elements {
            match e.direction {
                Direction::Delete => {
                    out.extend(old_lines[pos..e.index].iter().map(|s| s.to_string()));
                    pos = e.index + 1;
                }
                Direction::Insert => {
                    while out.len() < e.index {
                        out.push(old_lines[pos].to_string());
                        pos += 1;
                    }
                    out.push(e.text.clone());
                }
            }
        }
        out.extend(old_lines[pos..].iter().map(|s| s.to_string()));
        out
    }

    /// Token rendering used by the diff-based BLEU variants: each element
    /// contributes its direction marker followed by the line's tokens.
    pub fn render(&self, lang: Language) -> TokenStream {
        let mut tokens = Vec::new();
        for e in &self.elements {
            tokens.push(e.direction.marker().to_string());
            tokens.extend(lex_fragment(&e.text, lang).tokens);
        }
        TokenStream::new(tokens)
    }
}

fn split_lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim_end).collect()
}

/// Line diff from longest contiguous matching blocks.
pub fn line_diff(a: &str, b: &str) -> LineDiff {
    let (la, lb) = (split_lines(a), split_lines(b));
    let blocks = SequenceMatcher::new(&la, &lb).matching_blocks();
    let mut elements = Vec::new();
    let (mut i, mut j) = (0, 0);
    let tail = sequence::Block { a: la.len(), b: lb.len(), size: 0 };
    for blk in blocks.into_iter().chain(std::iter::once(tail)) {
        elements.extend((i..blk.a).map(|k| DiffLine { direction: Direction::Delete, text: la[k].to_string(), index: k }));
        elements.extend((j..blk.b).map(|k| DiffLine { direction: Direction::Insert, text: lb[k].to_string(), index: k }));
        i = blk.a + blk.size;
        j = blk.b + blk.size;
    }
    LineDiff { elements }
}

/// 1 iff the canonical forms are equal.
pub fn exact_match(ground_truth: &str, generated: &str, lang: Language) -> u8 {
    u8::from(canonicalize(ground_truth, lang) == canonicalize(generated, lang))
}

#[derive(Debug, Clone, Copy)]
pub enum DiffMetric<'s> {
    Bleu,
    Crystal(&'s TriviallySharedNgrams),
}

/// Reference and candidate diffs against the ICD-stripped input.
fn diffs(input_code: &str, ground_truth: &str, generated: &str, lang: Language) -> Result<(LineDiff, LineDiff), MetricError> {
    let input = strip_icd(input_code, lang);
    let reference = line_diff(&input, &strip_icd(ground_truth, lang));
    if reference.is_empty() {
        return Err(MetricError::EmptyReferenceDiff);
    }
    let candidate = line_diff(&input, &strip_icd(generated, lang));
    Ok((reference, candidate))
}

/// BLEU or CrystalBLEU between the rendered candidate and reference diffs.
pub fn diff_based_score<T: RealScore>(
    input_code: &str,
    ground_truth: &str,
    generated: &str,
    lang: Language,
    metric: DiffMetric<'_>,
    cfg: &BleuConfig<T>,
) -> Result<T, MetricError> {
    let (reference, candidate) = diffs(input_code, ground_truth, generated, lang)?;
    let (r, c) = (reference.render(lang), candidate.render(lang));
    Ok(match metric {
        DiffMetric::Bleu => bleu(&c, &r, cfg),
        DiffMetric::Crystal(shared) => crystal_bleu(&c, &r, shared, cfg),
    })
}

/// Line-level precision, recall and F1 over diff set views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Score> LineScores<T> {
    pub fn from_counts(intersection: usize, candidate: usize, reference: usize) -> Self {
        if candidate == 0 || intersection == 0 {
            return LineScores { precision: T::zero(), recall: T::zero(), f1: T::zero() };
        }
        let i = from_count::<T>(intersection);
        let precision = i / from_count::<T>(candidate);
        let recall = i / from_count::<T>(reference);
        let two = from_count::<T>(2);
        LineScores { precision, recall, f1: two * precision * recall / (precision + recall) }
    }
}

/// LEMOD: how many of the developer's changed lines the candidate
/// reproduces, over direction-tagged line sets.
pub fn lemod<T: Score>(input_code: &str, ground_truth: &str, generated: &str, lang: Language) -> Result<LineScores<T>, MetricError> {
    let (reference, candidate) = diffs(input_code, ground_truth, generated, lang)?;
    let (rs, cs) = (reference.set_view(), candidate.set_view());
    let inter = rs.intersection(&cs).count();
    Ok(LineScores::from_counts(inter, cs.len(), rs.len()))
}

/// Deleted and inserted line counts (multiset) of `line_diff(input, generated)`
/// after stripping.
pub fn diff_line_counts(input_code: &str, generated: &str, lang: Language) -> (usize, usize) {
    let d = line_diff(&strip_icd(input_code, lang), &strip_icd(generated, lang));
    (d.count(Direction::Delete), d.count(Direction::Insert))
}

/// Every per-item score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    pub exact_match: u8,
    pub bleu_whole: T,
    pub crystal_whole: T,
    pub bleu_diff: T,
    pub crystal_diff: T,
    pub line_p: T,
    pub line_r: T,
    pub line_f: T,
    pub deleted_lines: usize,
    pub inserted_lines: usize,
}

impl<T: RealScore> MetricReport<T> {
    /// Scores `generated` against `ground_truth`, both relative to `input_code`.
    pub fn compute(
        input_code: &str,
        ground_truth: &str,
        generated: &str,
        lang: Language,
        shared: &TriviallySharedNgrams,
        cfg: &BleuConfig<T>,
    ) -> Result<Self, MetricError> {
        let truth_tokens = whole_tokens(ground_truth, lang);
        let gen_tokens = whole_tokens(generated, lang);
        let lines: LineScores<T> = lemod(input_code, ground_truth, generated, lang)?;
        let (deleted_lines, inserted_lines) = diff_line_counts(input_code, generated, lang);
        Ok(MetricReport {
            exact_match: exact_match(ground_truth, generated, lang),
            bleu_whole: bleu(&gen_tokens, &truth_tokens, cfg),
            crystal_whole: crystal_bleu(&gen_tokens, &truth_tokens, shared, cfg),
            bleu_diff: diff_based_score(input_code, ground_truth, generated, lang, DiffMetric::Bleu, cfg)?,
            crystal_diff: diff_based_score(input_code, ground_truth, generated, lang, DiffMetric::Crystal(shared), cfg)?,
            line_p: lines.precision,
            line_r: lines.recall,
            line_f: lines.f1,
            deleted_lines,
            inserted_lines,
        })
    }
}

/// Tokens of an ICD-stripped method, as used by whole-code BLEU and for
/// building the trivially shared n-gram set.
pub fn whole_tokens(code: &str, lang: Language) -> TokenStream {
    crate::code_model::lex_tokens(&strip_icd(code, lang), lang)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn dl(d: Direction, t: &str) -> (Direction, String) {
        (d, t.to_string())
    }

    fn pairs(d: &LineDiff) -> Vec<(Direction, String)> {
        d.elements.iter().map(|e| (e.direction, e.text.clone())).collect()
    }

    #[test]
    fn diff_examples() {
        assert!(line_diff("x\ny", "x\ny").is_empty());
        assert_eq!(pairs(&line_diff("p\nq", "p\nr")), vec![dl(Direction::Delete, "q"), dl(Direction::Insert, "r")]);
        assert_eq!(pairs(&line_diff("", "p")), vec![dl(Direction::Insert, "p")]);
    }

    #[test]
    fn diff_ignores_trailing_whitespace_only() {
        assert!(line_diff("a  \nb", "a\nb\t").is_empty());
        assert_eq!(line_diff("  a", "a").len(), 2);
    }

    #[test]
    fn diff_matches_difflib_opcodes() {
        // frozen from difflib.SequenceMatcher(None, a, b, autojunk=False).get_opcodes()
        let a = "a\nb\nc\nd\ne\nf";
        let b = "a\nc\nX\nd\nf\nY";
        let got = pairs(&line_diff(a, b));
        let want = vec![
            dl(Direction::Delete, "b"),
            dl(Direction::Insert, "X"),
            dl(Direction::Delete, "e"),
            dl(Direction::Insert, "Y"),
        ];
        assert_eq!(got, want);
        assert_eq!(line_diff(a, b).apply(a), split_lines(b));
    }

    #[test]
    fn apply_reconstructs() {
        let a = "1\n2\n3\n4";
        let b = "0\n2\n2\n4\n5";
        assert_eq!(line_diff(a, b).apply(a), vec!["0", "2", "2", "4", "5"]);
    }

    // input / truth / generated with |reference| = 2, |candidate| = 3, |∩| = 1
    const INPUT: &str = "def f(x):\n    # TODO: validate x\n    y = x + 1\n    return y";
    const TRUTH: &str = "def f(x):\n    if x is None:\n        raise ValueError\n    y = x + 1\n    return y";
    const GENERATED: &str = "def f(x):\n    if x is None:\n        return None\n    y = x + 1\n    log(y)\n    return y";

    #[test]
    fn lemod_worked_example() {
        let s: LineScores<f64> = lemod(INPUT, TRUTH, GENERATED, Language::Python).unwrap();
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
        assert!((s.f1 - 0.4).abs() < 1e-12);
        let exact: LineScores<Ratio<i64>> = lemod(INPUT, TRUTH, GENERATED, Language::Python).unwrap();
        assert_eq!((exact.precision, exact.recall, exact.f1), (Ratio::new(1, 3), Ratio::new(1, 2), Ratio::new(2, 5)));
    }

    #[test]
    fn anchors() {
        let cfg = BleuConfig::<f64>::default();
        let lang = Language::Python;
        let shared = TriviallySharedNgrams::empty();
        assert_eq!(exact_match(TRUTH, TRUTH, lang), 1);
        assert_eq!(diff_based_score(INPUT, TRUTH, TRUTH, lang, DiffMetric::Bleu, &cfg).unwrap(), 1.0);
        assert_eq!(diff_based_score(INPUT, TRUTH, INPUT, lang, DiffMetric::Crystal(&shared), &cfg).unwrap(), 0.0);
        let s: LineScores<f64> = lemod(INPUT, TRUTH, INPUT, lang).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s: LineScores<f64> = lemod(INPUT, TRUTH, TRUTH, lang).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_reference_is_error() {
        let r: Result<LineScores<f64>, _> = lemod(INPUT, INPUT, TRUTH, Language::Python);
        assert_eq!(r, Err(MetricError::EmptyReferenceDiff));
        // comment-only change strips to the same text
        let cfg = BleuConfig::<f64>::default();
        let only_comment = "def f(x):\n    y = x + 1\n    return y";
        assert!(diff_based_score(INPUT, only_comment, TRUTH, Language::Python, DiffMetric::Bleu, &cfg).is_err());
    }

    #[test]
    fn line_counts_are_multiset() {
        let lang = Language::Python;
        assert_eq!(diff_line_counts("a = 1", "a = 1", lang), (0, 0));
        assert_eq!(diff_line_counts("a = 1\nb = 2", "a = 1\nb = 3", lang), (1, 1));
        assert_eq!(diff_line_counts("a = 1", "a = 1\npass\npass", lang), (0, 2));
    }

    #[test]
    fn exact_match_examples() {
        let lang = Language::Java;
        let truth = "int f() {\n  return 1;\n}";
        assert_eq!(exact_match(truth, "int f() {\n  // simplified\n  return 1;\n}", lang), 1);
        assert_eq!(exact_match(truth, truth, lang), 1);
        assert_eq!(exact_match(truth, "int g() {\n  return 1;\n}", lang), 0);
    }

    #[test]
    fn render_has_direction_markers() {
        let d = line_diff("a = 1", "b = 1");
        assert_eq!(d.render(Language::Python).tokens, vec!["-", "a", "=", "1", "+", "b", "=", "1"]);
    }
}
