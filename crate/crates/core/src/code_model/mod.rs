//! Language-aware source handling for Java and Python: comments, debt
//! markers, method boundaries, import/comment/docstring stripping,
//! canonical forms for exact matching, and token streams.
//!
//! Everything here is lexical. There is no grammar and no AST; the scanners
//! never fail, and only method extraction reports malformed input.

mod lexer;
mod methods;
mod normalize;
mod satd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use methods::{containing_method, extract_methods, MethodError};
pub use normalize::{canonicalize, strip_icd};
pub use satd::{comment_words, detect_satd, satd_word_count, SatdDetector, DEFAULT_DEBT_KEYWORDS};

use lexer::{scan, LexKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
}

impl Language {
    pub fn extension(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "py",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Java => "java",
            Language::Python => "python",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            other => Err(format!("unsupported language `{other}` (expected java or python)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommentKind {
    Line,
    Block,
    Docstring,
}

/// A comment with its raw text (markers included) and 1-based line span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentSpan {
    pub text: String,
    pub kind: CommentKind,
    pub start_line: usize,
    pub end_line: usize,
}

/// A method or function with its 1-based line span. `start_line` covers
/// leading annotations, modifiers and decorators; `text` is exactly the
/// source lines `start_line..=end_line`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpan {
    pub name: String,
    pub signature_line: usize,
    pub start_line: usize,
    pub end_line: usize,
    pub param_count: usize,
    pub text: String,
}

impl MethodSpan {
    pub fn contains(&self, line: usize) -> bool {
        self.start_line <= line && line <= self.end_line
    }
}

pub const INDENT_MARKER: &str = "<INDENT>";
pub const DEDENT_MARKER: &str = "<DEDENT>";
pub const NEWLINE_MARKER: &str = "<NEWLINE>";

/// Ordered tokens. No token is empty or contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        TokenStream { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl<S: Into<String>> FromIterator<S> for TokenStream {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenStream::new(iter.into_iter().map(Into::into).collect())
    }
}

/// All comments in `source`, sorted by start line. Python docstrings are
/// reported as comments; string literals never are.
pub fn extract_comments(source: &str, lang: Language) -> Vec<CommentSpan> {
    let scanned = scan(source, lang);
    scanned
        .lexemes
        .iter()
        .filter_map(|l| match l.kind {
            LexKind::Comment(kind) => Some(CommentSpan {
                text: l.text(source).to_string(),
                kind,
                start_line: l.line,
                end_line: l.end_line,
            }),
            _ => None,
        })
        .collect()
}

/// Splits `text` into tokens. Literals and comments that contain whitespace
/// are split on it, so for Java the concatenation of the tokens is the input
/// with whitespace removed. Python streams carry `<INDENT>`, `<DEDENT>` and
/// `<NEWLINE>` markers.
pub fn lex_tokens(text: &str, lang: Language) -> TokenStream {
    let scanned = scan(text, lang);
    let mut tokens = Vec::with_capacity(scanned.lexemes.len());
    for l in &scanned.lexemes {
        match l.kind {
            LexKind::Newline => tokens.push(NEWLINE_MARKER.to_string()),
            LexKind::Indent => tokens.push(INDENT_MARKER.to_string()),
            LexKind::Dedent => tokens.push(DEDENT_MARKER.to_string()),
            _ => tokens.extend(l.text(text).split_whitespace().map(str::to_string)),
        }
    }
    TokenStream::new(tokens)
}

/// Like [`lex_tokens`] but without structural markers; used for isolated
/// lines, which carry no block structure of their own.
pub fn lex_fragment(text: &str, lang: Language) -> TokenStream {
    let scanned = scan(text, lang);
    TokenStream::new(
        scanned
            .lexemes
            .iter()
            .filter(|l| !l.kind.is_structural())
            .flat_map(|l| l.text(text).split_whitespace().map(str::to_string))
            .collect(),
    )
}
