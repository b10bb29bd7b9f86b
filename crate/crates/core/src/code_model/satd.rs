use regex::Regex;

pub const DEFAULT_DEBT_KEYWORDS: &[&str] = &["TODO", "FIXME", "HACK", "XXX"];

/// Keyword-based debt detector: a comment is SATD when it contains one of
/// the keywords as a case-insensitive whole word.
#[derive(Debug, Clone)]
pub struct SatdDetector {
    keywords: Vec<String>,
    pattern: Regex,
}

impl SatdDetector {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Self {
        let keywords: Vec<String> = keywords.iter().map(|k| k.as_ref().to_string()).collect();
        let alternation = keywords.iter().map(|k| regex::escape(k)).collect::<Vec<_>>().join("|");
        // an empty alternation would match everywhere
        let source = if keywords.is_empty() { r"\b\B".to_string() } else { format!(r"(?i)\b(?:{alternation})\b") };
        let pattern = Regex::new(&source).expect("escaped keyword pattern is valid");
        SatdDetector { keywords, pattern }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn is_satd(&self, comment_text: &str) -> bool {
        self.pattern.is_match(comment_text)
    }
}

impl Default for SatdDetector {
    fn default() -> Self {
        SatdDetector::new(DEFAULT_DEBT_KEYWORDS)
    }
}

/// [`SatdDetector::is_satd`] with the default keyword set.
pub fn detect_satd(comment_text: &str) -> bool {
    thread_local! {
        static DEFAULT: SatdDetector = SatdDetector::default();
    }
    DEFAULT.with(|d| d.is_satd(comment_text))
}

fn strip_string_prefix(s: &str) -> &str {
    let prefix_len = s.chars().take_while(|c| matches!(c, 'r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F')).count();
    let rest = &s[prefix_len..];
    if prefix_len <= 2 && (rest.starts_with("\"\"\"") || rest.starts_with("'''")) {
        rest
    } else {
        s
    }
}

fn strip_line_delimiters(line: &str) -> &str {
    let mut s = line.trim();
    if s.starts_with("//") {
        s = s.trim_start_matches('/');
    } else if let Some(rest) = s.strip_prefix("/*") {
        s = rest.trim_start_matches('*');
    } else if s.starts_with('#') {
        s = s.trim_start_matches('#');
    } else {
        s = strip_string_prefix(s);
        if let Some(rest) = s.strip_prefix("\"\"\"").or_else(|| s.strip_prefix("'''")) {
            s = rest;
        } else if s.starts_with('*') && !s.starts_with("*/") {
            s = s.trim_start_matches('*');
        }
    }
    let mut s = s.trim_end();
    if let Some(rest) = s.strip_suffix("*/") {
        s = rest.trim_end_matches('*');
    } else if let Some(rest) = s.strip_suffix("\"\"\"").or_else(|| s.strip_suffix("'''")) {
        s = rest;
    }
    s
}

/// Whitespace-separated words of a comment after removing `//`, `/*`, `*/`,
/// leading `*`, `#` and triple quotes.
pub fn comment_words(comment_text: &str) -> Vec<&str> {
    comment_text.lines().flat_map(|l| strip_line_delimiters(l).split_whitespace()).collect()
}

pub fn satd_word_count(comment_text: &str) -> usize {
    comment_words(comment_text).len()
}
