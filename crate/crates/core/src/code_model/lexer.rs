//! Lexical scanners for Java and Python.
//!
//! Both scanners are total: malformed input (unterminated strings or block
//! comments, inconsistent dedents) is recorded as an [`Anomaly`] and scanning
//! continues on a best-effort basis.

use super::{CommentKind, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LexKind {
    Ident,
    Number,
    Str,
    Op,
    Other,
    Comment(CommentKind),
    Newline,
    Indent,
    Dedent,
}

impl LexKind {
    pub(crate) fn is_comment(self) -> bool {
        matches!(self, LexKind::Comment(_))
    }

    pub(crate) fn is_structural(self) -> bool {
        matches!(self, LexKind::Newline | LexKind::Indent | LexKind::Dedent)
    }
}

/// One lexical unit. Structural markers have `start == end`.
#[derive(Debug, Clone)]
pub(crate) struct Lexeme {
    pub kind: LexKind,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub end_line: usize,
    pub col: usize,
}

impl Lexeme {
    pub(crate) fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub(crate) fn is(&self, src: &str, s: &str) -> bool {
        !self.kind.is_structural() && self.text(src) == s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Anomaly {
    Unterminated { line: usize },
    Indentation { line: usize },
}

pub(crate) struct Scan<'a> {
    pub src: &'a str,
    pub lexemes: Vec<Lexeme>,
    pub anomaly: Option<Anomaly>,
}

impl<'a> Scan<'a> {
    fn note(&mut self, a: Anomaly) {
        if self.anomaly.is_none() {
            self.anomaly = Some(a);
        }
    }
}

pub(crate) fn scan(src: &str, lang: Language) -> Scan<'_> {
    match lang {
        Language::Java => scan_java(src),
        Language::Python => scan_python(src),
    }
}

const JAVA_OPS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

const PYTHON_OPS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0, line: 1, line_start: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn col(&self) -> usize {
        self.src[self.line_start..self.pos].chars().count()
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    /// End offset of the current token, excluding a trailing `\r`.
    fn end_before_cr(&self, start: usize) -> usize {
        if self.pos > start && self.src[start..self.pos].ends_with('\r') {
            self.pos - 1
        } else {
            self.pos
        }
    }
}

struct Start {
    pos: usize,
    line: usize,
    col: usize,
}

impl Start {
    fn at(cur: &Cursor<'_>) -> Self {
        Start { pos: cur.pos, line: cur.line, col: cur.col() }
    }

    fn finish(self, kind: LexKind, end: usize, end_line: usize) -> Lexeme {
        Lexeme { kind, start: self.pos, end, line: self.line, end_line, col: self.col }
    }
}

fn scan_number(cur: &mut Cursor<'_>) {
    let hex = cur.starts_with("0x") || cur.starts_with("0X");
    while let Some(c) = cur.peek() {
        if !(c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            break;
        }
        cur.bump();
        let exponent = if hex { c == 'p' || c == 'P' } else { c == 'e' || c == 'E' };
        if exponent && matches!(cur.peek(), Some('+') | Some('-')) {
            cur.bump();
        }
    }
}

fn scan_operator(cur: &mut Cursor<'_>, ops: &[&str]) -> LexKind {
    if let Some(op) = ops.iter().find(|op| cur.starts_with(op)) {
        cur.bump_n(op.len());
        return LexKind::Op;
    }
    let c = cur.bump().unwrap_or_default();
    if c.is_ascii_punctuation() {
        LexKind::Op
    } else {
        LexKind::Other
    }
}

fn scan_java(src: &str) -> Scan<'_> {
    let mut out = Scan { src, lexemes: Vec::new(), anomaly: None };
    let mut cur = Cursor::new(src);
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = Start::at(&cur);
        let kind = if cur.starts_with("//") {
            cur.skip_to_eol();
            let end = cur.end_before_cr(start.pos);
            let line = cur.line;
            out.lexemes.push(start.finish(LexKind::Comment(CommentKind::Line), end, line));
            continue;
        } else if cur.starts_with("/*") {
            cur.bump_n(2);
            loop {
                if cur.starts_with("*/") {
                    cur.bump_n(2);
                    break;
                }
                if cur.bump().is_none() {
                    out.note(Anomaly::Unterminated { line: start.line });
                    break;
                }
            }
            LexKind::Comment(CommentKind::Block)
        } else if cur.starts_with("\"\"\"") {
            cur.bump_n(3);
            loop {
                if cur.starts_with("\\") {
                    cur.bump_n(2);
                    continue;
                }
                if cur.starts_with("\"\"\"") {
                    cur.bump_n(3);
                    break;
                }
                if cur.bump().is_none() {
                    out.note(Anomaly::Unterminated { line: start.line });
                    break;
                }
            }
            LexKind::Str
        } else if c == '"' || c == '\'' {
            cur.bump();
            loop {
                match cur.peek() {
                    None | Some('\n') => {
                        out.note(Anomaly::Unterminated { line: start.line });
                        break;
                    }
                    Some('\\') => cur.bump_n(2),
                    Some(q) if q == c => {
                        cur.bump();
                        break;
                    }
                    _ => {
                        cur.bump();
                    }
                }
            }
            LexKind::Str
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            while matches!(cur.peek(), Some(ch) if ch.is_alphanumeric() || ch == '_' || ch == '$') {
                cur.bump();
            }
            LexKind::Ident
        } else if c.is_ascii_digit() || (c == '.' && matches!(cur.peek_at(1), Some(d) if d.is_ascii_digit())) {
            scan_number(&mut cur);
            LexKind::Number
        } else {
            scan_operator(&mut cur, JAVA_OPS)
        };
        let end = cur.end_before_cr(start.pos);
        let line = cur.line;
        out.lexemes.push(start.finish(kind, end, line));
    }
    out
}

fn is_string_prefix(s: &str) -> bool {
    s.len() <= 2 && s.chars().all(|c| matches!(c, 'r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F'))
}

/// Scans a Python string body starting at the opening quote; returns false
/// when the literal is unterminated.
fn scan_py_string(cur: &mut Cursor<'_>) -> bool {
    let q = match cur.peek() {
        Some(q) => q,
        None => return false,
    };
    let triple: String = std::iter::repeat_n(q, 3).collect();
    if cur.starts_with(&triple) {
        cur.bump_n(3);
        loop {
            if cur.starts_with("\\") {
                cur.bump_n(2);
                continue;
            }
            if cur.starts_with(&triple) {
                cur.bump_n(3);
                return true;
            }
            if cur.bump().is_none() {
                return false;
            }
        }
    }
    cur.bump();
    loop {
        match cur.peek() {
            None | Some('\n') => return false,
            Some('\\') => cur.bump_n(2),
            Some(ch) if ch == q => {
                cur.bump();
                return true;
            }
            _ => {
                cur.bump();
            }
        }
    }
}

fn marker(kind: LexKind, cur: &Cursor<'_>) -> Lexeme {
    Lexeme { kind, start: cur.pos, end: cur.pos, line: cur.line, end_line: cur.line, col: cur.col() }
}

fn scan_python(src: &str) -> Scan<'_> {
    let mut out = Scan { src, lexemes: Vec::new(), anomaly: None };
    let mut cur = Cursor::new(src);
    let mut indents: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let mut at_line_start = true;
    let mut line_has_tokens = false;

    loop {
        if at_line_start {
            let mut width = 0usize;
            loop {
                match cur.peek() {
                    Some(' ') => width += 1,
                    Some('\t') => width = (width / 8 + 1) * 8,
                    Some('\x0c') => width = 0,
                    _ => break,
                }
                cur.bump();
            }
            match cur.peek() {
                None => break,
                Some('\n') | Some('\r') => {
                    cur.bump();
                    continue;
                }
                Some('#') => {
                    let start = Start::at(&cur);
                    cur.skip_to_eol();
                    let end = cur.end_before_cr(start.pos);
                    let line = cur.line;
                    out.lexemes.push(start.finish(LexKind::Comment(CommentKind::Line), end, line));
                    continue;
                }
                Some(_) => {}
            }
            let top = *indents.last().unwrap_or(&0);
            if width > top {
                indents.push(width);
                out.lexemes.push(marker(LexKind::Indent, &cur));
            } else if width < top {
                while width < *indents.last().unwrap_or(&0) {
                    indents.pop();
                    out.lexemes.push(marker(LexKind::Dedent, &cur));
                }
                if width != *indents.last().unwrap_or(&0) {
                    let line = cur.line;
                    out.note(Anomaly::Indentation { line });
                    indents.push(width);
                }
            }
            at_line_start = false;
        }

        let c = match cur.peek() {
            Some(c) => c,
            None => break,
        };
        if c == '\n' {
            if depth == 0 {
                if line_has_tokens {
                    out.lexemes.push(marker(LexKind::Newline, &cur));
                }
                line_has_tokens = false;
                at_line_start = true;
            }
            cur.bump();
            continue;
        }
        if c == '\\' && (cur.starts_with("\\\n") || cur.starts_with("\\\r\n")) {
            while cur.bump() != Some('\n') {}
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }

        let start = Start::at(&cur);
        let kind = if c == '#' {
            cur.skip_to_eol();
            let end = cur.end_before_cr(start.pos);
            let line = cur.line;
            out.lexemes.push(start.finish(LexKind::Comment(CommentKind::Line), end, line));
            continue;
        } else if c == '"' || c == '\'' {
            if !scan_py_string(&mut cur) {
                out.note(Anomaly::Unterminated { line: start.line });
            }
            LexKind::Str
        } else if c.is_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(ch) if ch.is_alphanumeric() || ch == '_') {
                cur.bump();
            }
            if is_string_prefix(&src[start.pos..cur.pos]) && matches!(cur.peek(), Some('"') | Some('\'')) {
                if !scan_py_string(&mut cur) {
                    out.note(Anomaly::Unterminated { line: start.line });
                }
                LexKind::Str
            } else {
                LexKind::Ident
            }
        } else if c.is_ascii_digit() || (c == '.' && matches!(cur.peek_at(1), Some(d) if d.is_ascii_digit())) {
            scan_number(&mut cur);
            LexKind::Number
        } else {
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth = depth.saturating_sub(1),
                _ => {}
            }
            scan_operator(&mut cur, PYTHON_OPS)
        };
        line_has_tokens = true;
        let end = cur.end_before_cr(start.pos);
        let line = cur.line;
        out.lexemes.push(start.finish(kind, end, line));
    }

    if line_has_tokens {
        out.lexemes.push(marker(LexKind::Newline, &cur));
    }
    while indents.len() > 1 {
        indents.pop();
        out.lexemes.push(marker(LexKind::Dedent, &cur));
    }
    mark_docstrings(&mut out.lexemes);
    out
}

/// A string literal forming a statement on its own is a docstring.
fn mark_docstrings(lexemes: &mut [Lexeme]) {
    let significant = |k: LexKind| !k.is_comment();
    for i in 0..lexemes.len() {
        if lexemes[i].kind != LexKind::Str {
            continue;
        }
        let prev = lexemes[..i].iter().rev().find(|l| significant(l.kind));
        let next = lexemes[i + 1..].iter().find(|l| significant(l.kind));
        let starts_statement = prev.is_none_or(|l| l.kind.is_structural());
        let ends_statement = next.is_none_or(|l| l.kind == LexKind::Newline);
        if starts_statement && ends_statement {
            lexemes[i].kind = LexKind::Comment(CommentKind::Docstring);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str, lang: Language) -> Vec<(LexKind, String)> {
        let s = scan(src, lang);
        s.lexemes.iter().map(|l| (l.kind, l.text(src).to_string())).collect()
    }

    #[test]
    fn java_block_comment_spanning_lines() {
        let src = "int a; /* x\n y */ int b;";
        let s = scan(src, Language::Java);
        let c = s.lexemes.iter().find(|l| l.kind.is_comment()).unwrap();
        assert_eq!((c.line, c.end_line), (1, 2));
        assert!(s.anomaly.is_none());
    }

    #[test]
    fn java_unterminated_block_is_recorded() {
        let s = scan("a /* never closed", Language::Java);
        assert_eq!(s.anomaly, Some(Anomaly::Unterminated { line: 1 }));
    }

    #[test]
    fn java_exponent_literal() {
        let k = kinds("x=1.5e-3;", Language::Java);
        assert_eq!(k[2], (LexKind::Number, "1.5e-3".to_string()));
    }

    #[test]
    fn python_structure_markers() {
        let k: Vec<LexKind> = kinds("if x:\n    y\nz\n", Language::Python).into_iter().map(|(k, _)| k).collect();
        use LexKind::*;
        assert_eq!(k, vec![Ident, Ident, Op, Newline, Indent, Ident, Newline, Dedent, Ident, Newline]);
    }

    #[test]
    fn python_brackets_join_lines() {
        let k = kinds("f(a,\n  b)\n", Language::Python);
        assert_eq!(k.iter().filter(|(k, _)| *k == LexKind::Newline).count(), 1);
        assert!(k.iter().all(|(k, _)| *k != LexKind::Indent));
    }

    #[test]
    fn python_prefixed_and_triple_strings() {
        let k = kinds("x = rb'a' + f\"\"\"b\nc\"\"\"\n", Language::Python);
        let strs: Vec<&str> = k.iter().filter(|(k, _)| *k == LexKind::Str).map(|(_, t)| t.as_str()).collect();
        assert_eq!(strs, vec!["rb'a'", "f\"\"\"b\nc\"\"\""]);
    }

    #[test]
    fn python_docstring_only_when_statement() {
        let src = "def f():\n    \"\"\"doc\"\"\"\n    return \"s\"\n";
        let k = kinds(src, Language::Python);
        assert!(k.contains(&(LexKind::Comment(CommentKind::Docstring), "\"\"\"doc\"\"\"".into())));
        assert!(k.contains(&(LexKind::Str, "\"s\"".into())));
    }

    #[test]
    fn python_bad_dedent_is_anomaly() {
        let s = scan("if x:\n        a\n    b\n", Language::Python);
        assert_eq!(s.anomaly, Some(Anomaly::Indentation { line: 3 }));
    }
}
