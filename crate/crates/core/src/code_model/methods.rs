use thiserror::Error;

use super::lexer::{scan, Anomaly, LexKind, Lexeme, Scan};
use super::{CommentSpan, Language, MethodSpan};

/// Reasons a file defeats lexical method detection. Callers skip the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MethodError {
    #[error("unbalanced braces near line {line}")]
    BraceImbalance { line: usize },
    #[error("inconsistent indentation near line {line}")]
    IndentationAnomaly { line: usize },
    #[error("unterminated literal or comment starting at line {line}")]
    Unterminated { line: usize },
}

/// All methods in `source`, sorted by start line. Nested methods (local or
/// anonymous classes, inner functions) are reported alongside their parents.
pub fn extract_methods(source: &str, lang: Language) -> Result<Vec<MethodSpan>, MethodError> {
    let scanned = scan(source, lang);
    match scanned.anomaly {
        Some(Anomaly::Unterminated { line }) => return Err(MethodError::Unterminated { line }),
        Some(Anomaly::Indentation { line }) => return Err(MethodError::IndentationAnomaly { line }),
        None => {}
    }
    let lines: Vec<&str> = source.lines().collect();
    let mut spans = match lang {
        Language::Java => java_methods(&scanned)?,
        Language::Python => python_methods(&scanned)?,
    };
    for m in &mut spans {
        m.text = lines[m.start_line - 1..m.end_line.min(lines.len())].join("\n");
    }
    spans.sort_by_key(|m| (m.start_line, m.signature_line));
    Ok(spans)
}

struct Partial {
    name: String,
    signature_line: usize,
    start_line: usize,
    end_line: usize,
    param_count: usize,
}

impl From<Partial> for MethodSpan {
    fn from(p: Partial) -> Self {
        MethodSpan {
            name: p.name,
            signature_line: p.signature_line,
            start_line: p.start_line,
            end_line: p.end_line,
            param_count: p.param_count,
            text: String::new(),
        }
    }
}

const JAVA_NOT_NAMES: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "try", "do", "else", "super",
    "this", "throw", "case", "assert", "yield",
];

const JAVA_NOT_AFTER: &[&str] = &["new", "return", "throw", "else", "case", "yield", "record", "assert"];

/// Index of the token closing the group opened at `open`, or None.
fn matching(toks: &[&Lexeme], src: &str, open: usize, left: &str, right: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (k, t) in toks.iter().enumerate().skip(open) {
        let s = t.text(src);
        if s == left {
            depth += 1;
        } else if s == right {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

/// Parameters between `open` and `close`, counting top-level commas.
fn count_params(toks: &[&Lexeme], src: &str, open: usize, close: usize) -> usize {
    let inner = &toks[open + 1..close];
    if inner.is_empty() {
        return 0;
    }
    let mut depth: isize = 0;
    let mut commas = 0;
    for t in inner {
        match t.text(src) {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" => depth -= 1,
            ">>" => depth -= 2,
            ">>>" => depth -= 3,
            "," if depth <= 0 => commas += 1,
            _ => {}
        }
    }
    let trailing = inner.last().is_some_and(|t| t.text(src) == ",");
    commas + 1 - usize::from(trailing)
}

fn java_methods(scanned: &Scan<'_>) -> Result<Vec<MethodSpan>, MethodError> {
    let src = scanned.src;
    let toks: Vec<&Lexeme> = scanned.lexemes.iter().filter(|l| !l.kind.is_comment()).collect();
    let text = |i: usize| toks[i].text(src);
    let n = toks.len();
    let mut out = Vec::new();

    for i in 0..n {
        if toks[i].kind != LexKind::Ident || JAVA_NOT_NAMES.contains(&text(i)) {
            continue;
        }
        if i + 1 >= n || text(i + 1) != "(" {
            continue;
        }
        let prev_ok = match i.checked_sub(1) {
            None => true,
            Some(p) => match toks[p].kind {
                LexKind::Ident => !JAVA_NOT_AFTER.contains(&text(p)),
                LexKind::Op => match text(p) {
                    ">" | ">>" | ">>>" | "]" | "{" | "}" | ";" => true,
                    ")" => closes_annotation(&toks, src, p),
                    _ => false,
                },
                _ => false,
            },
        };
        if !prev_ok {
            continue;
        }
        let close = matching(&toks, src, i + 1, "(", ")")
            .ok_or(MethodError::BraceImbalance { line: toks[i + 1].line })?;
        let mut k = close + 1;
        if k < n && text(k) == "throws" {
            k += 1;
            while k < n && !matches!(text(k), "{" | ";") {
                let allowed = toks[k].kind == LexKind::Ident || matches!(text(k), "." | "," | "<" | ">" | ">>");
                if !allowed {
                    break;
                }
                k += 1;
            }
        }
        if k >= n || text(k) != "{" {
            continue;
        }
        let end = matching(&toks, src, k, "{", "}").ok_or(MethodError::BraceImbalance { line: toks[k].line })?;

        let mut j = i;
        let mut depth = 0usize;
        while j > 0 {
            let t = text(j - 1);
            if depth == 0 && matches!(t, ";" | "{" | "}") {
                break;
            }
            if t == ")" {
                depth += 1;
            } else if t == "(" {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            j -= 1;
        }

        out.push(
            Partial {
                name: text(i).to_string(),
                signature_line: toks[i].line,
                start_line: toks[j].line,
                end_line: toks[end].end_line,
                param_count: count_params(&toks, src, i + 1, close),
            }
            .into(),
        );
    }
    Ok(out)
}

/// Whether the `)` at `p` ends an annotation's argument list, as in
/// `@Named("x") Foo(...)`.
fn closes_annotation(toks: &[&Lexeme], src: &str, p: usize) -> bool {
    let mut depth = 0usize;
    let mut k = p + 1;
    while k > 0 {
        k -= 1;
        match toks[k].text(src) {
            ")" => depth += 1,
            "(" => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    if depth != 0 || k == 0 {
        return false;
    }
    // walk a dotted annotation name back to its `@`
    let mut q = k - 1;
    loop {
        if toks[q].kind != LexKind::Ident {
            return false;
        }
        if q == 0 {
            return false;
        }
        match toks[q - 1].text(src) {
            "@" => return true,
            "." if q >= 2 => q -= 2,
            _ => return false,
        }
    }
}

struct LogicalLine {
    /// Positions into the significant-lexeme list.
    first: usize,
    newline: usize,
    /// Whether an INDENT or DEDENT separates this line from the previous one.
    after_block_change: bool,
}

fn python_methods(scanned: &Scan<'_>) -> Result<Vec<MethodSpan>, MethodError> {
    let src = scanned.src;
    let all = &scanned.lexemes;
    let sig: Vec<usize> = (0..all.len()).filter(|&i| !all[i].kind.is_comment()).collect();
    let kind = |p: usize| all[sig[p]].kind;
    let text = |p: usize| all[sig[p]].text(src);

    let mut logical = Vec::new();
    let mut start: Option<usize> = None;
    let mut block_change = false;
    for p in 0..sig.len() {
        match kind(p) {
            LexKind::Indent | LexKind::Dedent => block_change = true,
            LexKind::Newline => {
                if let Some(first) = start.take() {
                    logical.push(LogicalLine { first, newline: p, after_block_change: block_change });
                }
                block_change = false;
            }
            _ => {
                if start.is_none() {
                    start = Some(p);
                }
            }
        }
    }

    let sig_toks: Vec<&Lexeme> = sig.iter().map(|&i| &all[i]).collect();
    let mut out = Vec::new();
    for (li, ll) in logical.iter().enumerate() {
        let mut q = ll.first;
        if text(q) == "async" && q + 1 < ll.newline && text(q + 1) == "def" {
            q += 1;
        }
        if text(q) != "def" || q + 1 >= ll.newline || kind(q + 1) != LexKind::Ident {
            continue;
        }
        let name = text(q + 1).to_string();
        let def_col = all[sig[ll.first]].col;

        let open = q + 2;
        let param_count = if open < ll.newline && text(open) == "(" {
            match matching(&sig_toks, src, open, "(", ")") {
                Some(close) if close < ll.newline => count_params(&sig_toks, src, open, close),
                _ => 0,
            }
        } else {
            0
        };

        let mut depth = 0isize;
        let mut colon = None;
        for r in q + 2..ll.newline {
            match text(r) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ":" if depth == 0 => {
                    colon = Some(r);
                    break;
                }
                _ => {}
            }
        }
        let colon = match colon {
            Some(c) => c,
            None => continue,
        };

        let end_line = if colon + 1 < ll.newline {
            max_line(all, sig[colon + 1], sig[ll.newline], None)
        } else {
            let indent = ll.newline + 1;
            if indent >= sig.len() || kind(indent) != LexKind::Indent {
                return Err(MethodError::IndentationAnomaly { line: all[sig[ll.newline]].line + 1 });
            }
            let mut level = 0usize;
            let mut dedent = sig.len();
            for p in indent..sig.len() {
                match kind(p) {
                    LexKind::Indent => level += 1,
                    LexKind::Dedent => {
                        level -= 1;
                        if level == 0 {
                            dedent = p;
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let stop = if dedent < sig.len() { sig[dedent] } else { all.len() };
            max_line(all, sig[indent], stop, Some(def_col))
        };

        let mut start_line = all[sig[ll.first]].line;
        let mut d = li;
        while d > 0 && !logical[d].after_block_change {
            let prev = &logical[d - 1];
            if text(prev.first) != "@" || all[sig[prev.first]].col != def_col {
                break;
            }
            start_line = all[sig[prev.first]].line;
            d -= 1;
        }

        out.push(
            Partial {
                name,
                signature_line: all[sig[q]].line,
                start_line,
                end_line,
                param_count,
            }
            .into(),
        );
    }
    Ok(out)
}

/// Last line touched by lexemes in `all[from..to]`. Comments only count when
/// indented deeper than `min_comment_col`.
fn max_line(all: &[Lexeme], from: usize, to: usize, min_comment_col: Option<usize>) -> usize {
    all[from..to]
        .iter()
        .filter(|l| !l.kind.is_structural())
        .filter(|l| match (l.kind.is_comment(), min_comment_col) {
            (true, Some(col)) => l.col > col,
            _ => true,
        })
        .map(|l| l.end_line)
        .max()
        .unwrap_or(all[from].line)
}

/// The method a debt comment at `line` belongs to: the innermost method whose
/// span contains the line, or else the method directly below the comment
/// block, provided only blank or comment lines separate them and the comment
/// does not trail code.
pub fn containing_method<'m>(
    line: usize,
    methods: &'m [MethodSpan],
    comments: &[CommentSpan],
    source: &str,
    lang: Language,
) -> Option<&'m MethodSpan> {
    let inner = methods
        .iter()
        .filter(|m| m.contains(line))
        .min_by_key(|m| (m.end_line - m.start_line, std::cmp::Reverse(m.start_line)));
    if inner.is_some() {
        return inner;
    }

    let idx = comments.iter().position(|c| c.start_line <= line && line <= c.end_line)?;
    let scanned = scan(source, lang);
    let code: Vec<&Lexeme> =
        scanned.lexemes.iter().filter(|l| !l.kind.is_comment() && !l.kind.is_structural()).collect();
    let has_code_on = |l: usize| code.iter().any(|t| t.line <= l && l <= t.end_line);
    let trails_code = |c: &CommentSpan| {
        let start = scanned
            .lexemes
            .iter()
            .find(|l| l.kind.is_comment() && l.line == c.start_line && l.text(source) == c.text)
            .map(|l| l.start);
        match start {
            Some(s) => code.iter().any(|t| t.line <= c.start_line && c.start_line <= t.end_line && t.start < s),
            None => true,
        }
    };

    if trails_code(&comments[idx]) {
        return None;
    }
    let mut block_end = comments[idx].end_line;
    for c in &comments[idx + 1..] {
        if c.start_line > block_end + 1 || trails_code(c) {
            break;
        }
        block_end = block_end.max(c.end_line);
    }

    let below = methods.iter().filter(|m| m.start_line > block_end).min_by_key(|m| m.start_line)?;
    if (block_end + 1..below.start_line).any(has_code_on) {
        return None;
    }
    Some(below)
}
