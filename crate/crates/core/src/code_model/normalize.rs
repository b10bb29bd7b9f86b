use super::lexer::{scan, LexKind, Lexeme, Scan};
use super::Language;

fn java_import_ranges(scanned: &Scan<'_>) -> Vec<(usize, usize)> {
    let src = scanned.src;
    let toks: Vec<&Lexeme> = scanned.lexemes.iter().filter(|l| !l.kind.is_comment()).collect();
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if !t.is(src, "import") {
            continue;
        }
        if i > 0 && !matches!(toks[i - 1].text(src), ";" | "{" | "}") {
            continue;
        }
        let end = toks[i..]
            .iter()
            .find(|u| u.is(src, ";"))
            .or_else(|| toks[i..].iter().take_while(|u| u.line == t.line).last())
            .map_or(t.end, |u| u.end);
        out.push((t.start, end));
    }
    out
}

fn python_import_ranges(scanned: &Scan<'_>) -> Vec<(usize, usize)> {
    let src = scanned.src;
    let mut out = Vec::new();
    let mut line: Vec<&Lexeme> = Vec::new();
    for l in &scanned.lexemes {
        match l.kind {
            LexKind::Newline => {
                if let (Some(first), Some(last)) = (line.first(), line.last()) {
                    let is_import = first.is(src, "import")
                        || (first.is(src, "from") && line.iter().any(|t| t.kind == LexKind::Ident && t.is(src, "import")));
                    if is_import {
                        out.push((first.start, last.end));
                    }
                }
                line.clear();
            }
            LexKind::Indent | LexKind::Dedent | LexKind::Comment(_) => {}
            _ => line.push(l),
        }
    }
    out
}

/// Removes import statements, comments and docstrings. Lines emptied by the
/// removal are dropped and lines that lost a trailing comment are trimmed;
/// every other line is left untouched.
pub fn strip_icd(method_text: &str, lang: Language) -> String {
    let scanned = scan(method_text, lang);
    let mut ranges: Vec<(usize, usize)> =
        scanned.lexemes.iter().filter(|l| l.kind.is_comment()).map(|l| (l.start, l.end)).collect();
    ranges.extend(match lang {
        Language::Java => java_import_ranges(&scanned),
        Language::Python => python_import_ranges(&scanned),
    });
    if ranges.is_empty() {
        return method_text.to_string();
    }
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }

    let mut lines: Vec<(String, bool)> = vec![(String::new(), false)];
    let push_text = |lines: &mut Vec<(String, bool)>, text: &str| {
        let mut parts = text.split('\n');
        if let Some(first) = parts.next() {
            lines.last_mut().expect("nonempty").0.push_str(first);
        }
        for part in parts {
            lines.push((part.to_string(), false));
        }
    };
    let mut pos = 0;
    for (s, e) in merged {
        push_text(&mut lines, &method_text[pos..s]);
        let current = lines.last_mut().expect("nonempty");
        current.1 = true;
        let before = current.0.chars().last();
        let after = method_text[e..].chars().next();
        if matches!((before, after), (Some(b), Some(a)) if !b.is_whitespace() && !a.is_whitespace()) {
            current.0.push(' ');
        }
        pos = e;
    }
    push_text(&mut lines, &method_text[pos..]);

    let ends_with_newline = method_text.ends_with('\n');
    if ends_with_newline {
        lines.pop();
    }
    let kept: Vec<String> = lines
        .into_iter()
        .filter_map(|(text, touched)| match touched {
            false => Some(text),
            true if text.trim().is_empty() => None,
            true => Some(text.trim_end().to_string()),
        })
        .collect();
    let mut out = kept.join("\n");
    if ends_with_newline && !kept.is_empty() {
        out.push('\n');
    }
    out
}

/// Canonical form for exact matching. Java: ICD stripped and all whitespace
/// removed. Python: ICD stripped and re-rendered from the token stream, one
/// logical line per line, tokens single-spaced, four spaces per block level.
pub fn canonicalize(method_text: &str, lang: Language) -> String {
    let stripped = strip_icd(method_text, lang);
    match lang {
        Language::Java => stripped.chars().filter(|c| !c.is_whitespace()).collect(),
        Language::Python => render_python(&stripped),
    }
}

fn render_python(src: &str) -> String {
    let scanned = scan(src, Language::Python);
    let mut lines = Vec::new();
    let mut depth = 0usize;
    let mut line_depth = 0usize;
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>, line_depth: usize| {
        if !current.is_empty() {
            lines.push(format!("{}{}", "    ".repeat(line_depth), current.join(" ")));
            current.clear();
        }
    };
    for l in &scanned.lexemes {
        match l.kind {
            LexKind::Indent => depth += 1,
            LexKind::Dedent => depth = depth.saturating_sub(1),
            LexKind::Newline => flush(&mut current, line_depth),
            LexKind::Comment(_) => {}
            _ => {
                if current.is_empty() {
                    line_depth = depth;
                }
                current.push(l.text(src));
            }
        }
    }
    flush(&mut current, line_depth);
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::extract_comments;

    #[test]
    fn inline_comment_removed() {
        let src = "void f() {\n    int x = 1; // set x\n    return;\n}";
        assert_eq!(strip_icd(src, Language::Java), "void f() {\n    int x = 1;\n    return;\n}");
    }

    #[test]
    fn no_icd_is_fixed_point() {
        let src = "def f(a):\n\n    return a + 1\n";
        assert_eq!(strip_icd(src, Language::Python), src);
    }

    #[test]
    fn python_docstring_removed() {
        let src = "def f(a):\n    \"\"\"Add one.\n\n    Longer text.\n    \"\"\"\n    return a + 1";
        let out = strip_icd(src, Language::Python);
        assert_eq!(out, "def f(a):\n    return a + 1");
        assert!(extract_comments(&out, Language::Python).is_empty());
    }

    #[test]
    fn imports_removed() {
        let py = "import os\nfrom a.b import (c,\n    d)\ndef f():\n    import sys\n    return os.sep\n";
        assert_eq!(strip_icd(py, Language::Python), "def f():\n    return os.sep\n");
        let java = "import java.util.List;\nimport static a.B.*;\nint f() { return 1; }";
        assert_eq!(strip_icd(java, Language::Java), "int f() { return 1; }");
    }

    #[test]
    fn comment_between_tokens_keeps_separation() {
        assert_eq!(strip_icd("int/**/a;", Language::Java), "int a;");
    }

    #[test]
    fn javadoc_and_block_comments() {
        let src = "/**\n * Docs.\n */\npublic int f() {\n  /* TODO: x */ return 1;\n}";
        assert_eq!(strip_icd(src, Language::Java), "public int f() {\n   return 1;\n}");
    }

    #[test]
    fn java_canonical_ignores_indentation() {
        let a = "int f() {\n    return 1;\n}";
        let b = "int f() {\n\treturn   1;}";
        assert_eq!(canonicalize(a, Language::Java), canonicalize(b, Language::Java));
        assert_eq!(canonicalize(a, Language::Java), "intf(){return1;}");
    }

    #[test]
    fn python_canonical_spacing() {
        assert_eq!(canonicalize("x=1", Language::Python), canonicalize("x = 1", Language::Python));
        let a = "def f(a,\n      b):\n  return a+b  # sum\n";
        let b = "def f(a, b):\n    return a + b\n";
        assert_eq!(canonicalize(a, Language::Python), canonicalize(b, Language::Python));
        assert_eq!(canonicalize(b, Language::Python), "def f ( a , b ) :\n    return a + b");
    }

    #[test]
    fn canonicalize_idempotent_examples() {
        for (src, lang) in [
            ("def f():\n    \"\"\"d\"\"\"\n    if x:\n        y = 'a  b'\n    return y\n", Language::Python),
            ("class A { /* c */ int f() { return \"a b\".length(); } }", Language::Java),
        ] {
            let once = canonicalize(src, lang);
            assert_eq!(canonicalize(&once, lang), once);
        }
    }
}
