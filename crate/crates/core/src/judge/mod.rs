//! Chat-completion client, used both as the relevance judge of the dataset
//! pipeline and as the generator of repayments in experiments.

mod client;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use client::{
    cache_key, ChatClient, ClientError, DiskCache, HttpTransport, RetryPolicy, Transport, TransportError,
    API_KEY_ENV,
};

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    /// Greedy decoding with the default output budget.
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            prompt: prompt.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Unclear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub label: Verdict,
    pub raw_response: String,
}

const JUDGE_INTRO: &str = "Two versions of a method are provided below. The first version contains a Self-Admitted \
Technical Debt (SATD) comment, while the SATD comment no longer exists in the second version. Analyze if the code \
updates in the second version are related to resolving that SATD, considering the surrounding code context in \
addition to the SATD comment itself.";

/// The relevance-judge prompt for one candidate repayment.
pub fn render_judge_prompt(method_before: &str, method_after: &str, satd_comment: &str) -> String {
    [
        JUDGE_INTRO.to_string(),
        format!("### Version 1:\n{method_before}"),
        format!("### Version 2:\n{method_after}"),
        format!("### SATD comment:\n{satd_comment}"),
        "### Consider the following questions in your analysis:\n\
         - Shortly explain what specific changes were made in Version 2 compared to Version 1?\n\
         - Are these changes mainly proposed to address the issue mentioned in the SATD comment? \
         Please answer with Yes, No, or Unclear."
            .to_string(),
    ]
    .join("\n\n")
}

static OPTION_ECHO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\byes\s*[,/]\s*no\s*(?:[,/]\s*)?(?:or\s+)?unclear\b|\byes\s*(?:/|\bor\b)\s*no\b").expect("valid regex")
});

/// Last standalone Yes/No/Unclear among the final ten lines outside code
/// fences, ignoring echoes of the option list itself; Unclear if none.
pub fn parse_verdict(response: &str) -> JudgeVerdict {
    let mut in_fence = false;
    let mut outside: Vec<Option<&str>> = Vec::new();
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            outside.push(None);
        } else {
            outside.push((!in_fence).then_some(line));
        }
    }
    let tail = &outside[outside.len().saturating_sub(10)..];
    let mut label = Verdict::Unclear;
    for line in tail.iter().flatten() {
        let cleaned = OPTION_ECHO.replace_all(line, " ");
        for word in cleaned.split(|c: char| !c.is_ascii_alphanumeric()) {
            match word.to_ascii_lowercase().as_str() {
                "yes" => label = Verdict::Yes,
                "no" => label = Verdict::No,
                "unclear" => label = Verdict::Unclear,
                _ => {}
            }
        }
    }
    JudgeVerdict { label, raw_response: response.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_in_order() {
        let p = render_judge_prompt("int f() {}", "int f() { return 1; }", "// TODO fix");
        let v1 = p.find("### Version 1:").unwrap();
        let v2 = p.find("### Version 2:").unwrap();
        let c = p.find("### SATD comment:").unwrap();
        let q = p.find("### Consider the following questions in your analysis:").unwrap();
        assert!(v1 < v2 && v2 < c && c < q);
        assert!(p.starts_with("Two versions of a method are provided below."));
        assert!(p.ends_with("Please answer with Yes, No, or Unclear."));
    }

    #[test]
    fn empty_comment_slot() {
        let p = render_judge_prompt("a", "b", "");
        assert!(p.contains("### SATD comment:\n\n\n### Consider"));
    }

    #[test]
    fn verdicts() {
        let v = |s: &str| parse_verdict(s).label;
        assert_eq!(v("The changes add error messages. Yes."), Verdict::Yes);
        assert_eq!(v("...Unclear"), Verdict::Unclear);
        assert_eq!(v(""), Verdict::Unclear);
        assert_eq!(v("Answer: **No**"), Verdict::No);
        assert_eq!(v("Yes, the method changed.\nBut the SATD is not addressed, so: No"), Verdict::No);
        assert_eq!(v("Nothing decisive here. Noted."), Verdict::Unclear);
    }

    #[test]
    fn option_echo_ignored() {
        let v = |s: &str| parse_verdict(s).label;
        assert_eq!(v("Yes\nYou asked me to answer with Yes, No, or Unclear."), Verdict::Yes);
        assert_eq!(v("No. (yes/no/unclear)"), Verdict::No);
        assert_eq!(v("Yes. A yes or no answer is required."), Verdict::Yes);
    }

    #[test]
    fn fences_and_window() {
        let v = |s: &str| parse_verdict(s).label;
        assert_eq!(v("Yes\n```\nreturn no;\n```"), Verdict::Yes);
        let early = format!("No\n{}", "filler line\n".repeat(10));
        assert_eq!(v(&early), Verdict::Unclear);
        // a fence opened before the window still hides its content
        let long_fence = format!("Yes\n```\n{}no\n```", "x\n".repeat(12));
        assert_eq!(v(&long_fence), Verdict::Unclear);
    }

    #[test]
    fn request_defaults() {
        let r = ChatRequest::new("m", "p");
        assert_eq!(r.temperature, 0.0);
        assert_eq!(r.max_output_tokens, 2048);
    }
}
