use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CODE_SLOT: &str = "{code}";
pub const COMMENT_SLOT: &str = "{comment}";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateName {
    MastropaoloT2,
    NoExplain,
    Cot1,
    Cot2,
    Custom(String),
}

impl TemplateName {
    pub const BUILTIN: [TemplateName; 4] =
        [TemplateName::MastropaoloT2, TemplateName::NoExplain, TemplateName::Cot1, TemplateName::Cot2];

    /// Command-line identifier.
    pub fn id(&self) -> &str {
        match self {
            TemplateName::MastropaoloT2 => "mastropaolo-t2",
            TemplateName::NoExplain => "noexplain",
            TemplateName::Cot1 => "cot1",
            TemplateName::Cot2 => "cot2",
            TemplateName::Custom(name) => name,
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateName::MastropaoloT2 => "Mastropaolo-T2",
            TemplateName::NoExplain => "NoExplain",
            TemplateName::Cot1 => "CoT1",
            TemplateName::Cot2 => "CoT2",
            TemplateName::Custom(name) => name,
        })
    }
}

impl FromStr for TemplateName {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        TemplateName::BUILTIN
            .into_iter()
            .find(|t| t.id() == lower || t.to_string().to_ascii_lowercase() == lower)
            .ok_or_else(|| TemplateError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template `{0}` (expected mastropaolo-t2, noexplain, cot1 or cot2)")]
    Unknown(String),
    #[error("template body must contain `{slot}` exactly once (found {found})")]
    Placeholder { slot: &'static str, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: TemplateName,
    body: String,
}

const MASTROPAOLO_T2: &str = "Perform removal of this SATD: {comment} from this code: {code}";

const NO_EXPLAIN: &[&str] = &[
    "How to update the following code to resolve the SATD? No need to explain. Just provide the updated code.",
    "### Code:",
    "{code}",
    "### SATD comment:",
    "{comment}",
    "### Updated code after SATD repayment:",
];

const COT1: &[&str] = &[
    "How to update the following code to resolve the SATD?",
    "### Code:",
    "{code}",
    "### SATD comment:",
    "{comment}",
    "### Consider the following questions in your answer:",
    "Shortly explain how to resolve the SATD.",
    "Provide the updated code.",
];

const COT2: &[&str] = &[
    "How to update the following code to resolve the Self-Admitted Technical Debt (SATD)?",
    "### Code:",
    "{code}",
    "### SATD comment:",
    "{comment}",
    "### Consider the following questions in your answer:",
    "1. Briefly explain how to resolve the SATD.",
    "2. Provide the updated code.",
];

impl PromptTemplate {
    pub fn builtin(name: TemplateName) -> Result<Self, TemplateError> {
        let body = match &name {
            TemplateName::MastropaoloT2 => MASTROPAOLO_T2.to_string(),
            TemplateName::NoExplain => NO_EXPLAIN.join("\n"),
            TemplateName::Cot1 => COT1.join("\n"),
            TemplateName::Cot2 => COT2.join("\n"),
            TemplateName::Custom(n) => return Err(TemplateError::Unknown(n.clone())),
        };
        Ok(PromptTemplate { name, body })
    }

    pub fn custom(name: &str, body: &str) -> Result<Self, TemplateError> {
        for slot in [CODE_SLOT, COMMENT_SLOT] {
            let found = body.matches(slot).count();
            if found != 1 {
                return Err(TemplateError::Placeholder { slot, found });
            }
        }
        Ok(PromptTemplate { name: TemplateName::Custom(name.to_string()), body: body.to_string() })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Substitutes both placeholders in one pass, so braces inside the code
    /// or comment are never themselves expanded.
    pub fn render(&self, code: &str, comment: &str) -> String {
        let mut out = String::with_capacity(self.body.len() + code.len() + comment.len());
        let mut rest = self.body.as_str();
        loop {
            let next = [(CODE_SLOT, code), (COMMENT_SLOT, comment)]
                .into_iter()
                .filter_map(|(slot, value)| rest.find(slot).map(|at| (at, slot, value)))
                .min_by_key(|(at, _, _)| *at);
            match next {
                Some((at, slot, value)) => {
                    out.push_str(&rest[..at]);
                    out.push_str(value);
                    rest = &rest[at + slot.len()..];
                }
                None => {
                    out.push_str(rest);
                    return out;
                }
            }
        }
    }
}

/// Fills `tpl` with the method before repayment and its debt comment.
pub fn render_repayment_prompt(tpl: &PromptTemplate, code: &str, comment: &str) -> String {
    tpl.render(code, comment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mastropaolo_single_line() {
        let t = PromptTemplate::builtin(TemplateName::MastropaoloT2).unwrap();
        assert_eq!(t.render("f()", "// TODO x"), "Perform removal of this SATD: // TODO x from this code: f()");
    }

    #[test]
    fn noexplain_and_cot_shapes() {
        let ne = PromptTemplate::builtin(TemplateName::NoExplain).unwrap().render("C", "K");
        assert!(ne.contains("No need to explain. Just provide the updated code."));
        assert!(ne.ends_with("### Code:\nC\n### SATD comment:\nK\n### Updated code after SATD repayment:"));
        let c1 = PromptTemplate::builtin(TemplateName::Cot1).unwrap().render("C", "K");
        let c2 = PromptTemplate::builtin(TemplateName::Cot2).unwrap().render("C", "K");
        assert!(c2.contains("\n1. Briefly explain how to resolve the SATD.\n2. Provide the updated code."));
        assert!(!c1.contains("1.") && c1.ends_with("Shortly explain how to resolve the SATD.\nProvide the updated code."));
    }

    #[test]
    fn braces_in_values_are_literal() {
        let t = PromptTemplate::builtin(TemplateName::MastropaoloT2).unwrap();
        assert_eq!(t.render("{comment}", "{code}"), "Perform removal of this SATD: {code} from this code: {comment}");
    }

    #[test]
    fn custom_validation() {
        assert!(PromptTemplate::custom("mine", "fix {comment} in {code}").is_ok());
        assert_eq!(
            PromptTemplate::custom("bad", "{code} {code} {comment}"),
            Err(TemplateError::Placeholder { slot: CODE_SLOT, found: 2 })
        );
        assert!(PromptTemplate::custom("bad", "{code}").is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("cot2".parse::<TemplateName>(), Ok(TemplateName::Cot2));
        assert_eq!("NoExplain".parse::<TemplateName>(), Ok(TemplateName::NoExplain));
        assert_eq!("Mastropaolo-T2".parse::<TemplateName>(), Ok(TemplateName::MastropaoloT2));
        assert!("cot3".parse::<TemplateName>().is_err());
        for name in TemplateName::BUILTIN {
            let body = PromptTemplate::builtin(name.clone()).unwrap();
            assert_eq!(body.body().matches(CODE_SLOT).count(), 1);
            assert_eq!(body.body().matches(COMMENT_SLOT).count(), 1);
        }
    }
}
