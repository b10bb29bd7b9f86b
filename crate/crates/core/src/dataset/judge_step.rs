use log::warn;

use super::{steps, FilterStats, RepaymentSample};
use crate::judge::{parse_verdict, render_judge_prompt, ChatClient, ChatRequest, ClientError, JudgeVerdict, Verdict};

#[derive(Debug)]
pub struct JudgeOutcome {
    /// Samples judged `Yes`.
    pub kept: Vec<RepaymentSample>,
    /// Samples the endpoint could not judge; neither kept nor dropped.
    pub pending: Vec<RepaymentSample>,
    /// One entry per input sample; `None` for pending ones.
    pub verdicts: Vec<Option<JudgeVerdict>>,
    pub errors: Vec<ClientError>,
}

/// Asks `model` whether each method update repays its comment, keeping only
/// `Yes`. Appends the survivor count to `stats`.
pub fn apply_judge_filter(
    samples: &[RepaymentSample],
    client: &ChatClient,
    model: &str,
    stats: &mut FilterStats,
) -> JudgeOutcome {
    let requests: Vec<ChatRequest> = samples
        .iter()
        .map(|s| {
            ChatRequest::new(model, render_judge_prompt(&s.method_before, &s.method_after, &s.record.comment_text))
        })
        .collect();
    let mut out = JudgeOutcome { kept: Vec::new(), pending: Vec::new(), verdicts: Vec::new(), errors: Vec::new() };
    for (sample, result) in samples.iter().zip(client.complete_many(&requests)) {
        match result {
            Ok(text) => {
                let verdict = parse_verdict(&text);
                if verdict.label == Verdict::Yes {
                    out.kept.push(sample.clone());
                }
                out.verdicts.push(Some(verdict));
            }
            Err(e) => {
                warn!("judge unavailable for {}: {e}", sample.key());
                out.pending.push(sample.clone());
                out.verdicts.push(None);
                out.errors.push(e);
            }
        }
    }
    stats.push(steps::LLM_JUDGE, out.kept.len());
    out
}
