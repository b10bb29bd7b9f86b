use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use satd_forge_core::dataset::{
    apply_heuristic_filters, apply_judge_filter, read_dataset, read_jsonl, read_stats, split_by_repository, steps,
    write_dataset, write_jsonl, write_stats, FilterConfig, FilterStats, RepoSet, SplitRatios,
};
use satd_forge_core::harness::{
    aggregate, correlation_matrix, coverage_counts, evaluate_generations, generate, item_correlation_matrix, models,
    oracle_em, shared_ngrams_for, CorrelationMatrix, ExperimentRun, Generation, PromptTemplate,
};
use satd_forge_core::history::GitRepo;
use satd_forge_core::history::{repo_names, track_repository_with, TrackerConfig};
use satd_forge_core::judge::{ChatClient, DiskCache, HttpTransport, RetryPolicy, Verdict};
use satd_forge_core::metrics::BleuConfig;
use satd_forge_core::{AggregateRow, Language, RepaymentSample, RunItem, SatdRecord};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// One line of a repository manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoEntry {
    pub path: PathBuf,
    pub user: String,
    pub project: String,
}

/// Reads a manifest. Each non-blank line not starting with `#` holds a clone
/// path (relative to the manifest) and, optionally, `user/project`.
pub fn read_manifest(path: &Path) -> Result<Vec<RepoEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let repo = base.join(fields.next().unwrap_or_default());
        let (user, project) = match fields.next() {
            Some(name) => match name.split_once('/') {
                Some((u, p)) if !u.is_empty() && !p.is_empty() && !p.contains('/') => (u.to_string(), p.to_string()),
                _ => {
                    return Err(CliError::Config(format!(
                        "{}:{}: expected `user/project`, got `{name}`",
                        path.display(),
                        n + 1
                    )))
                }
            },
            None => repo_names(&repo),
        };
        if fields.next().is_some() {
            return Err(CliError::Config(format!("{}:{}: too many fields", path.display(), n + 1)));
        }
        out.push(RepoEntry { path: repo, user, project });
    }
    Ok(out)
}

/// Writes `text` to `path` through a sibling temporary file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn client(rc: &RunConfig, endpoint: &str) -> ChatClient {
    let retry = RetryPolicy { limit: rc.retry_limit, ..RetryPolicy::default() };
    let mut client = ChatClient::new(HttpTransport::from_env(endpoint, rc.timeout))
        .with_retry(retry)
        .with_max_concurrency(rc.concurrency);
    if let Some(dir) = &rc.cache {
        client = client.with_cache(DiskCache::new(dir));
    }
    client
}

pub fn mine(rc: &RunConfig) -> Result<()> {
    let manifest = RunConfig::input(&rc.repo_manifest, "repos")?;
    let lang = *RunConfig::need(&rc.language, "lang")?;
    let out = RunConfig::need(&rc.out, "out")?;
    let entries = read_manifest(manifest)?;
    let results: Vec<_> = entries
        .par_iter()
        .map(|e| {
            let cfg = TrackerConfig { user: Some(e.user.clone()), project: Some(e.project.clone()), ..TrackerConfig::default() };
            track_repository_with(&e.path, lang, &cfg)
        })
        .collect();
    let mut records: Vec<SatdRecord> = Vec::new();
    for (entry, result) in entries.iter().zip(results) {
        let found = result.map_err(|e| CliError::Data(e.to_string()))?;
        info!("{}/{}: {} debt comments", entry.user, entry.project, found.len());
        records.extend(found);
    }
    write_jsonl(&records, out)?;
    info!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

pub fn filter(rc: &RunConfig) -> Result<()> {
    let records_path = RunConfig::input(&rc.records, "records")?;
    let manifest = RunConfig::input(&rc.repo_manifest, "repos")?;
    let out = RunConfig::need(&rc.out, "out")?;
    let mut records: Vec<SatdRecord> = read_jsonl(records_path)?;
    if let Some(lang) = rc.language {
        records.retain(|r| r.language == lang);
    }
    let mut repos = RepoSet::new();
    for entry in read_manifest(manifest)? {
        let repo = GitRepo::open(&entry.path).map_err(|e| CliError::Data(format!("{}: {e}", entry.path.display())))?;
        repos.insert(&entry.user, &entry.project, repo);
    }
    let (samples, stats) = apply_heuristic_filters(&records, &repos, &FilterConfig::default());
    let stats_path = rc.stats.clone().unwrap_or_else(|| sibling(out, "stats.tsv"));
    write_dataset(&samples, out)?;
    write_stats(&stats, &stats_path)?;
    for (step, count) in &stats.rows {
        info!("{step}: {count}");
    }
    Ok(())
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    sample_key: String,
    label: Verdict,
    raw_response: &'a str,
}

pub fn judge(rc: &RunConfig) -> Result<()> {
    let dataset = RunConfig::input(&rc.dataset_path, "dataset")?;
    let endpoint = RunConfig::need(&rc.endpoint_url, "endpoint")?;
    let model = RunConfig::need(&rc.model, "model")?;
    let out = RunConfig::need(&rc.out, "out")?;
    let samples = read_dataset(dataset)?;
    let mut stats = match &rc.stats {
        Some(p) if p.exists() => read_stats(p)?,
        _ => FilterStats::default(),
    };
    // A rerun replaces the previous judge row instead of appending another.
    stats.rows.retain(|(step, _)| step != steps::LLM_JUDGE);
    let client = client(rc, endpoint);
    let outcome = apply_judge_filter(&samples, &client, model, &mut stats);
    let verdicts: Vec<VerdictLine> = samples
        .iter()
        .zip(&outcome.verdicts)
        .filter_map(|(s, v)| {
            v.as_ref().map(|v| VerdictLine { sample_key: s.key(), label: v.label, raw_response: &v.raw_response })
        })
        .collect();
    write_dataset(&outcome.kept, out)?;
    write_jsonl(&verdicts, &sibling(out, "verdicts.jsonl"))?;
    if let Some(p) = &rc.stats {
        write_stats(&stats, p)?;
    }
    info!("judge kept {} of {} samples", outcome.kept.len(), samples.len());
    let pending_path = sibling(out, "pending.jsonl");
    if outcome.pending.is_empty() {
        if pending_path.exists() {
            std::fs::remove_file(&pending_path).map_err(|e| CliError::Data(format!("{}: {e}", pending_path.display())))?;
        }
        return Ok(());
    }
    write_dataset(&outcome.pending, &pending_path)?;
    let first = outcome.errors.first().map(|e| e.to_string()).unwrap_or_default();
    Err(CliError::Endpoint(format!(
        "{} samples could not be judged (first error: {first}); they are listed in {}",
        outcome.pending.len(),
        pending_path.display()
    )))
}

/// Offline generators for plumbing checks.
fn stub_generation(kind: &str, sample: &RepaymentSample) -> Result<String> {
    match kind {
        "truth" => Ok(format!("```\n{}\n```", sample.method_after)),
        "input" => Ok(format!("```\n{}\n```", sample.method_before)),
        other => Err(CliError::Config(format!("unknown stub generator `stub:{other}` (expected truth or input)"))),
    }
}

pub fn generate_cmd(rc: &RunConfig) -> Result<()> {
    let dataset = RunConfig::input(&rc.dataset_path, "dataset")?;
    let endpoint = RunConfig::need(&rc.endpoint_url, "endpoint")?;
    let template = PromptTemplate::builtin(RunConfig::need(&rc.template, "template")?.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let out = RunConfig::need(&rc.out, "out")?;
    let samples = read_dataset(dataset)?;
    let generations: Vec<Generation> = if let Some(kind) = endpoint.strip_prefix("stub:") {
        let model = rc.model.clone().unwrap_or_else(|| endpoint.clone());
        samples
            .iter()
            .map(|s| {
                Ok(Generation {
                    sample_key: s.key(),
                    model_id: model.clone(),
                    template_name: template.name.to_string(),
                    generated_raw: stub_generation(kind, s)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        let model = RunConfig::need(&rc.model, "model")?;
        let results = generate(&samples, &template, &client(rc, endpoint), model);
        let failed = results.iter().filter(|r| r.is_err()).count();
        let first = results.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string());
        let ok: Vec<Generation> = results.into_iter().filter_map(|r| r.ok()).collect();
        if failed > 0 {
            write_jsonl(&ok, out)?;
            return Err(CliError::Endpoint(format!(
                "{failed} of {} requests failed (first error: {}); partial results in {}",
                samples.len(),
                first.unwrap_or_default(),
                out.display()
            )));
        }
        ok
    };
    write_jsonl(&generations, out)?;
    info!("wrote {} generations to {}", generations.len(), out.display());
    Ok(())
}

pub fn evaluate(rc: &RunConfig) -> Result<()> {
    let dataset = RunConfig::input(&rc.dataset_path, "dataset")?;
    let gens_path = RunConfig::input(&rc.generations, "generations")?;
    let out = RunConfig::need(&rc.out, "out")?;
    let samples = read_dataset(dataset)?;
    let generations: Vec<Generation> = read_jsonl(gens_path)?;
    let languages: BTreeSet<Language> = samples.iter().map(|s| s.language()).collect();
    let cfg = BleuConfig::<f64>::default();
    let shared: HashMap<Language, _> = languages
        .into_iter()
        .map(|lang| (lang, shared_ngrams_for(&samples, lang, rc.k, cfg.max_order())))
        .collect();
    let items = evaluate_generations(&samples, &generations, &shared, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    if items.len() < generations.len() {
        warn!("{} generations were not scored", generations.len() - items.len());
    }
    write_jsonl(&items, out)?;
    info!("wrote {} scored items to {}", items.len(), out.display());
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn aggregate_table(rows: &[AggregateRow]) -> String {
    let mut s = String::from(
        "Model\tTemplate\tSubset\tN\tExactMatch\tBLEU-whole\tCrystalBLEU-whole\tBLEU-diff\tCrystalBLEU-diff\tLineP\tLineR\tLineF1\tAvgDel\tAvgIns\n",
    );
    for r in rows {
        let fields = [
            r.model.clone(),
            r.template.clone(),
            r.subset.to_string(),
            r.n.to_string(),
            format!("{:.2}", r.em_percent),
            num(r.bleu_whole),
            num(r.crystal_whole),
            num(r.bleu_diff),
            num(r.crystal_diff),
            num(r.line_p),
            num(r.line_r),
            num(r.line_f),
            num(r.avg_deleted),
            num(r.avg_inserted),
        ];
        s.push_str(&fields.join("\t"));
        s.push('\n');
    }
    s
}

fn matrix_table(m: &CorrelationMatrix<f64>) -> String {
    let mut s = String::new();
    for label in &m.labels {
        s.push('\t');
        s.push_str(label);
    }
    s.push('\n');
    for (label, row) in m.labels.iter().zip(&m.values) {
        s.push_str(label);
        for v in row {
            s.push('\t');
            s.push_str(&v.map(num).unwrap_or_else(|| "NA".into()));
        }
        s.push('\n');
    }
    s
}

pub fn report(rc: &RunConfig) -> Result<()> {
    if rc.runs.is_empty() {
        return Err(CliError::Config("--runs is required for this command".into()));
    }
    let out = RunConfig::need(&rc.out, "out")?;
    let mut items: Vec<RunItem> = Vec::new();
    for path in &rc.runs {
        if !path.exists() {
            return Err(CliError::Config(format!("--runs {}: no such file", path.display())));
        }
        items.extend(read_jsonl::<RunItem>(path)?);
    }
    let runs = ExperimentRun::group(items, "runs").map_err(|e| CliError::Data(e.to_string()))?;
    let rows: Vec<AggregateRow> = runs.iter().flat_map(aggregate).collect();
    write_text(&out.join("aggregate.tsv"), &aggregate_table(&rows))?;

    let overall: Vec<AggregateRow> =
        rows.iter().filter(|r| r.subset == satd_forge_core::harness::Subset::All).cloned().collect();
    write_text(&out.join("correlation.tsv"), &matrix_table(&correlation_matrix(&overall)))?;
    write_text(&out.join("item_correlation.tsv"), &matrix_table(&item_correlation_matrix(&runs)))?;

    let mut coverage = String::from("Model\tTemplates\tItems\tAddressedByAll\tAddressedByAtLeastOne\tAddressedByExactlyOne\n");
    let mut oracle = String::from("Model\tOracleEM\tBestTemplate\tBestEM\n");
    for model in models(&runs) {
        let mine: Vec<ExperimentRun<f64>> = runs.iter().filter(|r| r.model_id == model).cloned().collect();
        let c = coverage_counts(&mine).map_err(|e| CliError::Data(format!("model {model}: {e}")))?;
        let _ = writeln!(
            coverage,
            "{model}\t{}\t{}\t{}\t{}\t{}",
            mine.len(),
            c.items,
            c.addressed_by_all,
            c.addressed_by_at_least_one,
            c.addressed_by_exactly_one
        );
        let best = mine
            .iter()
            .filter_map(|r| aggregate(r).into_iter().next())
            .fold(None::<AggregateRow>, |best, row| match best {
                Some(b) if b.em_percent >= row.em_percent => Some(b),
                _ => Some(row),
            });
        let oracle_value = oracle_em(&mine).map_err(|e| CliError::Data(format!("model {model}: {e}")))?;
        let (tpl, em) = best.map(|b| (b.template, b.em_percent)).unwrap_or_default();
        let _ = writeln!(oracle, "{model}\t{oracle_value:.2}\t{tpl}\t{em:.2}");
    }
    write_text(&out.join("coverage.tsv"), &coverage)?;
    write_text(&out.join("oracle.tsv"), &oracle)?;
    info!("wrote {} aggregate rows to {}", rows.len(), out.display());
    Ok(())
}

pub fn split(rc: &RunConfig) -> Result<()> {
    let dataset = RunConfig::input(&rc.dataset_path, "dataset")?;
    let out = RunConfig::need(&rc.out, "out")?;
    let samples = read_dataset(dataset)?;
    let parts = split_by_repository(&samples, SplitRatios::default(), rc.seed).map_err(|e| CliError::Data(e.to_string()))?;
    write_dataset(&parts.train, &out.join("train.jsonl"))?;
    write_dataset(&parts.validation, &out.join("validation.jsonl"))?;
    write_dataset(&parts.test, &out.join("test.jsonl"))?;
    info!(
        "split {} samples into {} / {} / {} with seed {}",
        samples.len(),
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        parts.seed
    );
    Ok(())
}
