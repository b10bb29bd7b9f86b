use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use serde::Deserialize;
use satd_forge_core::harness::TemplateName;
use satd_forge_core::Language;

use crate::error::{CliError, Result};

pub const DEFAULT_JOBS: usize = 4;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_K: usize = 500;
pub const DEFAULT_RETRY_LIMIT: u32 = 5;
pub const DEFAULT_TIMEOUT_SECS: u64 = 300;

/// Options shared by every command. All are optional here; each command
/// checks for the ones it needs after layering.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML file with defaults for any of these options
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "java|python")]
    pub lang: Option<String>,
    /// Repository manifest: one clone path per line, optionally followed by `user/project`
    #[arg(long, global = true, value_name = "PATH")]
    pub repos: Option<PathBuf>,
    /// Sample file (JSONL)
    #[arg(long, global = true, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Record file written by `mine`
    #[arg(long, global = true, value_name = "PATH")]
    pub records: Option<PathBuf>,
    /// Generation file written by `generate`
    #[arg(long, global = true, value_name = "PATH")]
    pub generations: Option<PathBuf>,
    /// Run files written by `evaluate`
    #[arg(long, global = true, value_name = "PATH", num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Chat-completion base URL, or `stub:truth` / `stub:input` for `generate`
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, global = true, value_name = "ID")]
    pub model: Option<String>,
    #[arg(long, global = true, value_name = "mastropaolo-t2|noexplain|cot1|cot2")]
    pub template: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Filter statistics file (TSV)
    #[arg(long, global = true, value_name = "PATH")]
    pub stats: Option<PathBuf>,
    /// Response cache directory
    #[arg(long, global = true, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    /// Number of trivially shared n-grams ignored by CrystalBLEU
    #[arg(long, global = true, value_name = "N")]
    pub k: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub retry_limit: Option<u32>,
    #[arg(long, global = true, value_name = "SECS")]
    pub timeout: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lang: Option<String>,
    repos: Option<PathBuf>,
    dataset: Option<PathBuf>,
    records: Option<PathBuf>,
    generations: Option<PathBuf>,
    #[serde(default)]
    runs: Vec<PathBuf>,
    #[serde(alias = "endpoint_url")]
    endpoint: Option<String>,
    model: Option<String>,
    template: Option<String>,
    seed: Option<u64>,
    #[serde(alias = "max_concurrency")]
    jobs: Option<usize>,
    out: Option<PathBuf>,
    stats: Option<PathBuf>,
    cache: Option<PathBuf>,
    k: Option<usize>,
    retry_limit: Option<u32>,
    timeout: Option<u64>,
}

/// Fully layered settings: flags, then config file, then `SATD_FORGE_*`
/// environment variables, then defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub language: Option<Language>,
    pub repo_manifest: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub generations: Option<PathBuf>,
    pub runs: Vec<PathBuf>,
    pub endpoint_url: Option<String>,
    pub model: Option<String>,
    pub template: Option<TemplateName>,
    pub seed: u64,
    pub concurrency: usize,
    pub out: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub k: usize,
    pub retry_limit: u32,
    pub timeout: Duration,
}

fn env(name: &str) -> Option<String> {
    std::env::var(format!("SATD_FORGE_{name}")).ok().filter(|v| !v.is_empty())
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
    match env(name) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("SATD_FORGE_{name}: cannot parse `{v}`"))),
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // Paths in a config file are relative to the file.
    let base = path.parent().unwrap_or(Path::new(""));
    let fix = |p: &mut Option<PathBuf>| {
        if let Some(q) = p {
            *q = base.join(&*q);
        }
    };
    for p in [
        &mut cfg.repos,
        &mut cfg.dataset,
        &mut cfg.records,
        &mut cfg.generations,
        &mut cfg.out,
        &mut cfg.stats,
        &mut cfg.cache,
    ] {
        fix(p);
    }
    cfg.runs = cfg.runs.iter().map(|p| base.join(p)).collect();
    Ok(cfg)
}

impl RunConfig {
    pub fn resolve(opts: &Options) -> Result<Self> {
        let file = match &opts.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let lang = opts.lang.clone().or(file.lang).or_else(|| env("LANG"));
        let language = lang
            .map(|l| l.parse::<Language>().map_err(|_| CliError::Config(format!("unknown language `{l}`"))))
            .transpose()?;
        let template = opts.template.clone().or(file.template).or_else(|| env("TEMPLATE"));
        let template = template
            .map(|t| t.parse::<TemplateName>().map_err(|e| CliError::Config(e.to_string())))
            .transpose()?;
        let concurrency = match opts.jobs.or(file.jobs) {
            Some(j) => j,
            None => env_parsed("JOBS")?.unwrap_or(DEFAULT_JOBS),
        };
        if concurrency == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let seed = match opts.seed.or(file.seed) {
            Some(s) => s,
            None => env_parsed("SEED")?.unwrap_or(DEFAULT_SEED),
        };
        let retry_limit = match opts.retry_limit.or(file.retry_limit) {
            Some(r) => r,
            None => env_parsed("RETRY_LIMIT")?.unwrap_or(DEFAULT_RETRY_LIMIT),
        };
        if retry_limit == 0 {
            return Err(CliError::Config("--retry-limit must be at least 1".into()));
        }
        let timeout = match opts.timeout.or(file.timeout) {
            Some(t) => t,
            None => env_parsed("TIMEOUT")?.unwrap_or(DEFAULT_TIMEOUT_SECS),
        };
        let k = match opts.k.or(file.k) {
            Some(k) => k,
            None => env_parsed("K")?.unwrap_or(DEFAULT_K),
        };
        Ok(RunConfig {
            language,
            repo_manifest: opts.repos.clone().or(file.repos).or_else(|| env("REPOS").map(PathBuf::from)),
            dataset_path: opts.dataset.clone().or(file.dataset).or_else(|| env("DATASET").map(PathBuf::from)),
            records: opts.records.clone().or(file.records),
            generations: opts.generations.clone().or(file.generations),
            runs: if opts.runs.is_empty() { file.runs } else { opts.runs.clone() },
            endpoint_url: opts.endpoint.clone().or(file.endpoint).or_else(|| env("ENDPOINT")),
            model: opts.model.clone().or(file.model).or_else(|| env("MODEL")),
            template,
            seed,
            concurrency,
            out: opts.out.clone().or(file.out),
            stats: opts.stats.clone().or(file.stats),
            cache: opts.cache.clone().or(file.cache).or_else(|| env("CACHE").map(PathBuf::from)),
            k,
            retry_limit,
            timeout: Duration::from_secs(timeout),
        })
    }

    pub fn need<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| CliError::Config(format!("--{flag} is required for this command")))
    }

    /// A required input file that must already exist.
    pub fn input<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        let p = Self::need(value, flag)?;
        if !p.exists() {
            return Err(CliError::Config(format!("--{flag} {}: no such file", p.display())));
        }
        Ok(p)
    }
}
