//! Tracking of debt comments through a repository's first-parent history.
//!
//! Every commit is diffed against its predecessor in the walk. Known debt
//! comments are moved through the diff hunks (following renames); a comment
//! whose line is removed, and not re-matched to a similar inserted comment,
//! is recorded as deleted at that commit.

mod diff;
mod git;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{extract_comments, Language, SatdDetector};

pub use diff::{parse_diff, FileDiff, FileStatus};
pub use git::{GitError, GitRepo};

/// A commit in the linearized walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub id: String,
    pub parent_id: Option<String>,
    pub timestamp: i64,
    pub ordinal: usize,
}

/// A zero-context diff hunk. Starts are 1-based; for a pure insertion
/// `old_start` is the line the insertion follows (0 at the top of the file),
/// and likewise `new_start` for a pure deletion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub deleted_lines: Vec<String>,
    pub inserted_lines: Vec<String>,
}

/// Lifespan of one debt comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatdRecord {
    pub user: String,
    pub project: String,
    pub file_path: String,
    pub creation_commit: String,
    pub deletion_commit: Option<String>,
    pub line_at_creation: usize,
    pub line_before_deletion: Option<usize>,
    #[serde(rename = "satd_comment")]
    pub comment_text: String,
    pub language: Language,
    /// Committer time of the deletion commit; orders duplicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deletion_timestamp: Option<i64>,
}

impl SatdRecord {
    pub fn is_deleted(&self) -> bool {
        self.deletion_commit.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappedLine {
    Line(usize),
    Deleted,
}

/// Jaccard similarity of the whitespace-separated token sets; 0 when both
/// lines are blank.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let sa: HashSet<&str> = a.split_whitespace().collect();
    let sb: HashSet<&str> = b.split_whitespace().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub const REMATCH_THRESHOLD: f64 = 0.5;

/// Position of old line `line` after applying `hunks`.
pub fn map_line(line: usize, hunks: &[Hunk]) -> MappedLine {
    map_line_with(line, hunks, |_| true)
}

/// Like [`map_line`], but a line inside a deleted range is re-matched to the
/// most similar inserted line of the same hunk (Jaccard at least
/// [`REMATCH_THRESHOLD`], earliest on ties) among those `accept` allows.
pub fn map_line_with(line: usize, hunks: &[Hunk], mut accept: impl FnMut(usize) -> bool) -> MappedLine {
    let mut shift: isize = 0;
    for h in hunks {
        if h.old_len == 0 {
            if h.old_start < line {
                shift += h.new_len as isize;
                continue;
            }
            break;
        }
        let last = h.old_start + h.old_len - 1;
        if last < line {
            shift += h.new_len as isize - h.old_len as isize;
            continue;
        }
        if h.old_start > line {
            break;
        }
        let Some(old_text) = h.deleted_lines.get(line - h.old_start) else {
            return MappedLine::Deleted;
        };
        let mut best: Option<(f64, usize)> = None;
        for (i, text) in h.inserted_lines.iter().enumerate() {
            let sim = token_jaccard(old_text, text);
            if sim >= REMATCH_THRESHOLD && best.is_none_or(|(b, _)| sim > b) && accept(h.new_start + i) {
                best = Some((sim, i));
            }
        }
        return best.map_or(MappedLine::Deleted, |(_, i)| MappedLine::Line(h.new_start + i));
    }
    MappedLine::Line((line as isize + shift) as usize)
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("repository {path} is unreadable: {source}")]
    RepositoryUnreadable {
        path: PathBuf,
        #[source]
        source: GitError,
    },
}

#[derive(Debug, Clone)]
pub struct TrackerConfig {
    pub detector: SatdDetector,
    /// Larger files are not scanned.
    pub max_file_bytes: usize,
    /// Overrides for the owner and project names, which otherwise come from
    /// the last two components of the repository path.
    pub user: Option<String>,
    pub project: Option<String>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { detector: SatdDetector::default(), max_file_bytes: 1 << 20, user: None, project: None }
    }
}

/// Owner and project names for a clone: its parent directory and its own name.
pub fn repo_names(path: &Path) -> (String, String) {
    let full = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    let name = |p: Option<&Path>| {
        p.and_then(Path::file_name).map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    };
    (name(full.parent()), name(Some(&full)))
}

struct Tracker<'c> {
    cfg: &'c TrackerConfig,
    lang: Language,
    user: String,
    project: String,
    records: Vec<SatdRecord>,
    /// path -> (line -> record index)
    active: HashMap<String, BTreeMap<usize, usize>>,
}

impl Tracker<'_> {
    fn close(&mut self, idx: usize, line: usize, path: &str, commit: &CommitRef) {
        let rec = &mut self.records[idx];
        rec.deletion_commit = Some(commit.id.clone());
        rec.line_before_deletion = Some(line);
        rec.deletion_timestamp = Some(commit.timestamp);
        rec.file_path = path.to_string();
    }

    fn readable(&self, repo: &GitRepo, commit: &str, file: &FileDiff, path: &str) -> Result<Option<String>, GitError> {
        if file.binary {
            return Ok(None);
        }
        let Some(bytes) = repo.file_at(commit, path)? else { return Ok(None) };
        if bytes.len() > self.cfg.max_file_bytes || bytes.contains(&0) {
            debug!("skipping {path} at {commit}: binary or oversized");
            return Ok(None);
        }
        Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
    }

    fn step(&mut self, repo: &GitRepo, commit: &CommitRef) -> Result<(), GitError> {
        for file in repo.diff(commit.parent_id.as_deref(), &commit.id, self.lang)? {
            let old_active = file.old_path.as_ref().and_then(|p| self.active.remove(p)).unwrap_or_default();
            let old_path = file.old_path.clone().unwrap_or_default();
            let Some(new_path) = file.new_path.clone() else {
                for (line, idx) in old_active {
                    self.close(idx, line, &old_path, commit);
                }
                continue;
            };
            let mut next: BTreeMap<usize, usize> = BTreeMap::new();
            let Some(text) = self.readable(repo, &commit.id, &file, &new_path)? else {
                warn!("{new_path} at {} is not scannable; moving its comments without verification", commit.id);
                for (line, idx) in old_active {
                    match map_line(line, &file.hunks) {
                        MappedLine::Line(n) => {
                            self.records[idx].file_path = new_path.clone();
                            next.insert(n, idx);
                        }
                        MappedLine::Deleted => self.close(idx, line, &old_path, commit),
                    }
                }
                if !next.is_empty() {
                    self.active.insert(new_path, next);
                }
                continue;
            };

            let mut debt: BTreeMap<usize, String> = BTreeMap::new();
            for c in extract_comments(&text, self.lang) {
                if self.cfg.detector.is_satd(&c.text) {
                    debt.entry(c.start_line).or_insert(c.text);
                }
            }
            let mut claimed: BTreeSet<usize> = BTreeSet::new();
            for (line, idx) in old_active {
                let mapped = map_line_with(line, &file.hunks, |n| debt.contains_key(&n) && !claimed.contains(&n));
                match mapped {
                    MappedLine::Line(n) if debt.contains_key(&n) && !claimed.contains(&n) => {
                        claimed.insert(n);
                        let rec = &mut self.records[idx];
                        rec.comment_text = debt[&n].clone();
                        rec.file_path = new_path.clone();
                        next.insert(n, idx);
                    }
                    _ => self.close(idx, line, &old_path, commit),
                }
            }
            for (line, text) in debt {
                if claimed.contains(&line) {
                    continue;
                }
                next.insert(line, self.records.len());
                self.records.push(SatdRecord {
                    user: self.user.clone(),
                    project: self.project.clone(),
                    file_path: new_path.clone(),
                    creation_commit: commit.id.clone(),
                    deletion_commit: None,
                    line_at_creation: line,
                    line_before_deletion: None,
                    comment_text: text,
                    language: self.lang,
                    deletion_timestamp: None,
                });
            }
            if !next.is_empty() {
                self.active.insert(new_path, next);
            }
        }
        Ok(())
    }
}

/// Tracks every debt comment in the `lang` source files of the repository at
/// `repo_path`, walking `HEAD`'s first-parent history from the root.
/// Records are in creation order.
pub fn track_repository(repo_path: &Path, lang: Language) -> Result<Vec<SatdRecord>, HistoryError> {
    track_repository_with(repo_path, lang, &TrackerConfig::default())
}

pub fn track_repository_with(
    repo_path: &Path,
    lang: Language,
    cfg: &TrackerConfig,
) -> Result<Vec<SatdRecord>, HistoryError> {
    let unreadable = |source| HistoryError::RepositoryUnreadable { path: repo_path.to_path_buf(), source };
    let repo = GitRepo::open(repo_path).map_err(unreadable)?;
    let walk = repo.first_parent_walk().map_err(unreadable)?;
    let (user, project) = repo_names(repo_path);
    let mut tracker = Tracker {
        cfg,
        lang,
        user: cfg.user.clone().unwrap_or(user),
        project: cfg.project.clone().unwrap_or(project),
        records: Vec::new(),
        active: HashMap::new(),
    };
    for commit in &walk {
        tracker.step(&repo, commit).map_err(unreadable)?;
    }
    Ok(tracker.records)
}

/// Tracks several repositories in parallel. Results keep the input order;
/// a failing repository does not affect the others.
pub fn track_many(
    repo_paths: &[PathBuf],
    lang: Language,
    cfg: &TrackerConfig,
) -> Vec<(PathBuf, Result<Vec<SatdRecord>, HistoryError>)> {
    repo_paths.par_iter().map(|p| (p.clone(), track_repository_with(p, lang, cfg))).collect()
}
