use std::collections::HashMap;

use thiserror::Error;

use crate::code_model::Language;
use crate::history::{GitError, GitRepo};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SourceError(pub String);

impl From<GitError> for SourceError {
    fn from(e: GitError) -> Self {
        SourceError(e.to_string())
    }
}

/// File contents at arbitrary commits of one repository.
pub trait SourceProvider: Sync {
    /// `None` when the file does not exist at `commit`.
    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, SourceError>;

    fn parent_of(&self, commit: &str) -> Result<Option<String>, SourceError>;

    /// Where `path` from `parent` lives in `commit`; `None` if it was deleted.
    fn path_after(&self, parent: &str, commit: &str, path: &str, lang: Language) -> Result<Option<String>, SourceError> {
        let _ = (parent, lang);
        Ok(self.file_at(commit, path)?.map(|_| path.to_string()))
    }

    fn timestamp_of(&self, commit: &str) -> Result<Option<i64>, SourceError> {
        let _ = commit;
        Ok(None)
    }
}

impl SourceProvider for GitRepo {
    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, SourceError> {
        Ok(GitRepo::file_at(self, commit, path)?.map(|b| String::from_utf8_lossy(&b).into_owned()))
    }

    fn parent_of(&self, commit: &str) -> Result<Option<String>, SourceError> {
        Ok(GitRepo::parent_of(self, commit)?)
    }

    fn path_after(&self, parent: &str, commit: &str, path: &str, lang: Language) -> Result<Option<String>, SourceError> {
        let diffs = self.diff(Some(parent), commit, lang)?;
        Ok(match diffs.into_iter().find(|d| d.old_path.as_deref() == Some(path)) {
            Some(d) => d.new_path,
            None => Some(path.to_string()),
        })
    }

    fn timestamp_of(&self, commit: &str) -> Result<Option<i64>, SourceError> {
        Ok(Some(GitRepo::timestamp_of(self, commit)?))
    }
}

/// An in-memory repository, for tests and synthetic fixtures.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    files: HashMap<(String, String), String>,
    parents: HashMap<String, String>,
    renames: HashMap<(String, String), String>,
    timestamps: HashMap<String, i64>,
}

impl MemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_file(&mut self, commit: &str, path: &str, text: &str) -> &mut Self {
        self.files.insert((commit.into(), path.into()), text.into());
        self
    }

    pub fn set_parent(&mut self, commit: &str, parent: &str) -> &mut Self {
        self.parents.insert(commit.into(), parent.into());
        self
    }

    /// Records that `commit` renamed `old` to `new`.
    pub fn set_rename(&mut self, commit: &str, old: &str, new: &str) -> &mut Self {
        self.renames.insert((commit.into(), old.into()), new.into());
        self
    }

    pub fn set_timestamp(&mut self, commit: &str, ts: i64) -> &mut Self {
        self.timestamps.insert(commit.into(), ts);
        self
    }
}

impl SourceProvider for MemorySource {
    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, SourceError> {
        Ok(self.files.get(&(commit.to_string(), path.to_string())).cloned())
    }

    fn parent_of(&self, commit: &str) -> Result<Option<String>, SourceError> {
        Ok(self.parents.get(commit).cloned())
    }

    fn path_after(&self, _: &str, commit: &str, path: &str, _: Language) -> Result<Option<String>, SourceError> {
        if let Some(new) = self.renames.get(&(commit.to_string(), path.to_string())) {
            return Ok(Some(new.clone()));
        }
        Ok(self.file_at(commit, path)?.map(|_| path.to_string()))
    }

    fn timestamp_of(&self, commit: &str) -> Result<Option<i64>, SourceError> {
        Ok(self.timestamps.get(commit).copied())
    }
}
