use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use thiserror::Error;

use super::diff::{parse_diff, FileDiff};
use super::CommitRef;
use crate::code_model::Language;

#[derive(Debug, Error)]
pub enum GitError {
    #[error("cannot run git: {0}")]
    Io(#[from] io::Error),
    #[error("`git {args}` failed: {stderr}")]
    Failed { args: String, stderr: String },
    #[error("unexpected output from git: {0}")]
    Protocol(String),
}

struct CatFile {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for CatFile {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Read-only access to a local clone through the `git` executable.
/// Blob reads go through one long-lived `git cat-file --batch` process.
pub struct GitRepo {
    path: PathBuf,
    batch: Mutex<Option<CatFile>>,
}

impl std::fmt::Debug for GitRepo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GitRepo").field("path", &self.path).finish()
    }
}

impl GitRepo {
    /// Fails unless `path` is a repository with a checked-out `HEAD` commit.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GitError> {
        let repo = GitRepo { path: path.as_ref().to_path_buf(), batch: Mutex::new(None) };
        repo.run(&["rev-parse", "--verify", "--quiet", "HEAD^{commit}"])?;
        Ok(repo)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(&self.path)
            .args(["-c", "core.quotePath=false", "-c", "diff.noprefix=false", "-c", "diff.mnemonicPrefix=false"])
            .env("GIT_TERMINAL_PROMPT", "0")
            .env("LC_ALL", "C");
        cmd
    }

    pub fn run(&self, args: &[&str]) -> Result<Vec<u8>, GitError> {
        let out = self.command().args(args).stdin(Stdio::null()).output()?;
        if !out.status.success() {
            return Err(GitError::Failed {
                args: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(out.stdout)
    }

    /// First-parent history of `HEAD`, oldest first.
    pub fn first_parent_walk(&self) -> Result<Vec<CommitRef>, GitError> {
        let out = self.run(&["log", "--first-parent", "--reverse", "--format=%H %ct", "HEAD"])?;
        let text = String::from_utf8_lossy(&out);
        let mut walk: Vec<CommitRef> = Vec::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (id, ts) = line.split_once(' ').ok_or_else(|| GitError::Protocol(line.to_string()))?;
            let timestamp = ts.trim().parse().map_err(|_| GitError::Protocol(line.to_string()))?;
            walk.push(CommitRef {
                id: id.to_string(),
                parent_id: walk.last().map(|c| c.id.clone()),
                timestamp,
                ordinal: walk.len(),
            });
        }
        Ok(walk)
    }

    /// Zero-context diff between `parent` (or the empty tree) and `commit`,
    /// limited to source files of `lang`, with renames at 50% similarity.
    pub fn diff(&self, parent: Option<&str>, commit: &str, lang: Language) -> Result<Vec<FileDiff>, GitError> {
        let glob = format!("*.{}", lang.extension());
        let mut args = vec!["diff-tree", "-r", "-p", "-U0", "--no-color", "--no-ext-diff", "-M50%", "--no-commit-id"];
        match parent {
            Some(p) => args.extend([p, commit]),
            None => args.extend(["--root", commit]),
        }
        args.extend(["--", glob.as_str()]);
        Ok(parse_diff(&String::from_utf8_lossy(&self.run(&args)?)))
    }

    /// First parent of `commit`, if any.
    pub fn parent_of(&self, commit: &str) -> Result<Option<String>, GitError> {
        let spec = format!("{commit}^1");
        match self.run(&["rev-parse", "--verify", "--quiet", &spec]) {
            Ok(out) => Ok(Some(String::from_utf8_lossy(&out).trim().to_string())),
            Err(GitError::Failed { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Committer timestamp of `commit`, in seconds since the epoch.
    pub fn timestamp_of(&self, commit: &str) -> Result<i64, GitError> {
        let out = self.run(&["show", "-s", "--format=%ct", commit])?;
        let text = String::from_utf8_lossy(&out);
        text.trim().parse().map_err(|_| GitError::Protocol(text.into_owned()))
    }

    /// Contents of `path` at `commit`; `None` if there is no such blob.
    pub fn file_at(&self, commit: &str, path: &str) -> Result<Option<Vec<u8>>, GitError> {
        let mut guard = self.batch.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn_batch()?);
        }
        let result = read_blob(guard.as_mut().expect("spawned above"), commit, path);
        if result.is_err() {
            // the stream may be out of sync; restart on next use
            *guard = None;
        }
        result
    }

    fn spawn_batch(&self) -> Result<CatFile, GitError> {
        let mut child = self
            .command()
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().ok_or_else(|| GitError::Protocol("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| GitError::Protocol("no stdout".into()))?;
        Ok(CatFile { child, stdin, stdout: BufReader::new(stdout) })
    }
}

fn read_blob(cat: &mut CatFile, commit: &str, path: &str) -> Result<Option<Vec<u8>>, GitError> {
    if path.contains('\n') {
        return Ok(None);
    }
    writeln!(cat.stdin, "{commit}:{path}")?;
    cat.stdin.flush()?;
    let mut header = String::new();
    if cat.stdout.read_line(&mut header)? == 0 {
        return Err(GitError::Protocol("cat-file exited".into()));
    }
    let header = header.trim_end();
    if header.ends_with(" missing") || header.ends_with(" ambiguous") {
        return Ok(None);
    }
    let mut parts = header.split(' ');
    let kind = parts.nth(1);
    let size: usize =
        parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| GitError::Protocol(header.to_string()))?;
    let mut buf = vec![0u8; size + 1];
    cat.stdout.read_exact(&mut buf)?;
    buf.pop();
    Ok((kind == Some("blob")).then_some(buf))
}
