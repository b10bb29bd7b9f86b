use super::Hunk;

/// One file's section of a zero-context `git diff-tree -p` output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    /// `None` for added files.
    pub old_path: Option<String>,
    /// `None` for deleted files.
    pub new_path: Option<String>,
    pub binary: bool,
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileStatus {
    Added,
    Deleted,
    Modified,
    Renamed,
}

impl FileDiff {
    pub fn status(&self) -> FileStatus {
        match (&self.old_path, &self.new_path) {
            (None, _) => FileStatus::Added,
            (_, None) => FileStatus::Deleted,
            (Some(a), Some(b)) if a != b => FileStatus::Renamed,
            _ => FileStatus::Modified,
        }
    }
}

/// Undoes git's C-style quoting of unusual paths.
fn unquote(path: &str) -> String {
    let Some(inner) = path.strip_prefix('"').and_then(|p| p.strip_suffix('"')) else {
        return path.to_string();
    };
    let mut bytes = Vec::with_capacity(inner.len());
    let raw = inner.as_bytes();
    let mut i = 0;
    while i < raw.len() {
        if raw[i] != b'\\' || i + 1 == raw.len() {
            bytes.push(raw[i]);
            i += 1;
            continue;
        }
        let c = raw[i + 1];
        i += 2;
        bytes.push(match c {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'a' => 0x07,
            b'b' => 0x08,
            b'f' => 0x0c,
            b'v' => 0x0b,
            b'0'..=b'7' => {
                let mut v = u32::from(c - b'0');
                for _ in 0..2 {
                    if i < raw.len() && (b'0'..=b'7').contains(&raw[i]) {
                        v = v * 8 + u32::from(raw[i] - b'0');
                        i += 1;
                    }
                }
                v as u8
            }
            other => other,
        });
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

fn side(path: &str, prefix: &str) -> Option<String> {
    let path = unquote(path.trim_end_matches('\t'));
    if path == "/dev/null" {
        return None;
    }
    Some(path.strip_prefix(prefix).map(str::to_string).unwrap_or(path))
}

/// Paths from `a/P b/P`; only the unambiguous same-path form is trusted.
fn header_paths(rest: &str) -> Option<String> {
    let rest = rest.trim_end();
    if let Some(tail) = rest.strip_prefix('"') {
        let close = tail.find("\" ")? + 1;
        let a = side(&rest[..=close], "a/")?;
        let b = side(&rest[close + 2..], "b/")?;
        return (a == b).then_some(a);
    }
    let half = rest.len().checked_sub(1)? / 2;
    let (a, b) = (rest.get(..half)?, rest.get(half + 1..)?);
    let (a, b) = (a.strip_prefix("a/")?, b.strip_prefix("b/")?);
    (a == b).then(|| a.to_string())
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once(',') {
        Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(rest: &str) -> Option<Hunk> {
    let mut parts = rest.split(' ');
    let old = parts.next()?.strip_prefix('-')?;
    let new = parts.next()?.strip_prefix('+')?;
    let (old_start, old_len) = parse_range(old)?;
    let (new_start, new_len) = parse_range(new)?;
    Some(Hunk { old_start, old_len, new_start, new_len, deleted_lines: Vec::new(), inserted_lines: Vec::new() })
}

/// Parses patch output produced with `-U0`. Hunk bodies are consumed by
/// their declared lengths, so content lines that look like headers are safe.
pub fn parse_diff(text: &str) -> Vec<FileDiff> {
    let mut files: Vec<FileDiff> = Vec::new();
    let mut pending = (0usize, 0usize);
    for line in text.split('\n') {
        if let Some(file) = files.last_mut() {
            if pending != (0, 0) {
                let hunk = file.hunks.last_mut().expect("pending lines belong to a hunk");
                if let (Some(t), true) = (line.strip_prefix('-'), pending.0 > 0) {
                    hunk.deleted_lines.push(t.to_string());
                    pending.0 -= 1;
                    continue;
                }
                if let (Some(t), true) = (line.strip_prefix('+'), pending.1 > 0) {
                    hunk.inserted_lines.push(t.to_string());
                    pending.1 -= 1;
                    continue;
                }
                if line.starts_with('\\') {
                    continue;
                }
                pending = (0, 0);
            } else if line.starts_with('\\') {
                continue;
            }
        }
        if let Some(rest) = line.strip_prefix("diff --git ") {
            let path = header_paths(rest);
            files.push(FileDiff { old_path: path.clone(), new_path: path, binary: false, hunks: Vec::new() });
            continue;
        }
        let Some(file) = files.last_mut() else { continue };
        if let Some(rest) = line.strip_prefix("@@ ") {
            if let Some(h) = parse_hunk_header(rest) {
                pending = (h.old_len, h.new_len);
                file.hunks.push(h);
            }
        } else if line.starts_with("new file mode") {
            file.old_path = None;
        } else if line.starts_with("deleted file mode") {
            file.new_path = None;
        } else if let Some(p) = line.strip_prefix("rename from ") {
            file.old_path = Some(unquote(p));
        } else if let Some(p) = line.strip_prefix("rename to ") {
            file.new_path = Some(unquote(p));
        } else if let Some(p) = line.strip_prefix("--- ") {
            file.old_path = side(p, "a/");
        } else if let Some(p) = line.strip_prefix("+++ ") {
            file.new_path = side(p, "b/");
        } else if line.starts_with("Binary files ") || line == "GIT binary patch" {
            file.binary = true;
        }
    }
    files.retain(|f| f.old_path.is_some() || f.new_path.is_some());
    files
}
