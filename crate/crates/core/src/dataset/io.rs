use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::{FilterStats, RepaymentSample};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Writes `path` atomically through a sibling temporary file.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<&mut File>) -> io::Result<()>) -> Result<(), DatasetError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(path))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Blank lines are skipped; errors name the 1-based line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_dataset(samples: &[RepaymentSample], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(samples, path)
}

pub fn read_dataset(path: &Path) -> Result<Vec<RepaymentSample>, DatasetError> {
    read_jsonl(path)
}

/// Tab-separated `step`, `count` rows under a header.
pub fn write_stats(stats: &FilterStats, path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, |w| {
        writeln!(w, "step\tcount")?;
        for (step, count) in &stats.rows {
            writeln!(w, "{step}\t{count}")?;
        }
        Ok(())
    })
}

pub fn read_stats(path: &Path) -> Result<FilterStats, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut stats = FilterStats::default();
    for (i, line) in text.lines().enumerate().skip(1) {
        let malformed = |message: &str| DatasetError::Malformed { path: path.to_path_buf(), line: i + 1, message: message.into() };
        let (step, count) = line.split_once('\t').ok_or_else(|| malformed("expected two tab-separated columns"))?;
        stats.push(step, count.trim().parse().map_err(|_| malformed("count is not a nonnegative integer"))?);
    }
    Ok(stats)
}
