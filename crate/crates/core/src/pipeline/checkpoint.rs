//! Resumable checkpoint directory.
//!
//! ```text
//! <out>/
//!   crawl/<hash>.jsonl      one trajectory per line, per crawl stage
//!   evals/<hash>.json       one EvalReport per evaluation
//!   manifest.json           rewritten after every evaluation
//!   reports.jsonl           every report of the run, in evaluation order
//!   training_data.jsonl     final prompt records (complete runs only)
//! ```
//!
//! Crawl hashes cover the game, seed, segment prefixes and crawl settings;
//! evaluation hashes cover the evaluator binding, training records and the
//! scored episodes. Neither includes the acceptance threshold, so changing
//! it reuses every cached stage.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::Manifest;
use crate::evaluator::EvalReport;
use crate::policy::PromptRecord;
use crate::trajectory::Trajectory;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORTS_FILE: &str = "reports.jsonl";
pub const TRAINING_DATA_FILE: &str = "training_data.jsonl";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    root: PathBuf,
}

fn invalid(path: &Path, e: serde_json::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
}

/// Writes through a temporary file so a crash never leaves a torn file.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
    }
    fs::rename(tmp, path)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> io::Result<()> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item).map_err(|e| invalid(path, e))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| invalid(path, e))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| invalid(path, e))?;
        w.write_all(b"\n")
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> io::Result<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| invalid(path, e))
}

impl Checkpoint {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Checkpoint> {
        let root = root.into();
        fs::create_dir_all(root.join("crawl"))?;
        fs::create_dir_all(root.join("evals"))?;
        Ok(Checkpoint { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn crawl_path(&self, key: &str) -> PathBuf {
        self.root.join("crawl").join(format!("{key}.jsonl"))
    }

    pub fn eval_path(&self, key: &str) -> PathBuf {
        self.root.join("evals").join(format!("{key}.json"))
    }

    pub fn load_crawl(&self, key: &str) -> io::Result<Option<Vec<Trajectory>>> {
        let path = self.crawl_path(key);
        if !path.exists() {
            return Ok(None);
        }
        read_jsonl(&path).map(Some)
    }

    pub fn store_crawl(&self, key: &str, paths: &[Trajectory]) -> io::Result<()> {
        write_jsonl(&self.crawl_path(key), paths)
    }

    pub fn load_eval(&self, key: &str) -> io::Result<Option<EvalReport>> {
        let path = self.eval_path(key);
        if !path.exists() {
            return Ok(None);
        }
        read_json(&path).map(Some)
    }

    pub fn store_eval(&self, key: &str, report: &EvalReport) -> io::Result<()> {
        write_json(&self.eval_path(key), report)
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> io::Result<()> {
        write_json(&self.root.join(MANIFEST_FILE), manifest)
    }

    pub fn write_reports(&self, reports: &[EvalReport]) -> io::Result<()> {
        write_jsonl(&self.root.join(REPORTS_FILE), reports)
    }

    pub fn write_training_data(&self, records: &[PromptRecord]) -> io::Result<()> {
        write_jsonl(&self.root.join(TRAINING_DATA_FILE), records)
    }
}
