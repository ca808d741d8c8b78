use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// An output directory; every file is written whole by a single writer.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatus {
    /// `complete` or `incomplete`.
    pub status: String,
    pub completed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunStatus {
    pub fn new() -> Self {
        RunStatus { status: "complete".into(), completed: Vec::new(), error: None }
    }

    pub fn done(&mut self, stage: impl Into<String>) {
        self.completed.push(stage.into());
    }

    pub fn fail(&mut self, error: &CliError) {
        self.status = "incomplete".into();
        self.error = Some(error.to_string());
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }
}

impl Default for RunStatus {
    fn default() -> Self {
        Self::new()
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(format!("cannot write {}: {e}", path.display()))
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(RunDir { root: root.to_owned() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_with<F>(&self, rel: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> CliResult<()> {
        self.write_with(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    pub fn write_text(&self, rel: &str, text: &str) -> CliResult<()> {
        self.write_with(rel, |w| w.write_all(text.as_bytes()))
    }
}
