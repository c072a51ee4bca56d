//! Run directories: atomic file writes, the manifest and the FAILED marker.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const FAILED: &str = "FAILED";

pub struct RunDir {
    root: PathBuf,
    written: Vec<String>,
}

/// A file being written under a temporary name; it appears under its final
/// name only on `commit`.
pub struct PendingFile {
    tmp: PathBuf,
    dest: PathBuf,
    name: String,
    w: BufWriter<File>,
}

impl PendingFile {
    pub fn writer(&mut self) -> &mut BufWriter<File> {
        &mut self.w
    }

    pub fn commit(mut self, dir: &mut RunDir) -> Result<(), CliError> {
        let ctx = format!("writing {}", self.dest.display());
        self.w.flush().map_err(|e| CliError::io(&ctx, e))?;
        fs::rename(&self.tmp, &self.dest).map_err(|e| CliError::io(&ctx, e))?;
        dir.written.push(self.name);
        Ok(())
    }
}

impl RunDir {
    /// Creates (or reuses) `root`, clearing a stale FAILED marker.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(format!("creating {}", root.display()), e))?;
        match fs::remove_file(root.join(FAILED)) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(CliError::io("removing stale FAILED marker", e)),
        }
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn outputs(&self) -> &[String] {
        &self.written
    }

    pub fn open(&self, name: &str) -> Result<PendingFile, CliError> {
        let dest = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let f = File::create(&tmp).map_err(|e| CliError::io(format!("creating {}", tmp.display()), e))?;
        Ok(PendingFile {
            tmp,
            dest,
            name: name.to_string(),
            w: BufWriter::new(f),
        })
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
        let mut p = self.open(name)?;
        f(p.writer()).map_err(|e| CliError::io(format!("writing {name}"), e))?;
        p.commit(self)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    pub fn mark_failed(&mut self, err: &CliError) -> Result<(), CliError> {
        let text = format!("{err}\n");
        let mut p = self.open(FAILED)?;
        p.writer().write_all(text.as_bytes()).map_err(|e| CliError::io("writing FAILED", e))?;
        p.commit(self)
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub workers: usize,
    pub parallel: bool,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}
