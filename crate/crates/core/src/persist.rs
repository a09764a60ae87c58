//! On-disk project state.
//!
//! A project directory holds `.pbl-inspect/project.json` (the whole state,
//! rewritten atomically after each successful mutation),
//! `.pbl-inspect/events.jsonl` (one line per command) and
//! `.pbl-inspect/lock` (held while a command runs).

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::project::{ProjectState, SCHEMA_VERSION};
use crate::vcs::VcsModel;

pub const STATE_DIR: &str = ".pbl-inspect";
pub const STATE_FILE: &str = "project.json";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const LOCK_FILE: &str = "lock";

/// Set to `before-rename` to abort the process after the new state has been
/// written to a temporary file but before it replaces the old one.
pub const CRASH_ENV: &str = "PBL_INSPECT_CRASH";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Memory,
    Git,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Memory => "memory",
            BackendKind::Git => "git",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: u32,
    pub backend: BackendKind,
    pub state: ProjectState,
    /// Commit graph of the in-memory backend; absent for git.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vcs: Option<VcsModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub seq: u64,
    pub actor: String,
    pub command: String,
    /// `ok` or the error code.
    pub outcome: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct ProjectDir {
    root: PathBuf,
}

/// Exclusive lock on a project directory, released on drop.
#[derive(Debug)]
pub struct ProjectLock {
    _file: File,
}

impl ProjectDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ProjectDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self) -> PathBuf {
        self.root.join(STATE_DIR)
    }

    pub fn state_path(&self) -> PathBuf {
        self.dir().join(STATE_FILE)
    }

    pub fn events_path(&self) -> PathBuf {
        self.dir().join(EVENTS_FILE)
    }

    pub fn exists(&self) -> bool {
        self.state_path().is_file()
    }

    /// Takes the project lock without waiting.
    pub fn lock(&self) -> Result<ProjectLock> {
        let dir = self.dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(ProjectLock { _file: file }),
            Err(fs::TryLockError::WouldBlock) => Err(Error::LockHeld(path)),
            Err(fs::TryLockError::Error(e)) => Err(Error::io(&path, e)),
        }
    }

    pub fn load(&self) -> Result<StateFile> {
        let path = self.state_path();
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::NotInitialized(self.root.clone())),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let file: StateFile = serde_json::from_slice(&bytes)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(file)
    }

    /// Replaces the state file: write a temporary file in the same
    /// directory, fsync it, rename it over the old one.
    pub fn save(&self, file: &StateFile) -> Result<()> {
        let dir = self.dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut text = serde_json::to_string_pretty(file)?;
        text.push('\n');
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
        tmp.write_all(text.as_bytes())
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| Error::io(tmp.path(), e))?;
        if std::env::var(CRASH_ENV).as_deref() == Ok("before-rename") {
            std::process::abort();
        }
        let path = self.state_path();
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    pub fn read_events(&self) -> Result<Vec<EventLogEntry>> {
        let path = self.events_path();
        let f = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }

    /// Appends one entry with the next sequence number.
    pub fn append_event(&self, actor: &str, command: &str, outcome: &str) -> Result<EventLogEntry> {
        let seq = self.read_events()?.last().map_or(1, |e| e.seq + 1);
        let entry = EventLogEntry {
            seq,
            actor: actor.to_owned(),
            command: command.to_owned(),
            outcome: outcome.to_owned(),
            timestamp: Utc::now(),
        };
        let path = self.events_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        f.write_all(line.as_bytes())
            .and_then(|_| f.sync_data())
            .map_err(|e| Error::io(&path, e))?;
        Ok(entry)
    }
}
