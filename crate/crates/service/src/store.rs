//! Session logs and results under a data directory.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::events::{from_json_lines, to_json_lines, Event};

/// Writes nothing when no directory is configured.
#[derive(Debug, Clone, Default)]
pub struct Store {
    dir: Option<PathBuf>,
}

impl Store {
    pub fn at(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("sessions"))?;
        fs::create_dir_all(dir.join("results"))?;
        Ok(Store { dir: Some(dir) })
    }

    pub fn memory() -> Self {
        Store { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn log_path(dir: &Path, id: &str) -> PathBuf {
        dir.join("sessions").join(format!("{id}.jsonl"))
    }

    pub fn result_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join("results").join(format!("{id}.tbox")))
    }

    pub fn append(&self, id: &str, events: &[Event]) -> io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if events.is_empty() {
            return Ok(());
        }
        let mut f = OpenOptions::new().create(true).append(true).open(Self::log_path(dir, id))?;
        f.write_all(to_json_lines(events).as_bytes())?;
        f.sync_data()
    }

    pub fn write_result(&self, id: &str, text: &str) -> io::Result<Option<PathBuf>> {
        let Some(path) = self.result_path(id) else { return Ok(None) };
        fs::write(&path, text)?;
        Ok(Some(path))
    }

    /// Every stored log, ordered by file name.
    pub fn load_all(&self) -> io::Result<Vec<(String, Vec<Event>)>> {
        let Some(dir) = &self.dir else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir.join("sessions"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for p in paths {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let events = from_json_lines(&fs::read_to_string(&p)?).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            out.push((id, events));
        }
        Ok(out)
    }
}
