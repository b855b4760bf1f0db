use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::model::{source_id, PageSnapshot};
use super::IngestError;
use crate::util::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Index,
    #[default]
    Page,
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub url: String,
    pub year: u16,
    pub source_id: String,
    pub sha256: String,
    #[serde(default)]
    pub kind: SnapshotKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<DateTime<Utc>>,
}

/// A snapshot directory laid out as `<root>/<year>/<source_id>.html`
/// with a `manifest.jsonl` index.
#[derive(Debug)]
pub struct Corpus {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    by_id: HashMap<String, usize>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Corpus {
    /// Open an existing corpus or start an empty one at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        let manifest = root.join(MANIFEST_FILE);
        let entries: Vec<ManifestEntry> = if manifest.exists() {
            crate::util::read_jsonl(&manifest).map_err(|e| IngestError::Manifest {
                path: manifest.clone(),
                message: e.to_string(),
            })?
        } else {
            Vec::new()
        };
        let mut by_id = HashMap::new();
        for (i, entry) in entries.iter().enumerate() {
            // Later lines win, so a re-fetch supersedes an earlier record.
            by_id.insert(entry.source_id.clone(), i);
        }
        let mut corpus = Self {
            root,
            entries: Vec::new(),
            by_id: HashMap::new(),
        };
        let mut keep: Vec<usize> = by_id.into_values().collect();
        keep.sort_unstable();
        for i in keep {
            corpus.push(entries[i].clone());
        }
        Ok(corpus)
    }

    fn push(&mut self, entry: ManifestEntry) {
        self.by_id
            .insert(entry.source_id.clone(), self.entries.len());
        self.entries.push(entry);
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn contains_url(&self, url: &str) -> bool {
        self.by_id.contains_key(&source_id(url))
    }

    pub fn entry_for_url(&self, url: &str) -> Option<&ManifestEntry> {
        self.by_id.get(&source_id(url)).map(|&i| &self.entries[i])
    }

    pub fn snapshot_path(&self, year: u16, source_id: &str) -> PathBuf {
        self.root
            .join(year.to_string())
            .join(format!("{source_id}.html"))
    }

    /// Persist a snapshot and append it to the manifest. The HTML file is
    /// written before the manifest line so a crash never leaves a manifest
    /// entry without its file.
    pub fn store(
        &mut self,
        snapshot: &PageSnapshot,
        kind: SnapshotKind,
    ) -> Result<ManifestEntry, IngestError> {
        let id = snapshot.source_id();
        let path = self.snapshot_path(snapshot.year, &id);
        let dir = path.parent().expect("snapshot path has a parent");
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
        tmp.write_all(snapshot.body.as_bytes())
            .map_err(io_err(&path))?;
        tmp.persist(&path).map_err(|e| IngestError::Io {
            path: path.clone(),
            source: e.error,
        })?;

        let entry = ManifestEntry {
            url: snapshot.url.clone(),
            year: snapshot.year,
            source_id: id,
            sha256: sha256_hex(snapshot.body.as_bytes()),
            kind,
            fetched_at: Some(snapshot.fetched_at),
        };
        let manifest = self.root.join(MANIFEST_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest)
            .map_err(io_err(&manifest))?;
        let mut line = serde_json::to_string(&entry).expect("manifest entry serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io_err(&manifest))?;
        self.push(entry.clone());
        Ok(entry)
    }

    /// Read a snapshot back, verifying its hash against the manifest.
    pub fn read_snapshot(&self, entry: &ManifestEntry) -> Result<PageSnapshot, IngestError> {
        let path = self.snapshot_path(entry.year, &entry.source_id);
        let body = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        if sha256_hex(body.as_bytes()) != entry.sha256 {
            return Err(IngestError::HashMismatch { path });
        }
        let fetched_at = entry.fetched_at.unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        PageSnapshot::new(entry.url.clone(), entry.year, body, fetched_at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let snap =
            PageSnapshot::new("http://x/2010/a.html", 2010, "<p>hi</p>", Utc::now()).unwrap();
        {
            let mut corpus = Corpus::open(dir.path()).unwrap();
            corpus.store(&snap, SnapshotKind::Page).unwrap();
        }
        let corpus = Corpus::open(dir.path()).unwrap();
        assert!(corpus.contains_url("http://x/2010/a.html"));
        let entry = &corpus.entries()[0];
        assert!(dir
            .path()
            .join("2010")
            .join(format!("{}.html", entry.source_id))
            .exists());
        assert_eq!(corpus.read_snapshot(entry).unwrap().body, "<p>hi</p>");
    }

    #[test]
    fn tampered_snapshot_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let snap =
            PageSnapshot::new("http://x/2010/a.html", 2010, "<p>hi</p>", Utc::now()).unwrap();
        let mut corpus = Corpus::open(dir.path()).unwrap();
        let entry = corpus.store(&snap, SnapshotKind::Page).unwrap();
        std::fs::write(
            corpus.snapshot_path(2010, &entry.source_id),
            "<p>changed</p>",
        )
        .unwrap();
        assert!(matches!(
            corpus.read_snapshot(&entry),
            Err(IngestError::HashMismatch { .. })
        ));
    }
}
