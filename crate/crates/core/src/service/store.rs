use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dataset::RawRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub id: u64,
    /// UTC, RFC 3339.
    pub received_at: String,
    pub record: RawRecord,
}

struct Writer {
    file: File,
    next_id: u64,
}

/// Append-only JSON-lines record file. Appends are serialized through one
/// writer and synced to disk before returning.
pub struct RecordStore {
    path: PathBuf,
    writer: Mutex<Writer>,
}

fn read_all(path: &Path) -> Result<Vec<StoredRecord>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StoredRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: (i + 1) as u64,
            column: None,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

impl RecordStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let existing = read_all(&path)?;
        let next_id = existing.iter().map(|r| r.id).max().unwrap_or(0) + 1;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(RecordStore {
            path,
            writer: Mutex::new(Writer { file, next_id }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and returns its id.
    pub fn append(&self, record: RawRecord, received_at: String) -> Result<u64> {
        let mut w = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let stored = StoredRecord {
            id: w.next_id,
            received_at,
            record,
        };
        let mut line = serde_json::to_string(&stored)?;
        line.push('\n');
        w.file
            .write_all(line.as_bytes())
            .and_then(|_| w.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        w.next_id += 1;
        Ok(stored.id)
    }

    /// Newest first, plus the total record count.
    pub fn list(&self, limit: usize, offset: usize) -> Result<(Vec<StoredRecord>, usize)> {
        // holding the writer lock keeps a half-written line out of view
        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let mut all = read_all(&self.path)?;
        let total = all.len();
        all.reverse();
        Ok((all.into_iter().skip(offset).take(limit).collect(), total))
    }
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: &str) -> RawRecord {
        RawRecord::from_pairs([("gender", v)])
    }

    #[test]
    fn ids_count_up_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let store = RecordStore::open(&path).unwrap();
        assert_eq!(store.list(10, 0).unwrap(), (vec![], 0));
        assert_eq!(store.append(rec("Male"), now_rfc3339()).unwrap(), 1);
        assert_eq!(store.append(rec("Female"), now_rfc3339()).unwrap(), 2);
        drop(store);
        let store = RecordStore::open(&path).unwrap();
        assert_eq!(store.append(rec("Male"), now_rfc3339()).unwrap(), 3);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn pages_are_newest_first() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path().join("r.jsonl")).unwrap();
        for _ in 0..5 {
            store.append(rec("Male"), "t".into()).unwrap();
        }
        let (page, total) = store.list(2, 0).unwrap();
        assert_eq!(total, 5);
        assert_eq!(page.iter().map(|r| r.id).collect::<Vec<_>>(), [5, 4]);
        assert!(store.list(2, 9).unwrap().0.is_empty());
    }
}
