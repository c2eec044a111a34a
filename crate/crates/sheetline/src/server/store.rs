//! Durable result storage.
//!
//! Layout under the data directory:
//!
//! ```text
//! progress.jsonl                                   one receipt per line
//! results/<participant>/<spec_digest>/<content_digest>.csv
//! ```
//!
//! A result file is written to a temporary name, synced, renamed into place
//! and its directory synced; only then is the receipt appended to the
//! journal and synced. The journal is the source of truth: on open, receipts
//! are replayed in order and a torn last line is ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sheetline_core::engine::Status;
use thiserror::Error;

use super::plan::Plan;
use crate::construct::{spec_digest, spec_file_name};
use crate::export::{aggregate, from_csv, ExportDocument, ExportError, WideTable};

pub const JOURNAL: &str = "progress.jsonl";
pub const RESULTS_DIR: &str = "results";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub participant_id: String,
    pub spec_digest: String,
    pub content_digest: String,
    pub received_ms: u64,
    /// Result file, relative to the data directory.
    pub path: String,
    pub progress_advanced: bool,
    /// The participant's plan index after this upload.
    pub next_index: usize,
    /// Rows the parser had to salvage.
    pub flagged_rows: usize,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("UNKNOWN_PARTICIPANT: `{0}` is not in the plan")]
    UnknownParticipant(String),
    #[error("UNKNOWN_SPEC: `{0}` is not in this participant's plan")]
    UnknownSpec(String),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("STORAGE_FAILURE: {0}")]
    Storage(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::UnknownParticipant(_) => "UNKNOWN_PARTICIPANT",
            StoreError::UnknownSpec(_) => "UNKNOWN_SPEC",
            StoreError::Export(e) => e.code(),
            StoreError::Storage(_) => "STORAGE_FAILURE",
        }
    }
}

type Key = (String, String, String);

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    journal: File,
    /// False after a failed append, which may have left a partial line.
    journal_clean: bool,
    receipts: Vec<Receipt>,
    by_key: HashMap<Key, usize>,
    progress: BTreeMap<String, usize>,
}

fn sync_dir(path: &Path) -> io::Result<()> {
    File::open(path)?.sync_all()
}

fn key(r: &Receipt) -> Key {
    (r.participant_id.clone(), r.spec_digest.clone(), r.content_digest.clone())
}

/// Directory name for a participant: the id, percent-encoded like spec
/// file names.
pub fn participant_dir(participant_id: &str) -> String {
    let mut name = spec_file_name(participant_id);
    name.truncate(name.len() - ".toml".len());
    name
}

/// Every session in the document ended with status completed.
pub fn is_completed(doc: &ExportDocument) -> bool {
    let sessions = doc.sessions();
    !sessions.is_empty() && sessions.iter().all(|s| s.status == Some(Status::Completed))
}

impl Store {
    pub fn open(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root.join(RESULTS_DIR))?;
        let mut journal = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(root.join(JOURNAL))?;
        let mut text = Vec::new();
        journal.read_to_end(&mut text)?;
        let mut store = Self {
            root: root.to_path_buf(),
            journal,
            journal_clean: true,
            receipts: Vec::new(),
            by_key: HashMap::new(),
            progress: BTreeMap::new(),
        };
        for line in text.split(|&b| b == b'\n') {
            match serde_json::from_slice::<Receipt>(line) {
                Ok(r) if !store.by_key.contains_key(&key(&r)) => store.remember(r),
                _ => {}
            }
        }
        if text.last().is_some_and(|&b| b != b'\n') {
            store.journal.seek(SeekFrom::End(0))?;
            store.journal.write_all(b"\n")?;
            store.journal.sync_data()?;
        }
        Ok(store)
    }

    fn remember(&mut self, r: Receipt) {
        if r.progress_advanced {
            *self.progress.entry(r.participant_id.clone()).or_default() += 1;
        }
        self.by_key.insert(key(&r), self.receipts.len());
        self.receipts.push(r);
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Number of completed uploads that advanced the participant's plan.
    pub fn next_index(&self, participant_id: &str) -> usize {
        self.progress.get(participant_id).copied().unwrap_or(0)
    }

    pub fn receipts(&self) -> &[Receipt] {
        &self.receipts
    }

    pub fn receipts_of<'a>(&'a self, participant_id: &'a str) -> impl Iterator<Item = &'a Receipt> + 'a {
        self.receipts.iter().filter(move |r| r.participant_id == participant_id)
    }

    /// Stores an upload unless an identical one was stored before, in which
    /// case the original receipt is returned. The plan advances when the
    /// upload is for the participant's current plan entry and every session
    /// in it is completed.
    pub fn accept(
        &mut self,
        plan: &Plan,
        participant_id: &str,
        spec: &str,
        body: &[u8],
        received_ms: u64,
    ) -> Result<Receipt, StoreError> {
        let enrollment = plan
            .enrollment(participant_id)
            .ok_or_else(|| StoreError::UnknownParticipant(participant_id.to_string()))?;
        if !enrollment.specs.iter().any(|d| d.digest == spec) {
            return Err(StoreError::UnknownSpec(spec.to_string()));
        }
        let doc = from_csv(body)?;
        let content_digest = spec_digest(body);
        let k = (participant_id.to_string(), spec.to_string(), content_digest.clone());
        if let Some(&i) = self.by_key.get(&k) {
            return Ok(self.receipts[i].clone());
        }

        let index = self.next_index(participant_id);
        let advances = enrollment.specs.get(index).is_some_and(|d| d.digest == spec) && is_completed(&doc);
        let dir = Path::new(RESULTS_DIR)
            .join(participant_dir(participant_id))
            .join(spec);
        let rel = dir.join(format!("{content_digest}.csv"));
        self.write_file(&dir, &rel, body)?;

        let receipt = Receipt {
            participant_id: participant_id.to_string(),
            spec_digest: spec.to_string(),
            content_digest,
            received_ms,
            path: rel.to_string_lossy().replace('\\', "/"),
            progress_advanced: advances,
            next_index: index + usize::from(advances),
            flagged_rows: doc.issues.len(),
        };
        let mut line = if self.journal_clean { Vec::new() } else { vec![b'\n'] };
        serde_json::to_writer(&mut line, &receipt).expect("receipt serializes");
        line.push(b'\n');
        self.journal_clean = false;
        self.journal.write_all(&line)?;
        self.journal.sync_data()?;
        self.journal_clean = true;
        self.remember(receipt.clone());
        Ok(receipt)
    }

    fn write_file(&self, dir: &Path, rel: &Path, body: &[u8]) -> io::Result<()> {
        let dir = self.root.join(dir);
        fs::create_dir_all(&dir)?;
        let target = self.root.join(rel);
        let tmp = target.with_extension("csv.tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        sync_dir(&dir)
    }

    pub fn read(&self, r: &Receipt) -> io::Result<Vec<u8>> {
        fs::read(self.root.join(&r.path))
    }

    /// Stored result files, optionally only those for one spec digest.
    pub fn result_paths(&self, spec: Option<&str>) -> Vec<PathBuf> {
        self.receipts
            .iter()
            .filter(|r| spec.is_none_or(|s| r.spec_digest == s))
            .map(|r| self.root.join(&r.path))
            .collect()
    }

    /// Wide table over the stored results.
    pub fn aggregate(&self, spec: Option<&str>) -> Result<WideTable, StoreError> {
        let mut docs = Vec::new();
        for p in self.result_paths(spec) {
            docs.push(from_csv(&fs::read(p)?)?);
        }
        Ok(aggregate(&docs)?)
    }
}
