//! Batch generation of per-participant questionnaires and the manifest that
//! records how each one was made.

use std::collections::BTreeSet;
use std::fmt::Write;

use sha2::{Digest, Sha256};
use sheetline_core::construct::{instantiate, participant_seed, InvalidTemplate, TemplateSpec};
use sheetline_core::QuestionnaireSpec;
use thiserror::Error;

use crate::export::write_records;
use crate::qspec::serialize_spec;

pub const MANIFEST_HEADER: [&str; 3] = ["participant_id", "seed", "spec_digest"];

/// Lowercase hex SHA-256 of a spec document's bytes.
pub fn spec_digest(document: &[u8]) -> String {
    Sha256::digest(document).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSpec {
    pub participant_id: String,
    pub seed: u64,
    pub spec: QuestionnaireSpec,
    /// Canonical document, as written to disk and served.
    pub document: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub entries: Vec<PlannedSpec>,
}

impl Batch {
    pub fn manifest_csv(&self) -> Vec<u8> {
        write_records(
            &MANIFEST_HEADER,
            self.entries
                .iter()
                .map(|e| [e.participant_id.clone(), e.seed.to_string(), e.digest.clone()]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatchError {
    #[error("DUPLICATE_PARTICIPANT: `{0}` listed more than once")]
    DuplicateParticipant(String),
    #[error(transparent)]
    InvalidTemplate(#[from] InvalidTemplate),
}

impl BatchError {
    pub fn code(&self) -> &'static str {
        match self {
            BatchError::DuplicateParticipant(_) => "DUPLICATE_PARTICIPANT",
            BatchError::InvalidTemplate(e) => e.code(),
        }
    }
}

/// One instance per participant, seeded from `master_seed` and the id.
pub fn plan_batch<S: AsRef<str>>(
    template: &TemplateSpec,
    participant_ids: &[S],
    master_seed: u64,
) -> Result<Batch, BatchError> {
    let mut seen = BTreeSet::new();
    for id in participant_ids {
        if !seen.insert(id.as_ref()) {
            return Err(BatchError::DuplicateParticipant(id.as_ref().to_string()));
        }
    }
    let entries = participant_ids
        .iter()
        .map(|id| {
            let id = id.as_ref();
            let seed = participant_seed(master_seed, id);
            let spec = instantiate(template, id, seed)?;
            let document = serialize_spec(&spec);
            Ok(PlannedSpec {
                participant_id: id.to_string(),
                seed,
                digest: spec_digest(document.as_bytes()),
                spec,
                document,
            })
        })
        .collect::<Result<_, BatchError>>()?;
    Ok(Batch { entries })
}

/// Participant list file: one id per line; blank lines and lines starting
/// with `#` are skipped; surrounding whitespace is trimmed.
pub fn read_participants(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// File name for a participant's spec: the id with anything outside
/// `[A-Za-z0-9._-]` percent-encoded, plus `.toml`.
pub fn spec_file_name(participant_id: &str) -> String {
    let mut s = String::new();
    for b in participant_id.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_') || (b == b'.' && !s.is_empty()) {
            s.push(b as char);
        } else {
            let _ = write!(s, "%{b:02X}");
        }
    }
    s.push_str(".toml");
    s
}
