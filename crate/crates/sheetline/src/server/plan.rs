use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sheetline_core::QuestionnaireSpec;

use super::ServerError;
use crate::construct::spec_digest;
use crate::qspec::parse_spec;

/// Experiment plan: each participant works through an ordered list of
/// questionnaires, e.g. one per study day.
///
/// ```toml
/// [participants.p01]
/// token = "k3J9x"
/// specs = ["day1/p01.toml", "day2/p01.toml"]
/// ```
///
/// Spec paths are relative to the plan file.
#[derive(Debug, Clone, Default)]
pub struct Plan {
    pub participants: BTreeMap<String, Enrollment>,
}

#[derive(Debug, Clone)]
pub struct Enrollment {
    pub token: Option<String>,
    pub specs: Vec<PlannedDocument>,
}

#[derive(Debug, Clone)]
pub struct PlannedDocument {
    pub path: PathBuf,
    /// File contents, served verbatim.
    pub document: String,
    pub digest: String,
    pub spec: QuestionnaireSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    #[serde(default)]
    participants: BTreeMap<String, RawEnrollment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnrollment {
    token: Option<String>,
    specs: Vec<PathBuf>,
}

impl Plan {
    /// Reads the plan and every spec it names; each spec must be valid.
    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServerError::Io(path.to_path_buf(), e))?;
        let raw: RawPlan =
            toml::from_str(&text).map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cache: BTreeMap<PathBuf, PlannedDocument> = BTreeMap::new();
        let mut participants = BTreeMap::new();
        for (id, e) in raw.participants {
            let mut specs = Vec::new();
            for p in e.specs {
                let full = if p.is_absolute() { p } else { base.join(p) };
                if let Some(doc) = cache.get(&full) {
                    specs.push(doc.clone());
                    continue;
                }
                let bytes = std::fs::read(&full).map_err(|e| ServerError::Io(full.clone(), e))?;
                let spec = parse_spec(&bytes).map_err(|diags| ServerError::InvalidSpec(full.clone(), diags))?;
                let doc = PlannedDocument {
                    path: full.clone(),
                    digest: spec_digest(&bytes),
                    document: String::from_utf8(bytes).expect("parse_spec accepted it as UTF-8"),
                    spec,
                };
                cache.insert(full, doc.clone());
                specs.push(doc);
            }
            participants.insert(id, Enrollment { token: e.token, specs });
        }
        Ok(Self { participants })
    }

    pub fn enrollment(&self, participant_id: &str) -> Option<&Enrollment> {
        self.participants.get(participant_id)
    }
}
