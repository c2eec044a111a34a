use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::ServerError;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_PAYLOAD_BYTES: usize = 16 * 1024 * 1024;
pub const DEFAULT_RETRANSMIT_MS: u64 = 1000;

/// Server settings. Relative paths in a config file are resolved against
/// the file's directory.
///
/// ```toml
/// listen = "0.0.0.0:8080"
/// data_dir = "data"
/// plan = "plan.toml"
/// max_payload_bytes = 16777216
/// ui_dir = "webui/dist"
/// assets_dir = "stimuli"
/// researcher_token = "change-me"
///
/// [sync]
/// retransmit_ms = 1000
/// groups = { lab = ["tablet", "phone"] }
/// ```
///
/// `SHEETLINE_LISTEN`, `SHEETLINE_DATA_DIR` and `SHEETLINE_MAX_PAYLOAD_BYTES`
/// override the file.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub plan: PathBuf,
    pub max_payload_bytes: usize,
    pub ui_dir: Option<PathBuf>,
    pub assets_dir: Option<PathBuf>,
    /// Required as `token` on the researcher endpoints when set.
    pub researcher_token: Option<String>,
    pub sync_retransmit_ms: u64,
    /// Sync groups with a fixed roster; other groups admit any device.
    pub sync_groups: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    listen: Option<String>,
    data_dir: PathBuf,
    plan: PathBuf,
    max_payload_bytes: Option<usize>,
    ui_dir: Option<PathBuf>,
    assets_dir: Option<PathBuf>,
    researcher_token: Option<String>,
    #[serde(default)]
    sync: RawSync,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSync {
    retransmit_ms: Option<u64>,
    #[serde(default)]
    groups: BTreeMap<String, Vec<String>>,
}

fn parse_listen(s: &str) -> Result<SocketAddr, ServerError> {
    s.parse()
        .map_err(|_| ServerError::Config(format!("listen address `{s}` is not host:port")))
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>, plan: impl Into<PathBuf>) -> Self {
        Self {
            listen: DEFAULT_LISTEN.parse().expect("valid default"),
            data_dir: data_dir.into(),
            plan: plan.into(),
            max_payload_bytes: DEFAULT_MAX_PAYLOAD_BYTES,
            ui_dir: None,
            assets_dir: None,
            researcher_token: None,
            sync_retransmit_ms: DEFAULT_RETRANSMIT_MS,
            sync_groups: BTreeMap::new(),
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ServerError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ServerError::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let mut cfg = Self::new(resolve(raw.data_dir), resolve(raw.plan));
        if let Some(l) = raw.listen {
            cfg.listen = parse_listen(&l)?;
        }
        if let Some(m) = raw.max_payload_bytes {
            cfg.max_payload_bytes = m;
        }
        cfg.ui_dir = raw.ui_dir.map(resolve);
        cfg.assets_dir = raw.assets_dir.map(resolve);
        cfg.researcher_token = raw.researcher_token;
        if let Some(r) = raw.sync.retransmit_ms {
            cfg.sync_retransmit_ms = r.max(1);
        }
        cfg.sync_groups = raw.sync.groups;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServerError::Io(path.to_path_buf(), e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::from_toml(&text, base)?;
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ServerError> {
        if let Some(l) = var("SHEETLINE_LISTEN") {
            self.listen = parse_listen(&l)?;
        }
        if let Some(d) = var("SHEETLINE_DATA_DIR") {
            self.data_dir = d.into();
        }
        if let Some(m) = var("SHEETLINE_MAX_PAYLOAD_BYTES") {
            self.max_payload_bytes = m
                .parse()
                .map_err(|_| ServerError::Config(format!("SHEETLINE_MAX_PAYLOAD_BYTES `{m}` is not a number")))?;
        }
        Ok(())
    }
}
