//! A multi-day study on disk plus ways to run the server over it.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sheetline::construct::spec_digest;
use sheetline::export::to_csv;
use sheetline::qspec::serialize_spec;
use reqwest::Client;
use sheetline::server::{self, AppState, Receipt, ServerConfig};
use sheetline_core::QuestionnaireSpec;
use tempfile::TempDir;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::{complete_session, random_spec, SpecShape};

pub const UI_INDEX: &str = "<!doctype html><title>ui</title>";
pub const ASSET_BYTES: &[u8] = b"not really a video";

pub struct Study {
    pub dir: TempDir,
    pub specs: Vec<QuestionnaireSpec>,
    pub documents: Vec<String>,
    pub digests: Vec<String>,
    pub participants: Vec<String>,
    pub config_path: PathBuf,
}

pub struct StudyOptions {
    pub days: usize,
    pub participants: usize,
    /// Token required for participant `p0`.
    pub token: Option<String>,
    pub max_payload_bytes: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            days: 3,
            participants: 3,
            token: None,
            max_payload_bytes: 1 << 20,
        }
    }
}

impl Study {
    pub fn new(seed: u64, opts: &StudyOptions) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for sub in ["specs", "ui", "assets", "data"] {
            std::fs::create_dir_all(root.join(sub)).unwrap();
        }
        std::fs::write(root.join("ui/index.html"), UI_INDEX).unwrap();
        std::fs::write(root.join("assets/clip.mp4"), ASSET_BYTES).unwrap();

        let shape = SpecShape {
            screens: 8,
            ..SpecShape::default()
        };
        let mut specs = Vec::new();
        let mut documents = Vec::new();
        let mut digests = Vec::new();
        for day in 0..opts.days {
            let mut spec = random_spec(&mut rng, &shape);
            spec.spec_id = format!("study-day{day}");
            spec.version = "1".into();
            let doc = serialize_spec(&spec);
            std::fs::write(root.join(format!("specs/day{day}.toml")), &doc).unwrap();
            digests.push(spec_digest(doc.as_bytes()));
            documents.push(doc);
            specs.push(spec);
        }
        let participants: Vec<String> = (0..opts.participants).map(|i| format!("p{i}")).collect();
        let day_list: Vec<String> = (0..opts.days).map(|d| format!("\"specs/day{d}.toml\"")).collect();
        let mut plan = String::new();
        for p in &participants {
            plan.push_str(&format!("[participants.{p}]\n"));
            if let (Some(t), "p0") = (&opts.token, p.as_str()) {
                plan.push_str(&format!("token = \"{t}\"\n"));
            }
            plan.push_str(&format!("specs = [{}]\n\n", day_list.join(", ")));
        }
        std::fs::write(root.join("plan.toml"), plan).unwrap();
        let config = format!(
            "listen = \"127.0.0.1:0\"\ndata_dir = \"data\"\nplan = \"plan.toml\"\nui_dir = \"ui\"\nassets_dir = \"assets\"\nmax_payload_bytes = {}\n\n[sync]\nretransmit_ms = 50\n",
            opts.max_payload_bytes
        );
        let config_path = root.join("server.toml");
        std::fs::write(&config_path, config).unwrap();
        Self {
            dir,
            specs,
            documents,
            digests,
            participants,
            config_path,
        }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root().join("data")
    }

    pub fn config(&self) -> ServerConfig {
        ServerConfig::load(&self.config_path).unwrap()
    }

    /// CSV export of a completed session of day `day`.
    pub fn completed_csv(&self, seed: u64, participant: &str, day: usize) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        to_csv(&complete_session(&mut rng, &self.specs[day], participant, seed))
    }
}

/// An in-process server on an ephemeral port.
pub struct Running {
    pub base: String,
    pub state: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    handle: JoinHandle<std::io::Result<()>>,
}

impl Running {
    pub async fn start(config: ServerConfig) -> Self {
        let state = AppState::load(config).unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel();
        let handle = tokio::spawn(server::run(listener, state.clone(), async {
            let _ = rx.await;
        }));
        Self {
            base,
            state,
            shutdown: Some(tx),
            handle,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle.await.unwrap().unwrap();
    }
}

/// `sheetline serve` as a child process; returns it with its base URL.
pub fn spawn_binary(config: &Path) -> (Child, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sheetline"))
        .arg("serve")
        .arg(config)
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let base = loop {
        let line = lines.next().expect("server exited before listening").unwrap();
        if let Some(addr) = line.strip_prefix("listening on ") {
            break addr.to_string();
        }
    };
    // keep draining so the child never blocks on a full pipe
    std::thread::spawn(move || for _ in lines {});
    (child, base)
}

/// Receipts collected by [`hammer`] with the bytes they cover.
pub type Receipts = Arc<Mutex<Vec<(Receipt, Vec<u8>)>>>;

/// Uploads in a loop against `base` until the server goes away; every
/// receipt that made it back is recorded with the bytes it covers.
pub async fn hammer(study: Arc<Study>, base: String, seed: u64, got: Receipts) {
    let c = Client::new();
    for i in 0.. {
        let p = &study.participants[(i as usize) % study.participants.len()];
        let day = (i as usize / study.participants.len()) % study.digests.len();
        let body = study.completed_csv(seed * 10_000 + i, p, day);
        let sent = c
            .post(format!("{base}/results"))
            .query(&[("participant", p.as_str()), ("spec_digest", study.digests[day].as_str())])
            .body(body.clone())
            .send()
            .await;
        let Ok(r) = sent else { return };
        let Ok(receipt) = r.json::<Receipt>().await else { return };
        got.lock().unwrap().push((receipt, body));
    }
}
