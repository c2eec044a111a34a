//! Collection server: hands each participant the next questionnaire of
//! their plan, stores uploaded results and relays sync messages.
//!
//! | method | path | purpose |
//! |---|---|---|
//! | GET | `/questionnaire?participant=&token=` | next spec of the plan, or 409 when done |
//! | POST | `/results?participant=&spec_digest=&token=` | upload a CSV export, returns a receipt |
//! | GET | `/results[?participant=]` | receipts |
//! | GET | `/export.csv[?spec_digest=]` | wide table over stored results |
//! | GET | `/sync/<group>` | WebSocket, one sync message per text frame |
//! | GET | `/app/...`, `/assets/...` | UI bundle and stimuli |
//!
//! Errors are JSON objects `{"error": CODE, "message": ...}`.

mod config;
mod http;
mod hub;
mod plan;
mod store;

use std::future::Future;
use std::io;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use sheetline_core::Diagnostic;
use thiserror::Error;
use tokio::net::TcpListener;

pub use config::{ServerConfig, DEFAULT_LISTEN, DEFAULT_MAX_PAYLOAD_BYTES};
pub use http::router;
pub use hub::Hub;
pub use plan::{Enrollment, Plan, PlannedDocument};
pub use store::{is_completed, participant_dir, Receipt, Store, StoreError, JOURNAL, RESULTS_DIR};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, #[source] io::Error),
    #[error("{}: invalid spec ({} diagnostics)", .0.display(), .1.len())]
    InvalidSpec(PathBuf, Vec<Diagnostic>),
}

pub(crate) struct Inner {
    pub config: ServerConfig,
    pub plan: Plan,
    pub store: Mutex<Store>,
    pub hub: Hub,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    /// Loads the plan and opens the data directory.
    pub fn load(config: ServerConfig) -> Result<Self, ServerError> {
        let plan = Plan::load(&config.plan)?;
        let store = Store::open(&config.data_dir).map_err(|e| ServerError::Io(config.data_dir.clone(), e))?;
        let hub = Hub::new(config.sync_groups.clone());
        Ok(Self(Arc::new(Inner {
            config,
            plan,
            store: Mutex::new(store),
            hub,
        })))
    }

    pub fn config(&self) -> &ServerConfig {
        &self.0.config
    }

    pub fn plan(&self) -> &Plan {
        &self.0.plan
    }

    pub fn hub(&self) -> &Hub {
        &self.0.hub
    }

    pub fn with_store<T>(&self, f: impl FnOnce(&mut Store) -> T) -> T {
        let mut guard = self.0.store.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    }
}

/// Serves until `shutdown` resolves, then lets open requests finish.
pub async fn run(listener: TcpListener, state: AppState, shutdown: impl Future<Output = ()> + Send + 'static) -> io::Result<()> {
    let period = std::time::Duration::from_millis(state.config().sync_retransmit_ms);
    let ticker = tokio::spawn(hub::retransmit_loop(state.clone(), period));
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    ticker.abort();
    result
}
