use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use labelscope_core::corpus::CorpusSnapshot;
use labelscope_core::projector::{Projection, ProjectionConfig};
use labelscope_core::relabel::RelabelHistory;
use labelscope_core::surrogate::{EvalMetrics, SurrogateModel};
use serde::Serialize;
use serde_json::Value;
use tokio::sync::Semaphore;

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub id: String,
    pub model: Arc<SurrogateModel>,
    pub metrics: Option<EvalMetrics>,
    pub warnings: Vec<String>,
}

pub struct Session {
    pub history: RelabelHistory,
    pub model: Option<LoadedModel>,
    pub projections: HashMap<String, Arc<Projection>>,
    models_trained: u64,
}

impl Session {
    pub fn snapshot(&self) -> &CorpusSnapshot {
        self.history.head()
    }

    pub fn version(&self) -> u64 {
        self.history.head_version()
    }

    pub fn install_model(&mut self, model: SurrogateModel, metrics: Option<EvalMetrics>, warnings: Vec<String>) -> String {
        self.models_trained += 1;
        let id = format!("m{}-v{}", self.models_trained, model.trained_on_version);
        self.model = Some(LoadedModel {
            id: id.clone(),
            model: Arc::new(model),
            metrics,
            warnings,
        });
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub id: u64,
    pub kind: &'static str,
    pub status: JobStatus,
    /// Snapshot version the job was started against.
    pub snapshot_version: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

#[derive(Default)]
pub struct Jobs {
    next: u64,
    table: HashMap<u64, Job>,
}

impl Jobs {
    pub fn create(&mut self, kind: &'static str, snapshot_version: u64) -> u64 {
        self.next += 1;
        let id = self.next;
        self.table.insert(
            id,
            Job {
                id,
                kind,
                status: JobStatus::Queued,
                snapshot_version,
                result: None,
                error: None,
            },
        );
        id
    }

    pub fn get(&self, id: u64) -> Option<&Job> {
        self.table.get(&id)
    }

    pub fn update(&mut self, id: u64, f: impl FnOnce(&mut Job)) {
        if let Some(j) = self.table.get_mut(&id) {
            f(j);
        }
    }
}

pub struct AppState {
    pub session: RwLock<Session>,
    pub jobs: Mutex<Jobs>,
    pub workers: Semaphore,
}

pub type SharedState = Arc<AppState>;

pub const DEFAULT_WORKERS: usize = 2;

impl AppState {
    pub fn new(snapshot: CorpusSnapshot, model: Option<SurrogateModel>) -> SharedState {
        let mut session = Session {
            history: RelabelHistory::new(snapshot),
            model: None,
            projections: HashMap::new(),
            models_trained: 0,
        };
        if let Some(m) = model {
            session.install_model(m, None, Vec::new());
        }
        Arc::new(AppState {
            session: RwLock::new(session),
            jobs: Mutex::new(Jobs::default()),
            workers: Semaphore::new(DEFAULT_WORKERS),
        })
    }

    pub fn read(&self) -> std::sync::RwLockReadGuard<'_, Session> {
        self.session.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> std::sync::RwLockWriteGuard<'_, Session> {
        self.session.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn jobs(&self) -> std::sync::MutexGuard<'_, Jobs> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// FNV-1a, for short stable cache keys.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn projection_key(version: u64, model_id: Option<&str>, config: &ProjectionConfig) -> String {
    let cfg = serde_json::to_string(config).expect("config serializes");
    let model = model_id.unwrap_or("none");
    format!("v{version}-{model}-{:016x}", fnv1a(cfg.as_bytes()))
}
