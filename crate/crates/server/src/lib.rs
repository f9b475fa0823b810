//! JSON-over-HTTP service around a single corpus session.
//!
//! Every successful response is `{"snapshot_version": v, "data": ...}`;
//! failures are `{"error": {"code": ..., "message": ...}}`.

mod error;
mod routes;
mod state;

use std::net::SocketAddr;

use labelscope_core::corpus::CorpusSnapshot;
use labelscope_core::surrogate::SurrogateModel;

pub use error::{ApiError, ApiResult};
pub use routes::router;
pub use state::{projection_key, AppState, Job, JobStatus, LoadedModel, Session, SharedState, DEFAULT_WORKERS};

/// Binds `addr` and serves until the process is interrupted.
pub async fn serve(addr: SocketAddr, snapshot: CorpusSnapshot, model: Option<SurrogateModel>) -> std::io::Result<()> {
    let stats = snapshot.stats();
    let state = AppState::new(snapshot, model);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(
        version = env!("CARGO_PKG_VERSION"),
        addr = %listener.local_addr()?,
        records = stats.records,
        labels = stats.labels,
        snapshot_version = stats.version,
        "labelscope server listening"
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
