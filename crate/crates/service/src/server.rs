use std::future::Future;
use std::sync::Arc;

use krs_core::{Engine, EngineConfig, EngineError, FileStore, RulesPolicy};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::api::{router, AppState};
use crate::clock::SystemClock;
use crate::config::Config;
use crate::sessions::SessionStore;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

pub fn engine_config(config: &Config) -> EngineConfig {
    EngineConfig {
        policy: RulesPolicy {
            require_pass: config.require_pass,
        },
        timezone: config.timezone,
    }
}

/// Opens the state directory, taking its exclusive lock.
pub fn open_engine(config: &Config) -> Result<Engine, EngineError> {
    let store = FileStore::open(&config.state_dir)?;
    Engine::open(Arc::new(store), engine_config(config))
}

/// Serves until `shutdown` resolves, then writes a checkpoint.
pub async fn serve_until(
    config: Config,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let engine = Arc::new(open_engine(&config)?);
    let state = AppState::new(engine.clone(), SessionStore::new(config.session_ttl), Arc::new(SystemClock));
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    engine.checkpoint()?;
    Ok(())
}

/// Binds `config.listen` and serves until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    let listener = TcpListener::bind(&config.listen).await.map_err(|source| ServeError::Bind {
        addr: config.listen.clone(),
        source,
    })?;
    eprintln!("krs: listening on {}", listener.local_addr()?);
    serve_until(config, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
