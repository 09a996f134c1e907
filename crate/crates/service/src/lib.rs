//! HTTP service for the registration engine, mounted under `/api/v1`.

pub mod access;
pub mod api;
pub mod clock;
pub mod config;
pub mod error;
pub mod server;
pub mod sessions;

pub use api::{router, AppState};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::Config;
pub use error::{ApiError, WireViolation};
pub use server::{engine_config, open_engine, serve, serve_until, ServeError};
pub use sessions::{Session, SessionStore};
