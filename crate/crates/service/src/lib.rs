//! Interactive repair sessions over HTTP.
//!
//! Sessions are event sourced: each one is an append-only JSON-lines log in
//! the data directory, and the server rebuilds its sessions by replaying the
//! logs at startup.

pub mod api;
pub mod config;
pub mod events;
pub mod session;
pub mod store;

pub use api::{router, AppState};
pub use config::{ConfigError, ServiceConfig};
pub use events::{Event, EventKind};
pub use session::{Phase, Session, SessionError, SessionSpec, SessionView};
pub use store::Store;

/// Binds the configured port and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::open(&config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", config.port)).await?;
    axum::serve(listener, router(state)).await
}
