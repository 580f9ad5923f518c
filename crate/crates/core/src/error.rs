use std::io;
use std::net::IpAddr;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the whole laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid printer profile: {0}")]
    InvalidProfile(String),

    #[error("failed to bind {role} listener on port {port}: {source}")]
    PortBind {
        role: &'static str,
        port: u16,
        source: io::Error,
    },

    #[error("tray index {0} out of range")]
    TrayIndex(usize),

    #[error("invalid flood plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: {source}")]
    File { path: String, source: io::Error },

    #[error(
        "target {0} is neither loopback nor RFC 1918 private; refusing without an explicit ownership acknowledgement"
    )]
    TargetNotAllowed(IpAddr),

    #[error("invalid target list: {0}")]
    InvalidTargets(String),

    #[error("invalid scan export: {0}")]
    InvalidExport(String),

    #[error("invalid GDP table: {0}")]
    InvalidGdpTable(String),

    #[error("overlap {overlap} exceeds the smaller keyword count {smaller}")]
    CveOverlap { overlap: u64, smaller: u64 },

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("module failure: {0}")]
    Module(String),

    #[error("capture store: {0}")]
    Capture(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches a path to an I/O error so the message names the file.
    pub fn file(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::File {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
