//! The labeled image collection: URL-list ingestion, fetching with
//! content-hash deduplication, and per-class balancing.

mod balance;
mod fetch;
mod manifest;

use std::path::PathBuf;

use thiserror::Error;

use crate::wndb::SynsetId;

pub use balance::{balance, BalanceConfig, DEFAULT_THRESHOLD};
pub use fetch::{
    fetch_images, FetchFailure, FetchOptions, FetchReport, Fetched, Fetcher, HttpFetcher,
};
pub use manifest::{ingest_url_dir, ingest_url_lists, write_atomic, DatasetManifest, FetchStatus, ImageRecord};

#[derive(Debug, Error)]
pub enum PipeError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("URL list {path} is for {wnid}, which is not in the class set")]
    UnknownClass { wnid: SynsetId, path: PathBuf },
    #[error("URL list {0} is not named <wnid>.txt")]
    BadListName(PathBuf),
    #[error("duplicate image id {0:?}")]
    DuplicateImageId(String),
    #[error("output directory {path} is not writable: {source}")]
    OutputDirUnwritable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("per-class threshold must be at least 1")]
    ZeroThreshold,
}

/// Non-fatal conditions surfaced to the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipeWarning {
    EmptyList(SynsetId),
    MissingList(SynsetId),
    BelowThreshold { class: SynsetId, kept: usize, threshold: u32 },
}

impl std::fmt::Display for PipeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipeWarning::EmptyList(w) => write!(f, "URL list for {w} is empty"),
            PipeWarning::MissingList(w) => write!(f, "no URL list for class {w}"),
            PipeWarning::BelowThreshold { class, kept, threshold } => {
                write!(f, "class {class} keeps {kept} images, fewer than the threshold {threshold}")
            }
        }
    }
}
