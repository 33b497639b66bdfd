use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::SystemTime;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{PipeError, PipeWarning};
use crate::classmap::ClassSet;
use crate::wndb::SynsetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchStatus {
    Pending,
    Fetched,
    Failed,
    /// Fetched, but byte-identical to an earlier record.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub gt_class: SynsetId,
    pub crawl_rank: u32,
    pub url: Option<String>,
    pub local_path: Option<String>,
    pub sha256: Option<String>,
    pub status: FetchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

impl ImageRecord {
    pub fn pending(gt_class: SynsetId, crawl_rank: u32, url: impl Into<String>) -> Self {
        ImageRecord {
            image_id: format!("{gt_class}-{crawl_rank:04}"),
            gt_class,
            crawl_rank,
            url: Some(url.into()),
            local_path: None,
            sha256: None,
            status: FetchStatus::Pending,
            reason: None,
            duplicate_of: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestMeta {
    query: Option<SynsetId>,
    classes: Vec<SynsetId>,
    created_at: String,
}

/// The image collection. On disk: one JSON record per line, plus a
/// `<file>.meta.json` sidecar holding the class list and creation time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub query: Option<SynsetId>,
    /// Every class of the originating class set, sorted.
    pub classes: Vec<SynsetId>,
    pub created_at: String,
    /// Ordered by `(gt_class, crawl_rank)`.
    pub records: Vec<ImageRecord>,
}

impl DatasetManifest {
    pub fn new(query: Option<SynsetId>, classes: impl IntoIterator<Item = SynsetId>, created_at: String) -> Self {
        let classes: BTreeSet<SynsetId> = classes.into_iter().collect();
        DatasetManifest {
            query,
            classes: classes.into_iter().collect(),
            created_at,
            records: Vec::new(),
        }
    }

    pub fn sort_records(&mut self) {
        self.records.sort_by_key(|r| (r.gt_class, r.crawl_rank));
    }

    pub fn count(&self, status: FetchStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn records_of(&self, class: SynsetId) -> impl Iterator<Item = &ImageRecord> + '_ {
        self.records.iter().filter(move |r| r.gt_class == class)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, path: &Path) -> Result<Vec<ImageRecord>, PipeError> {
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ImageRecord = serde_json::from_str(line).map_err(|e| PipeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if !seen.insert(record.image_id.clone()) {
                return Err(PipeError::DuplicateImageId(record.image_id));
            }
            records.push(record);
        }
        Ok(records)
    }

    pub fn meta_path(path: &Path) -> PathBuf {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        path.with_file_name(name)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipeError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let records = Self::from_jsonl(&text, path)?;
        let meta_path = Self::meta_path(path);
        let meta = match fs::read_to_string(&meta_path) {
            Ok(t) => serde_json::from_str::<ManifestMeta>(&t).map_err(|e| PipeError::Parse {
                path: meta_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?,
            Err(_) => ManifestMeta {
                query: None,
                classes: Vec::new(),
                created_at: String::new(),
            },
        };
        let mut manifest = DatasetManifest::new(
            meta.query,
            meta.classes.into_iter().chain(records.iter().map(|r| r.gt_class)),
            meta.created_at,
        );
        manifest.records = records;
        manifest.sort_records();
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), PipeError> {
        let path = path.as_ref();
        write_atomic(path, self.to_jsonl().as_bytes())?;
        let meta = ManifestMeta {
            query: self.query,
            classes: self.classes.clone(),
            created_at: self.created_at.clone(),
        };
        let mut meta_text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
        meta_text.push('\n');
        write_atomic(&Self::meta_path(path), meta_text.as_bytes())
    }
}

/// Write through a temporary sibling file and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipeError> {
    let io_err = |source| PipeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    tmp_name.push(format!(".tmp{}-{n}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Build a manifest of pending records from per-class URL lists given as
/// `(class, path)` pairs. `crawl_rank` is the 1-based position among the
/// URL lines; blank lines and `#` comments are skipped and not counted.
pub fn ingest_url_lists(
    class_set: &ClassSet,
    lists: &[(SynsetId, PathBuf)],
) -> Result<(DatasetManifest, Vec<PipeWarning>), PipeError> {
    let mut warnings = Vec::new();
    let mut newest: Option<SystemTime> = None;
    let mut manifest = DatasetManifest::new(Some(class_set.query), class_set.wnids(), String::new());
    for (wnid, path) in lists {
        if !class_set.contains(*wnid) {
            return Err(PipeError::UnknownClass {
                wnid: *wnid,
                path: path.clone(),
            });
        }
        let io_err = |source| PipeError::Io {
            path: path.clone(),
            source,
        };
        let text = fs::read_to_string(path).map_err(io_err)?;
        if let Ok(modified) = fs::metadata(path).and_then(|m| m.modified()) {
            newest = Some(newest.map_or(modified, |n| n.max(modified)));
        }
        let before = manifest.records.len();
        let urls = text.lines().map(str::trim).filter(|u| !u.is_empty() && !u.starts_with('#'));
        for (i, url) in urls.enumerate() {
            manifest.records.push(ImageRecord::pending(*wnid, (i + 1) as u32, url));
        }
        if manifest.records.len() == before {
            warnings.push(PipeWarning::EmptyList(*wnid));
        }
    }
    for class in class_set.wnids() {
        if !lists.iter().any(|(w, _)| *w == class) {
            warnings.push(PipeWarning::MissingList(class));
        }
    }
    // Derived from the inputs so that re-ingesting unchanged lists is byte-identical.
    manifest.created_at = newest
        .map(|t| DateTime::<Utc>::from(t).to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_default();
    manifest.sort_records();
    let mut ids = HashSet::new();
    for r in &manifest.records {
        if !ids.insert(&r.image_id) {
            return Err(PipeError::DuplicateImageId(r.image_id.clone()));
        }
    }
    Ok((manifest, warnings))
}

/// Ingest every `<wnid>.txt` file in `dir`.
pub fn ingest_url_dir(class_set: &ClassSet, dir: &Path) -> Result<(DatasetManifest, Vec<PipeWarning>), PipeError> {
    let entries = fs::read_dir(dir).map_err(|source| PipeError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut lists = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| PipeError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let wnid = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<SynsetId>().ok())
            .ok_or_else(|| PipeError::BadListName(path.clone()))?;
        lists.push((wnid, path));
    }
    lists.sort();
    ingest_url_lists(class_set, &lists)
}
