use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use super::manifest::{write_atomic, DatasetManifest, FetchStatus};
use super::PipeError;

/// A response body and its declared content type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

/// Why one URL could not be retrieved. Recorded on the record, never fatal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchFailure(pub String);

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Fetched, FetchFailure>;
}

/// Blocking HTTP(S) client.
pub struct HttpFetcher {
    agent: ureq::Agent,
    max_body_bytes: u64,
}

impl HttpFetcher {
    pub fn new() -> Self {
        HttpFetcher {
            agent: ureq::AgentBuilder::new()
                .user_agent(concat!("taxoscope/", env!("CARGO_PKG_VERSION")))
                .build(),
            max_body_bytes: 64 * 1024 * 1024,
        }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new()
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Fetched, FetchFailure> {
        let response = match self.agent.get(url).timeout(timeout).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                return Err(FetchFailure(format!("HTTP {code} {}", r.status_text())));
            }
            Err(ureq::Error::Transport(t)) => return Err(FetchFailure(format!("transport error: {t}"))),
        };
        let content_type = response.header("content-type").map(str::to_string);
        let mut body = Vec::new();
        response
            .into_reader()
            .take(self.max_body_bytes + 1)
            .read_to_end(&mut body)
            .map_err(|e| FetchFailure(format!("read error: {e}")))?;
        if body.len() as u64 > self.max_body_bytes {
            return Err(FetchFailure("response body too large".into()));
        }
        Ok(Fetched { content_type, body })
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub max_in_flight: usize,
    pub per_host_delay: Duration,
    pub timeout: Duration,
    pub output_dir: PathBuf,
    /// Also attempt records that failed in an earlier run.
    pub retry_failed: bool,
}

impl FetchOptions {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        FetchOptions {
            max_in_flight: 8,
            per_host_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            output_dir: output_dir.into(),
            retry_failed: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchReport {
    pub manifest: DatasetManifest,
    /// Number of network requests issued in this run.
    pub attempted: usize,
    pub counts: BTreeMap<FetchStatus, usize>,
}

struct Stored {
    sha256: String,
    local_path: String,
}

/// Download every pending record with at most `max_in_flight` concurrent
/// requests and at least `per_host_delay` between requests to one host.
/// Files are stored as `<sha256>.<ext>`; byte-identical bodies are stored
/// once and later records (in manifest order) are marked as duplicates.
pub fn fetch_images(
    mut manifest: DatasetManifest,
    fetcher: &dyn Fetcher,
    options: &FetchOptions,
) -> Result<FetchReport, PipeError> {
    ensure_writable(&options.output_dir)?;

    let jobs: VecDeque<usize> = manifest
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.status == FetchStatus::Pending || (options.retry_failed && r.status == FetchStatus::Failed)
        })
        .map(|(i, _)| i)
        .collect();
    let attempted = jobs.len();
    let urls: Vec<Option<String>> = manifest.records.iter().map(|r| r.url.clone()).collect();

    let mut outcomes: Vec<Option<Result<Stored, FetchFailure>>> =
        std::iter::repeat_with(|| None).take(manifest.records.len()).collect();

    if attempted > 0 {
        let queue = Mutex::new(jobs);
        let throttle = HostThrottle::new(options.per_host_delay);
        let (tx, rx) = mpsc::channel();
        let workers = options.max_in_flight.max(1).min(attempted);
        thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (queue, throttle, urls) = (&queue, &throttle, &urls);
                scope.spawn(move || loop {
                    let Some(idx) = queue.lock().expect("queue lock").pop_front() else {
                        break;
                    };
                    let outcome = fetch_one(fetcher, urls[idx].as_deref(), throttle, options);
                    if tx.send((idx, outcome)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            // single writer: only this thread touches the outcome table
            for (idx, outcome) in rx {
                outcomes[idx] = Some(outcome);
            }
        });
    }

    let mut first_by_hash: HashMap<String, String> = manifest
        .records
        .iter()
        .filter(|r| r.status == FetchStatus::Fetched)
        .filter_map(|r| Some((r.sha256.clone()?, r.image_id.clone())))
        .collect();
    for (record, outcome) in manifest.records.iter_mut().zip(outcomes) {
        match outcome {
            None => {}
            Some(Err(FetchFailure(reason))) => {
                record.status = FetchStatus::Failed;
                record.reason = Some(reason);
                record.local_path = None;
                record.sha256 = None;
                record.duplicate_of = None;
            }
            Some(Ok(stored)) => {
                record.reason = None;
                match first_by_hash.get(&stored.sha256) {
                    Some(first) => {
                        record.status = FetchStatus::Duplicate;
                        record.duplicate_of = Some(first.clone());
                    }
                    None => {
                        first_by_hash.insert(stored.sha256.clone(), record.image_id.clone());
                        record.status = FetchStatus::Fetched;
                        record.duplicate_of = None;
                    }
                }
                record.sha256 = Some(stored.sha256);
                record.local_path = Some(stored.local_path);
            }
        }
    }

    let mut counts = BTreeMap::new();
    for r in &manifest.records {
        *counts.entry(r.status).or_insert(0) += 1;
    }
    Ok(FetchReport {
        manifest,
        attempted,
        counts,
    })
}

fn ensure_writable(dir: &Path) -> Result<(), PipeError> {
    let unwritable = |source| PipeError::OutputDirUnwritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(format!(".write-probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(unwritable)?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn fetch_one(
    fetcher: &dyn Fetcher,
    url: Option<&str>,
    throttle: &HostThrottle,
    options: &FetchOptions,
) -> Result<Stored, FetchFailure> {
    let url = url.ok_or_else(|| FetchFailure("record has no url".into()))?;
    let parsed = url::Url::parse(url).map_err(|e| FetchFailure(format!("invalid url: {e}")))?;
    throttle.wait(parsed.host_str().unwrap_or(""));
    let fetched = fetcher.fetch(url, options.timeout)?;
    let ext = image_extension(fetched.content_type.as_deref(), &fetched.body)
        .ok_or_else(|| FetchFailure("not an image".into()))?;
    let sha256 = hex::encode(Sha256::digest(&fetched.body));
    let path = options.output_dir.join(format!("{sha256}.{ext}"));
    if !path.exists() {
        write_atomic(&path, &fetched.body).map_err(|e| FetchFailure(format!("could not store file: {e}")))?;
    }
    Ok(Stored {
        sha256,
        local_path: path.to_string_lossy().into_owned(),
    })
}

/// Extension for an image response; `None` when the body is not an image.
fn image_extension(content_type: Option<&str>, body: &[u8]) -> Option<String> {
    let mime = content_type
        .map(|c| c.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
        .filter(|m| !m.is_empty() && m != "application/octet-stream");
    match mime {
        Some(m) => {
            let ext: String = match m.strip_prefix("image/")? {
                "jpeg" | "jpg" | "pjpeg" => "jpg".into(),
                "svg+xml" => "svg".into(),
                "x-icon" | "vnd.microsoft.icon" => "ico".into(),
                other => other.chars().filter(char::is_ascii_alphanumeric).collect(),
            };
            (!ext.is_empty()).then_some(ext)
        }
        None => sniff_image(body).map(str::to_string),
    }
}

fn sniff_image(body: &[u8]) -> Option<&'static str> {
    if body.starts_with(&[0xFF, 0xD8, 0xFF]) {
        Some("jpg")
    } else if body.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some("png")
    } else if body.starts_with(b"GIF87a") || body.starts_with(b"GIF89a") {
        Some("gif")
    } else if body.len() >= 12 && &body[..4] == b"RIFF" && &body[8..12] == b"WEBP" {
        Some("webp")
    } else if body.starts_with(b"BM") {
        Some("bmp")
    } else {
        None
    }
}

/// Hands out request slots per host spaced at least `delay` apart.
struct HostThrottle {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    fn new(delay: Duration) -> Self {
        HostThrottle {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    fn wait(&self, host: &str) {
        if self.delay.is_zero() {
            return;
        }
        let slot = {
            let mut slots = self.next_slot.lock().expect("throttle lock");
            let now = Instant::now();
            let slot = slots.get(host).map_or(now, |&t| t.max(now));
            slots.insert(host.to_string(), slot + self.delay);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}
