use super::manifest::{DatasetManifest, FetchStatus};
use super::{PipeError, PipeWarning};

pub const DEFAULT_THRESHOLD: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceConfig {
    per_class_threshold: u32,
    /// Replace failed or duplicate records in the top-k window with fetched
    /// records from deeper crawl ranks.
    pub backfill: bool,
}

impl BalanceConfig {
    pub fn new(per_class_threshold: u32) -> Result<Self, PipeError> {
        if per_class_threshold == 0 {
            return Err(PipeError::ZeroThreshold);
        }
        Ok(BalanceConfig {
            per_class_threshold,
            backfill: false,
        })
    }

    pub fn with_backfill(mut self, backfill: bool) -> Self {
        self.backfill = backfill;
        self
    }

    pub fn threshold(&self) -> u32 {
        self.per_class_threshold
    }
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            per_class_threshold: DEFAULT_THRESHOLD,
            backfill: false,
        }
    }
}

/// Keep at most `k` fetched records per class, taken in crawl-rank order.
///
/// Without backfill only the first `k` records of each class (whatever their
/// status) are eligible, so a failed download shrinks the class instead of
/// pulling in a lower-ranked result. Either way the kept records are a
/// rank-prefix of the class's fetched records. Classes left with fewer than
/// `k` records produce a warning.
pub fn balance(manifest: &DatasetManifest, config: BalanceConfig) -> (DatasetManifest, Vec<PipeWarning>) {
    let k = config.per_class_threshold as usize;
    let mut out = DatasetManifest {
        records: Vec::with_capacity(manifest.records.len().min(k * manifest.classes.len().max(1))),
        ..manifest.clone()
    };
    let mut warnings = Vec::new();
    for &class in &manifest.classes {
        let mut ranked: Vec<_> = manifest.records_of(class).collect();
        ranked.sort_by_key(|r| r.crawl_rank);
        if !config.backfill {
            ranked.truncate(k);
        }
        let kept: Vec<_> = ranked
            .into_iter()
            .filter(|r| r.status == FetchStatus::Fetched)
            .take(k)
            .cloned()
            .collect();
        if kept.len() < k {
            warnings.push(PipeWarning::BelowThreshold {
                class,
                kept: kept.len(),
                threshold: config.per_class_threshold,
            });
        }
        out.records.extend(kept);
    }
    out.sort_records();
    (out, warnings)
}
