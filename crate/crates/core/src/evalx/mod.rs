//! Explainable evaluation: accuracy, sibling share of misclassifications,
//! misclassification frequency per false-positive class, relation tags, and
//! WordNet similarity averages over misclassified samples.

mod predictions;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::classmap::{ClassSet, LabelVocabulary};
use crate::datapipe::{DatasetManifest, FetchStatus};
use crate::percent::Percent;
use crate::taxo::{SimilarityTriple, TaxoError, TaxonomyIndex};
use crate::wndb::{LexicalDatabase, SynsetId};

pub use predictions::{LabelScore, PredictionRecord, PredictionSet, ScoringFailure};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Schema {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("model {model} has no prediction for {} fetched image(s): {}", image_ids.len(), image_ids.join(", "))]
    MissingPredictions { model: String, image_ids: Vec<String> },
    #[error("model {model} has more than one prediction for {image_id}")]
    DuplicatePrediction { model: String, image_id: String },
    #[error(transparent)]
    Taxonomy(#[from] TaxoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    /// Largest taxonomy distance still tagged KIN.
    pub kin_radius: u32,
    /// Rows of the misclassification table shown per class.
    pub top_m: usize,
    /// Average similarities over every sample instead of misclassified ones.
    pub include_correct: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            kin_radius: 4,
            top_m: 3,
            include_correct: false,
        }
    }
}

/// A top-1 prediction after resolving its label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredictedClass {
    Mapped(SynsetId),
    /// No wnid could be found; holds the label as given.
    Unmapped(String),
}

impl PredictedClass {
    pub fn synset(&self) -> Option<SynsetId> {
        match self {
            PredictedClass::Mapped(s) => Some(*s),
            PredictedClass::Unmapped(_) => None,
        }
    }
}

impl fmt::Display for PredictedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictedClass::Mapped(s) => write!(f, "{s}"),
            PredictedClass::Unmapped(l) => f.write_str(l),
        }
    }
}

impl Serialize for PredictedClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A label is a wnid present in the taxonomy, or a vocabulary key (name or
/// label id) whose wnid is in the taxonomy. Anything else stays unmapped.
pub fn resolve_label(label: &str, vocab: &LabelVocabulary, taxo: &TaxonomyIndex) -> PredictedClass {
    let label = label.trim();
    if let Ok(wnid) = label.parse::<SynsetId>() {
        if taxo.contains(wnid) {
            return PredictedClass::Mapped(wnid);
        }
    }
    match vocab.lookup(label) {
        Ok(entry) if taxo.contains(entry.wnid) => PredictedClass::Mapped(entry.wnid),
        _ => PredictedClass::Unmapped(label.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RelationTag {
    #[serde(rename = "EXACT")]
    Exact,
    #[serde(rename = "SIBLING")]
    Sibling,
    #[serde(rename = "HYPERNYM_1HOP")]
    Hypernym1Hop,
    #[serde(rename = "HYPONYM_1HOP")]
    Hyponym1Hop,
    #[serde(rename = "KIN")]
    Kin,
    #[serde(rename = "DISTANT")]
    Distant,
}

impl RelationTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationTag::Exact => "EXACT",
            RelationTag::Sibling => "SIBLING",
            RelationTag::Hypernym1Hop => "HYPERNYM_1HOP",
            RelationTag::Hyponym1Hop => "HYPONYM_1HOP",
            RelationTag::Kin => "KIN",
            RelationTag::Distant => "DISTANT",
        }
    }
}

impl fmt::Display for RelationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a prediction relates to the ground truth, checked in order: exact,
/// sibling, immediate hypernym, immediate hyponym, kin (subsumer inside the
/// query subtree, or distance within `kin_radius`), otherwise distant.
/// Unmapped predictions and pairs without a common ancestor are distant.
pub fn relation_tag(
    gt: SynsetId,
    predicted: &PredictedClass,
    taxo: &TaxonomyIndex,
    query: Option<SynsetId>,
    kin_radius: u32,
) -> RelationTag {
    let PredictedClass::Mapped(fp) = predicted else {
        return RelationTag::Distant;
    };
    let fp = *fp;
    if fp == gt {
        return RelationTag::Exact;
    }
    if taxo.are_siblings(gt, fp) {
        return RelationTag::Sibling;
    }
    if taxo.parents(gt).is_ok_and(|p| p.contains(&fp)) {
        return RelationTag::Hypernym1Hop;
    }
    if taxo.children(gt).is_ok_and(|c| c.contains(&fp)) {
        return RelationTag::Hyponym1Hop;
    }
    let Ok(s) = taxo.subsumption(gt, fp) else {
        return RelationTag::Distant;
    };
    let lcs_in_query = query.is_some_and(|q| taxo.is_ancestor_or_self(q, s.lcs).unwrap_or(false));
    if lcs_in_query || s.distance <= kin_radius {
        RelationTag::Kin
    } else {
        RelationTag::Distant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfRow {
    #[serde(rename = "label")]
    pub class: PredictedClass,
    pub name: String,
    pub count: usize,
    pub mf: Percent,
    pub tag: RelationTag,
    pub mapped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilarityTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBreakdown {
    pub gt_class: SynsetId,
    pub name: String,
    /// Scored images of this class.
    pub n_samples: usize,
    pub n_correct: usize,
    pub accuracy: Option<Percent>,
    /// Misclassifications into classes with a wnid.
    pub fp_counts: BTreeMap<SynsetId, usize>,
    /// Misclassifications into labels without a wnid.
    pub unmapped_counts: BTreeMap<String, usize>,
    pub unmapped_fp: usize,
    pub sibling_pct: Option<Percent>,
    /// Every false-positive class, highest frequency first.
    pub mf_table: Vec<MfRow>,
    pub knowledge: Option<SimilarityTriple>,
    /// Images the model reported it could not score.
    pub n_unscored: usize,
}

impl ClassBreakdown {
    fn new(gt_class: SynsetId, name: String) -> Self {
        ClassBreakdown {
            gt_class,
            name,
            n_samples: 0,
            n_correct: 0,
            accuracy: None,
            fp_counts: BTreeMap::new(),
            unmapped_counts: BTreeMap::new(),
            unmapped_fp: 0,
            sibling_pct: None,
            mf_table: Vec::new(),
            knowledge: None,
            n_unscored: 0,
        }
    }

    pub fn total_fp(&self) -> usize {
        self.fp_counts.values().sum::<usize>() + self.unmapped_fp
    }

    fn record(&mut self, predicted: PredictedClass) {
        self.n_samples += 1;
        match predicted {
            PredictedClass::Mapped(s) if s == self.gt_class => self.n_correct += 1,
            PredictedClass::Mapped(s) => *self.fp_counts.entry(s).or_default() += 1,
            PredictedClass::Unmapped(label) => {
                *self.unmapped_counts.entry(label).or_default() += 1;
                self.unmapped_fp += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MfEntry {
    pub class: PredictedClass,
    pub count: usize,
    pub mf: Percent,
}

/// Share of each false-positive class among all of the class's false
/// positives, mapped and unmapped alike. Sorted by descending frequency,
/// ties by wnid (unmapped labels after wnids).
pub fn misclassification_frequency(breakdown: &ClassBreakdown) -> Vec<MfEntry> {
    let total = breakdown.total_fp();
    let mut rows: Vec<MfEntry> = breakdown
        .fp_counts
        .iter()
        .map(|(s, &c)| (PredictedClass::Mapped(*s), c))
        .chain(
            breakdown
                .unmapped_counts
                .iter()
                .map(|(l, &c)| (PredictedClass::Unmapped(l.clone()), c)),
        )
        .filter_map(|(class, count)| {
            Some(MfEntry {
                mf: Percent::of(count, total)?,
                class,
                count,
            })
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.class.cmp(&b.class)));
    rows
}

/// Share of false positives whose predicted class is a sibling of the
/// ground truth; `None` without false positives.
pub fn sibling_percentage(breakdown: &ClassBreakdown, taxo: &TaxonomyIndex) -> Option<Percent> {
    let siblings: usize = breakdown
        .fp_counts
        .iter()
        .filter(|(fp, _)| taxo.are_siblings(breakdown.gt_class, **fp))
        .map(|(_, c)| c)
        .sum();
    Percent::of(siblings, breakdown.total_fp())
}

/// Mean path / LCH / WUP similarity between ground truth and prediction over
/// misclassified samples with a wnid (plus correct samples when
/// `include_correct`). `None` when no sample qualifies.
pub fn knowledge_metrics(
    breakdown: &ClassBreakdown,
    taxo: &TaxonomyIndex,
    include_correct: bool,
) -> Result<Option<SimilarityTriple>, TaxoError> {
    let mut n = 0usize;
    let mut sum = SimilarityTriple {
        path_sim: 0.0,
        lch: 0.0,
        wups: 0.0,
    };
    let mut add = |value: SimilarityTriple, count: usize| {
        let c = count as f64;
        sum.path_sim += value.path_sim * c;
        sum.lch += value.lch * c;
        sum.wups += value.wups * c;
        n += count;
    };
    if include_correct && breakdown.n_correct > 0 {
        add(taxo.similarity(breakdown.gt_class, breakdown.gt_class)?, breakdown.n_correct);
    }
    for (&fp, &count) in &breakdown.fp_counts {
        add(taxo.similarity(breakdown.gt_class, fp)?, count);
    }
    if n == 0 {
        return Ok(None);
    }
    let n = n as f64;
    Ok(Some(SimilarityTriple {
        path_sim: sum.path_sim / n,
        lch: sum.lch / n,
        wups: sum.wups / n,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Totals {
    pub n_samples: usize,
    pub n_correct: usize,
    pub accuracy: Option<Percent>,
    pub n_fp: usize,
    pub unmapped_fp: usize,
    pub n_unscored: usize,
    /// Predictions for images that are not fetched samples of the manifest.
    pub ignored_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub model_name: String,
    pub query: Option<SynsetId>,
    pub options: EvalOptions,
    pub classes: Vec<ClassBreakdown>,
    pub totals: Totals,
}

/// Read-only inputs shared by every model's evaluation.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub db: &'a LexicalDatabase,
    pub taxo: &'a TaxonomyIndex,
    /// The model's label space.
    pub vocab: &'a LabelVocabulary,
    /// Supplies class display names and the query when given.
    pub class_set: Option<&'a ClassSet>,
}

impl EvalContext<'_> {
    fn display_name(&self, synset: SynsetId) -> String {
        if let Some(m) = self.class_set.and_then(|c| c.member(synset)) {
            return m.name.clone();
        }
        if let Ok(e) = self.vocab.by_wnid(synset) {
            return e.name.clone();
        }
        self.db
            .noun(synset)
            .map_or_else(|| synset.to_string(), |s| s.display_name())
    }
}

/// Evaluate one model over the fetched images of `manifest`.
pub fn evaluate(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    model: &str,
    ctx: EvalContext<'_>,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    let samples: HashMap<&str, SynsetId> = manifest
        .records
        .iter()
        .filter(|r| r.status == FetchStatus::Fetched)
        .map(|r| (r.image_id.as_str(), r.gt_class))
        .collect();

    let mut top1: HashMap<&str, &str> = HashMap::new();
    let mut unscored: HashSet<&str> = HashSet::new();
    let mut ignored = 0usize;
    for p in predictions.records.iter().filter(|p| p.model_name == model) {
        if !samples.contains_key(p.image_id.as_str()) {
            ignored += 1;
            continue;
        }
        if top1.insert(&p.image_id, p.top1()).is_some() {
            return Err(EvalError::DuplicatePrediction {
                model: model.to_string(),
                image_id: p.image_id.clone(),
            });
        }
    }
    for f in predictions.failures.iter().filter(|f| f.model_name == model) {
        if !samples.contains_key(f.image_id.as_str()) {
            ignored += 1;
            continue;
        }
        if top1.contains_key(f.image_id.as_str()) || !unscored.insert(&f.image_id) {
            return Err(EvalError::DuplicatePrediction {
                model: model.to_string(),
                image_id: f.image_id.clone(),
            });
        }
    }

    let missing: Vec<String> = manifest
        .records
        .iter()
        .filter(|r| r.status == FetchStatus::Fetched)
        .filter(|r| !top1.contains_key(r.image_id.as_str()) && !unscored.contains(r.image_id.as_str()))
        .map(|r| r.image_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions {
            model: model.to_string(),
            image_ids: missing,
        });
    }

    let query = ctx.class_set.map(|c| c.query).or(manifest.query);
    let mut classes = Vec::with_capacity(manifest.classes.len());
    for &gt in &manifest.classes {
        ctx.taxo.node_depth(gt)?;
        let mut b = ClassBreakdown::new(gt, ctx.display_name(gt));
        for r in manifest.records_of(gt).filter(|r| r.status == FetchStatus::Fetched) {
            match top1.get(r.image_id.as_str()) {
                Some(label) => b.record(resolve_label(label, ctx.vocab, ctx.taxo)),
                None => b.n_unscored += 1,
            }
        }
        b.accuracy = Percent::of(b.n_correct, b.n_samples);
        b.sibling_pct = sibling_percentage(&b, ctx.taxo);
        b.knowledge = knowledge_metrics(&b, ctx.taxo, options.include_correct)?;
        b.mf_table = misclassification_frequency(&b)
            .into_iter()
            .map(|e| mf_row(e, gt, query, ctx, options))
            .collect::<Result<_, _>>()?;
        classes.push(b);
    }

    let sum = |f: fn(&ClassBreakdown) -> usize| classes.iter().map(f).sum::<usize>();
    let (n_samples, n_correct) = (sum(|c| c.n_samples), sum(|c| c.n_correct));
    let totals = Totals {
        n_samples,
        n_correct,
        accuracy: Percent::of(n_correct, n_samples),
        n_fp: sum(ClassBreakdown::total_fp),
        unmapped_fp: sum(|c| c.unmapped_fp),
        n_unscored: sum(|c| c.n_unscored),
        ignored_predictions: ignored,
    };
    Ok(EvalReport {
        model_name: model.to_string(),
        query,
        options,
        classes,
        totals,
    })
}

fn mf_row(
    entry: MfEntry,
    gt: SynsetId,
    query: Option<SynsetId>,
    ctx: EvalContext<'_>,
    options: EvalOptions,
) -> Result<MfRow, TaxoError> {
    let tag = relation_tag(gt, &entry.class, ctx.taxo, query, options.kin_radius);
    let (name, distance, similarity) = match &entry.class {
        PredictedClass::Mapped(fp) => {
            let s = ctx.taxo.similarity(gt, *fp)?;
            (
                ctx.display_name(*fp),
                Some(ctx.taxo.shortest_path_distance(gt, *fp)?),
                Some(s),
            )
        }
        PredictedClass::Unmapped(label) => (label.clone(), None, None),
    };
    Ok(MfRow {
        mapped: entry.class.synset().is_some(),
        class: entry.class,
        name,
        count: entry.count,
        mf: entry.mf,
        tag,
        distance,
        similarity,
    })
}

/// One report per model found in `predictions`, ordered by model name.
pub fn evaluate_all(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    ctx: EvalContext<'_>,
    options: EvalOptions,
) -> Result<Vec<EvalReport>, EvalError> {
    predictions
        .models()
        .iter()
        .map(|m| evaluate(manifest, predictions, m, ctx, options))
        .collect()
}
