//! Knowledge-driven evaluation of image classifiers over the WordNet noun
//! taxonomy: database loading, taxonomy similarity, class-set construction,
//! dataset ingestion and the explainable evaluation engine.

pub mod classmap;
pub mod datapipe;
pub mod evalx;
pub mod percent;
pub mod taxo;
pub mod wndb;

#[cfg(test)]
mod testdb;

pub use wndb::{LexicalDatabase, PartOfSpeech, Synset, SynsetId, WnError};
pub use taxo::{SimilarityTriple, TaxoError, TaxonomyIndex, TaxonomyOptions};
pub use classmap::{build_class_set, ClassMapError, ClassMember, ClassSet, LabelVocabulary, VocabEntry};
pub use evalx::{evaluate, evaluate_all, EvalContext, EvalError, EvalOptions, EvalReport, PredictionSet, RelationTag};
pub use percent::Percent;
