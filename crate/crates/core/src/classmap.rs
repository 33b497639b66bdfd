//! Classifier label vocabularies and the query-driven fine-grained class set.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxo::{TaxoError, TaxonomyIndex};
use crate::wndb::{normalize_lemma, LexicalDatabase, SynsetId, WnError};

#[derive(Debug, Error)]
pub enum ClassMapError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("label id {label_id} appears more than once (line {line})")]
    DuplicateLabelId { label_id: u32, line: usize },
    #[error("wnid {wnid} appears more than once (line {line})")]
    DuplicateWnid { wnid: SynsetId, line: usize },
    #[error("{0:?} is not in the vocabulary")]
    Unmapped(String),
    #[error("label name {name:?} matches {count} vocabulary entries")]
    AmbiguousName { name: String, count: usize },
    #[error(transparent)]
    Lexical(#[from] WnError),
    #[error(transparent)]
    Taxonomy(#[from] TaxoError),
}

pub type Result<T, E = ClassMapError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub label_id: u32,
    pub wnid: SynsetId,
    pub name: String,
}

/// A classifier's label space: `label_id<TAB>wnid<TAB>name` per line.
#[derive(Debug, Clone, Default)]
pub struct LabelVocabulary {
    entries: Vec<VocabEntry>,
    by_id: HashMap<u32, usize>,
    by_wnid: HashMap<SynsetId, usize>,
    by_name: HashMap<String, Vec<usize>>,
    unresolved: Vec<SynsetId>,
}

impl LabelVocabulary {
    /// Parse and check every wnid against `db`. Wnids missing from the
    /// database are kept and listed by [`LabelVocabulary::unresolved`].
    pub fn load(path: impl AsRef<Path>, db: &LexicalDatabase) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ClassMapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut vocab = Self::parse(&text, &path.display().to_string())?;
        vocab.resolve_against(db);
        Ok(vocab)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut vocab = LabelVocabulary::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim_end_matches('\r');
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| ClassMapError::Parse {
                source_name: source_name.to_string(),
                line: lineno,
                message,
            };
            let mut fields = line.splitn(3, '\t');
            let (Some(id), Some(wnid), Some(name)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err("expected label_id<TAB>wnid<TAB>name".into()));
            };
            let label_id: u32 = id.trim().parse().map_err(|_| parse_err(format!("bad label id {id:?}")))?;
            let wnid: SynsetId = wnid.trim().parse().map_err(|e: WnError| parse_err(e.to_string()))?;
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(parse_err("empty label name".into()));
            }
            let idx = vocab.entries.len();
            if vocab.by_id.insert(label_id, idx).is_some() {
                return Err(ClassMapError::DuplicateLabelId { label_id, line: lineno });
            }
            if vocab.by_wnid.insert(wnid, idx).is_some() {
                return Err(ClassMapError::DuplicateWnid { wnid, line: lineno });
            }
            vocab.by_name.entry(normalize_lemma(&name)).or_default().push(idx);
            vocab.entries.push(VocabEntry { label_id, wnid, name });
        }
        Ok(vocab)
    }

    fn resolve_against(&mut self, db: &LexicalDatabase) {
        self.unresolved = self
            .entries
            .iter()
            .filter(|e| !matches!(db.synset(e.wnid), Ok(Some(_))))
            .map(|e| e.wnid)
            .collect();
        for wnid in &self.unresolved {
            log::warn!("vocabulary wnid {wnid} is not in the lexical database");
        }
    }

    pub fn unresolved(&self) -> &[SynsetId] {
        &self.unresolved
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn by_label_id(&self, label_id: u32) -> Result<&VocabEntry> {
        self.by_id
            .get(&label_id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| ClassMapError::Unmapped(label_id.to_string()))
    }

    pub fn by_wnid(&self, wnid: SynsetId) -> Result<&VocabEntry> {
        self.by_wnid
            .get(&wnid)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| ClassMapError::Unmapped(wnid.to_string()))
    }

    /// Exact match after case-folding and joining words with underscores.
    pub fn by_name(&self, name: &str) -> Result<&VocabEntry> {
        let key = normalize_lemma(name);
        match self.by_name.get(&key).map(Vec::as_slice) {
            None | Some([]) => Err(ClassMapError::Unmapped(name.to_string())),
            Some([i]) => Ok(&self.entries[*i]),
            Some(many) => Err(ClassMapError::AmbiguousName {
                name: name.to_string(),
                count: many.len(),
            }),
        }
    }

    /// Resolve any of the three keys: a wnid, a numeric label id, or a name.
    pub fn lookup(&self, key: &str) -> Result<&VocabEntry> {
        let key = key.trim();
        if let Ok(wnid) = key.parse::<SynsetId>() {
            return self.by_wnid(wnid);
        }
        if let Ok(id) = key.parse::<u32>() {
            return self.by_label_id(id);
        }
        self.by_name(key)
    }

    pub fn synset_of(&self, key: &str) -> Result<SynsetId> {
        self.lookup(key).map(|e| e.wnid)
    }

    pub fn label_of(&self, synset: SynsetId) -> Result<&VocabEntry> {
        self.by_wnid(synset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMember {
    pub synset: SynsetId,
    pub label_id: u32,
    pub name: String,
    /// Hyponym hops from the query; 0 for the query itself.
    pub hops: u32,
}

/// The query concept and its vocabulary-filtered descendants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    pub query: SynsetId,
    pub traversal_depth: Option<u32>,
    /// Ordered by wnid.
    pub members: Vec<ClassMember>,
}

impl ClassSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, wnid: SynsetId) -> bool {
        self.member(wnid).is_some()
    }

    pub fn member(&self, wnid: SynsetId) -> Option<&ClassMember> {
        self.members
            .binary_search_by(|m| m.synset.cmp(&wnid))
            .ok()
            .map(|i| &self.members[i])
    }

    pub fn wnids(&self) -> impl Iterator<Item = SynsetId> + '_ {
        self.members.iter().map(|m| m.synset)
    }

    /// Class-set file: the vocabulary format, preceded by `#` metadata lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# query\t{}", self.query);
        let depth = self.traversal_depth.map_or("unbounded".to_string(), |d| d.to_string());
        let _ = writeln!(out, "# traversal_depth\t{depth}");
        for m in &self.members {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", m.label_id, m.synset, m.name, m.hops);
        }
        out
    }

    pub fn from_tsv(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| ClassMapError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut query = None;
        let mut traversal_depth = None;
        let mut members = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(meta) = line.strip_prefix("# ") {
                match meta.split_once('\t') {
                    Some(("query", v)) => {
                        query = Some(v.trim().parse().map_err(|e: WnError| parse_err(lineno, e.to_string()))?);
                    }
                    Some(("traversal_depth", "unbounded")) => traversal_depth = None,
                    Some(("traversal_depth", v)) => {
                        traversal_depth = Some(v.trim().parse().map_err(|_| parse_err(lineno, format!("bad depth {v:?}")))?);
                    }
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, wnid, name, hops] = fields[..] else {
                return Err(parse_err(lineno, "expected label_id<TAB>wnid<TAB>name<TAB>hops".into()));
            };
            members.push(ClassMember {
                label_id: id.parse().map_err(|_| parse_err(lineno, format!("bad label id {id:?}")))?,
                synset: wnid.parse().map_err(|e: WnError| parse_err(lineno, e.to_string()))?,
                name: name.to_string(),
                hops: hops.parse().map_err(|_| parse_err(lineno, format!("bad hop count {hops:?}")))?,
            });
        }
        let query = query.ok_or_else(|| parse_err(1, "missing `# query` header".into()))?;
        members.sort_by_key(|m| m.synset);
        Ok(ClassSet {
            query,
            traversal_depth,
            members,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ClassMapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(&text, &path.display().to_string())
    }
}

/// Descendants of `query` (a wnid, `lemma.n.N`, or a bare lemma meaning its
/// first noun sense) within `traversal_depth` hyponym hops, kept when their
/// wnid is in `vocab`. The query itself is a member when it is in `vocab`.
pub fn build_class_set(
    db: &LexicalDatabase,
    taxo: &TaxonomyIndex,
    vocab: &LabelVocabulary,
    query: &str,
    traversal_depth: Option<u32>,
) -> Result<ClassSet> {
    let query = db.resolve(query)?.id;
    let mut found: BTreeMap<SynsetId, u32> = BTreeMap::new();
    if vocab.by_wnid(query).is_ok() {
        found.insert(query, 0);
    }
    for (synset, hops) in taxo.descendants(query, traversal_depth)? {
        if vocab.by_wnid(synset).is_ok() {
            found.insert(synset, hops);
        }
    }
    let members: Vec<ClassMember> = found
        .into_iter()
        .map(|(synset, hops)| {
            let entry = vocab.by_wnid(synset).expect("filtered on vocabulary membership");
            ClassMember {
                synset,
                label_id: entry.label_id,
                name: entry.name.clone(),
                hops,
            }
        })
        .collect();
    if members.is_empty() {
        log::warn!("class set for {query} is empty: no descendant is in the vocabulary");
    }
    Ok(ClassSet {
        query,
        traversal_depth,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxo::TaxonomyOptions;
    use crate::testdb::MiniWordNet;

    fn vocab_for(mini: &MiniWordNet, keys: &[(&str, &str)]) -> LabelVocabulary {
        let text: String = keys
            .iter()
            .enumerate()
            .map(|(i, (k, name))| format!("{i}\t{}\t{name}\n", mini.id(k)))
            .collect();
        LabelVocabulary::parse(&text, "test").unwrap()
    }

    #[test]
    fn parse_skips_comments_and_rejects_duplicates() {
        let v = LabelVocabulary::parse("# header\n0\tn00000001\tfoo\n\n1\tn00000002\tBar Baz\n", "t").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.by_name("bar baz").unwrap().label_id, 1);
        assert_eq!(v.by_name("BAR_BAZ").unwrap().label_id, 1);
        assert!(matches!(
            LabelVocabulary::parse("0\tn00000001\tfoo\n0\tn00000002\tbar\n", "t"),
            Err(ClassMapError::DuplicateLabelId { label_id: 0, line: 2 })
        ));
        assert!(matches!(
            LabelVocabulary::parse("0\tn0000001\tfoo\n", "t"),
            Err(ClassMapError::Parse { line: 1, .. })
        ));
        assert!(LabelVocabulary::parse("", "t").unwrap().is_empty());
    }

    #[test]
    fn crosswalk() {
        let v = LabelVocabulary::parse("7\tn00000001\tcrane\n8\tn00000002\tcrane\n9\tn00000003\ttabby cat\n", "t").unwrap();
        let tabby: SynsetId = "n00000003".parse().unwrap();
        assert_eq!(v.label_of(tabby).unwrap().label_id, 9);
        assert_eq!(v.synset_of("Tabby Cat").unwrap(), tabby);
        assert_eq!(v.synset_of("9").unwrap(), tabby);
        assert_eq!(v.synset_of("n00000003").unwrap(), tabby);
        assert!(matches!(v.synset_of("crane"), Err(ClassMapError::AmbiguousName { count: 2, .. })));
        assert!(matches!(v.synset_of("tiger cat"), Err(ClassMapError::Unmapped(_))));
        assert!(matches!(v.synset_of("n00000004"), Err(ClassMapError::Unmapped(_))));
    }

    #[test]
    fn class_set_filters_descendants_by_wnid() {
        let mini = MiniWordNet::cats();
        let dir = mini.write();
        let db = LexicalDatabase::load(dir.path()).unwrap();
        let taxo = TaxonomyIndex::build(&db, TaxonomyOptions::default()).unwrap();
        let vocab = vocab_for(
            &mini,
            &[
                ("tabby", "tabby cat"),
                ("lynx", "lynx"),
                ("lion", "lion"),
                ("feline", "feline"),
                ("wildcat", "wildcat"),
            ],
        );
        let set = build_class_set(&db, &taxo, &vocab, "cat", None).unwrap();
        let mut expected = vec![mini.id("tabby"), mini.id("lynx"), mini.id("wildcat")];
        expected.sort();
        assert_eq!(set.wnids().collect::<Vec<_>>(), expected);
        assert_eq!(set.member(mini.id("lynx")).unwrap().hops, 2);

        let shallow = build_class_set(&db, &taxo, &vocab, "cat", Some(1)).unwrap();
        assert_eq!(shallow.wnids().collect::<Vec<_>>(), [mini.id("wildcat")]);

        // query in the vocabulary becomes a member
        let with_query = build_class_set(&db, &taxo, &vocab, "wildcat", None).unwrap();
        assert!(with_query.contains(mini.id("wildcat")));
        assert_eq!(with_query.member(mini.id("wildcat")).unwrap().hops, 0);

        let empty = build_class_set(&db, &taxo, &vocab, "canine", None).unwrap();
        assert!(empty.is_empty());
        assert!(matches!(
            build_class_set(&db, &taxo, &vocab, "qzxv", None),
            Err(ClassMapError::Lexical(WnError::NotFound { .. }))
        ));

        let back = ClassSet::from_tsv(&set.to_tsv(), "t").unwrap();
        assert_eq!(back, set);
        let back = ClassSet::from_tsv(&shallow.to_tsv(), "t").unwrap();
        assert_eq!(back.traversal_depth, Some(1));
    }

    #[test]
    fn unresolved_wnids_are_warnings() {
        let mini = MiniWordNet::cats();
        let dir = mini.write();
        let db = LexicalDatabase::load(dir.path()).unwrap();
        let path = dir.path().join("vocab.tsv");
        fs::write(&path, format!("0\t{}\ttabby\n1\tn09999999\tghost\n", mini.id("tabby"))).unwrap();
        let v = LabelVocabulary::load(&path, &db).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.unresolved(), ["n09999999".parse::<SynsetId>().unwrap()]);
    }
}
