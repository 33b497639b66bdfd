//! Reader for the Princeton WordNet 3.0 text database (`index.*` / `data.*`).
//!
//! Nouns are loaded eagerly and validated; the other parts of speech are read
//! on first use when their files are present in the same directory.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WnError {
    #[error("required file {0} is missing")]
    MissingFile(PathBuf),
    #[error("failed to read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{source_id} has {symbol} link to {target} without the inverse link")]
    InconsistentLink {
        source_id: SynsetId,
        symbol: String,
        target: SynsetId,
    },
    #[error("link from {source_id} points at missing synset {target}")]
    DanglingLink { source_id: SynsetId, target: SynsetId },
    #[error("no {pos} synset for {what:?}")]
    NotFound { what: String, pos: PartOfSpeech },
    #[error("{lemma:?} has {available} {pos} senses, sense {requested} requested")]
    SenseOutOfRange {
        lemma: String,
        pos: PartOfSpeech,
        requested: usize,
        available: usize,
    },
    #[error("malformed wnid {0:?}: expected a part-of-speech letter followed by 8 digits")]
    MalformedWnid(String),
}

pub type Result<T, E = WnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    AdjectiveSatellite,
    Adverb,
}

impl PartOfSpeech {
    pub fn letter(self) -> char {
        match self {
            PartOfSpeech::Noun => 'n',
            PartOfSpeech::Verb => 'v',
            PartOfSpeech::Adjective => 'a',
            PartOfSpeech::AdjectiveSatellite => 's',
            PartOfSpeech::Adverb => 'r',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'n' => PartOfSpeech::Noun,
            'v' => PartOfSpeech::Verb,
            'a' => PartOfSpeech::Adjective,
            's' => PartOfSpeech::AdjectiveSatellite,
            'r' => PartOfSpeech::Adverb,
            _ => return None,
        })
    }

    /// Satellites share the adjective files.
    fn file_suffix(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective | PartOfSpeech::AdjectiveSatellite => "adj",
            PartOfSpeech::Adverb => "adv",
        }
    }

    fn table_slot(self) -> usize {
        match self {
            PartOfSpeech::Noun => 0,
            PartOfSpeech::Verb => 1,
            PartOfSpeech::Adjective | PartOfSpeech::AdjectiveSatellite => 2,
            PartOfSpeech::Adverb => 3,
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::AdjectiveSatellite => "adjective satellite",
            PartOfSpeech::Adverb => "adverb",
        };
        f.write_str(name)
    }
}

/// A synset address: part of speech plus the byte offset of its record in
/// the data file. Renders as a wnid, e.g. `n02123045`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub pos: PartOfSpeech,
    pub offset: u32,
}

impl SynsetId {
    pub const fn noun(offset: u32) -> Self {
        SynsetId {
            pos: PartOfSpeech::Noun,
            offset,
        }
    }

    pub fn wnid(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:08}", self.pos.letter(), self.offset)
    }
}

impl FromStr for SynsetId {
    type Err = WnError;

    fn from_str(s: &str) -> Result<Self> {
        let malformed = || WnError::MalformedWnid(s.to_string());
        let mut chars = s.chars();
        let pos = chars
            .next()
            .and_then(PartOfSpeech::from_letter)
            .ok_or_else(malformed)?;
        let digits = chars.as_str();
        if digits.len() != 8 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let offset = digits.parse().map_err(|_| malformed())?;
        Ok(SynsetId { pos, offset })
    }
}

impl serde::Serialize for SynsetId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SynsetId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LinkSymbol {
    Hypernym,
    InstanceHypernym,
    Hyponym,
    InstanceHyponym,
    Other(String),
}

impl LinkSymbol {
    pub fn parse(symbol: &str) -> Self {
        match symbol {
            "@" => LinkSymbol::Hypernym,
            "@i" => LinkSymbol::InstanceHypernym,
            "~" => LinkSymbol::Hyponym,
            "~i" => LinkSymbol::InstanceHyponym,
            other => LinkSymbol::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            LinkSymbol::Hypernym => "@",
            LinkSymbol::InstanceHypernym => "@i",
            LinkSymbol::Hyponym => "~",
            LinkSymbol::InstanceHyponym => "~i",
            LinkSymbol::Other(s) => s,
        }
    }

    pub fn inverse(&self) -> Option<LinkSymbol> {
        match self {
            LinkSymbol::Hypernym => Some(LinkSymbol::Hyponym),
            LinkSymbol::Hyponym => Some(LinkSymbol::Hypernym),
            LinkSymbol::InstanceHypernym => Some(LinkSymbol::InstanceHyponym),
            LinkSymbol::InstanceHyponym => Some(LinkSymbol::InstanceHypernym),
            LinkSymbol::Other(_) => None,
        }
    }
}

impl fmt::Display for LinkSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub symbol: LinkSymbol,
    pub target: SynsetId,
    /// Raw `source/target` word numbers; `0000` for semantic links.
    pub source_target: u16,
}

impl Link {
    pub fn is_semantic(&self) -> bool {
        self.source_target == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub lex_filenum: u8,
    /// Lowercased, underscore-joined word forms in file order.
    pub lemmas: Vec<String>,
    pub links: Vec<Link>,
    pub gloss: String,
}

impl Synset {
    pub fn wnid(&self) -> String {
        self.id.wnid()
    }

    pub fn links_with<'a>(&'a self, symbol: &'a LinkSymbol) -> impl Iterator<Item = SynsetId> + 'a {
        self.links
            .iter()
            .filter(move |l| &l.symbol == symbol)
            .map(|l| l.target)
    }

    /// First lemma with underscores turned back into spaces.
    pub fn display_name(&self) -> String {
        self.lemmas[0].replace('_', " ")
    }
}

/// Case-fold and join words with underscores, the form used by the index files.
pub fn normalize_lemma(word: &str) -> String {
    word.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

#[derive(Debug, Default)]
struct PosTable {
    synsets: HashMap<u32, Synset>,
    lemma_index: HashMap<String, Vec<u32>>,
    /// Data records in file order, used for deterministic iteration.
    order: Vec<u32>,
}

/// In-memory WordNet. Immutable once loaded; lazily loaded parts of speech
/// are initialised at most once and are safe to share across threads.
#[derive(Debug)]
pub struct LexicalDatabase {
    dir: PathBuf,
    noun_data_sha256: String,
    nouns: PosTable,
    others: [OnceLock<Result<PosTable>>; 3],
}

impl LexicalDatabase {
    /// Load `index.noun` and `data.noun` from `dir` and validate them.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let data_path = dir.join("data.noun");
        let index_path = dir.join("index.noun");
        for p in [&index_path, &data_path] {
            if !p.is_file() {
                return Err(WnError::MissingFile(p.clone()));
            }
        }
        let data_bytes = read_bytes(&data_path)?;
        let noun_data_sha256 = hex::encode(Sha256::digest(&data_bytes));
        let table = load_table(
            PartOfSpeech::Noun,
            &data_path,
            &String::from_utf8_lossy(&data_bytes),
            &index_path,
        )?;
        Ok(LexicalDatabase {
            dir,
            noun_data_sha256,
            nouns: table,
            others: Default::default(),
        })
    }

    pub fn directory(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of `data.noun` as read at load time.
    pub fn noun_data_sha256(&self) -> &str {
        &self.noun_data_sha256
    }

    pub fn noun_count(&self) -> usize {
        self.nouns.synsets.len()
    }

    /// Noun synsets in data-file order.
    pub fn nouns(&self) -> impl Iterator<Item = &Synset> + '_ {
        self.nouns.order.iter().map(|o| &self.nouns.synsets[o])
    }

    fn table(&self, pos: PartOfSpeech) -> Result<&PosTable> {
        if pos == PartOfSpeech::Noun {
            return Ok(&self.nouns);
        }
        let slot = &self.others[pos.table_slot() - 1];
        slot.get_or_init(|| self.load_other(pos))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn load_other(&self, pos: PartOfSpeech) -> Result<PosTable> {
        let data_path = self.dir.join(format!("data.{}", pos.file_suffix()));
        let index_path = self.dir.join(format!("index.{}", pos.file_suffix()));
        if !data_path.is_file() || !index_path.is_file() {
            log::debug!("no {pos} files under {}", self.dir.display());
            return Ok(PosTable::default());
        }
        let bytes = read_bytes(&data_path)?;
        load_table(pos, &data_path, &String::from_utf8_lossy(&bytes), &index_path)
    }

    /// Look up a synset by id. Non-noun tables are loaded on first access.
    pub fn synset(&self, id: SynsetId) -> Result<Option<&Synset>> {
        let table = self.table(id.pos)?;
        Ok(table.synsets.get(&id.offset).filter(|s| s.id.pos == id.pos))
    }

    pub fn noun(&self, id: SynsetId) -> Option<&Synset> {
        if id.pos != PartOfSpeech::Noun {
            return None;
        }
        self.nouns.synsets.get(&id.offset)
    }

    pub fn synset_by_wnid(&self, wnid: &str) -> Result<&Synset> {
        let id: SynsetId = wnid.trim().parse()?;
        self.synset(id)?.ok_or_else(|| WnError::NotFound {
            what: wnid.to_string(),
            pos: id.pos,
        })
    }

    /// All senses of `lemma` in index order.
    pub fn synsets_by_lemma(&self, lemma: &str, pos: PartOfSpeech) -> Result<Vec<&Synset>> {
        let key = normalize_lemma(lemma);
        let table = self.table(pos)?;
        let offsets = table
            .lemma_index
            .get(&key)
            .ok_or_else(|| WnError::NotFound {
                what: key.clone(),
                pos,
            })?;
        Ok(offsets.iter().map(|o| &table.synsets[o]).collect())
    }

    /// The `sense`-th (1-based) sense of `lemma`.
    pub fn synset_by_lemma(&self, lemma: &str, pos: PartOfSpeech, sense: usize) -> Result<&Synset> {
        let senses = self.synsets_by_lemma(lemma, pos)?;
        if sense == 0 || sense > senses.len() {
            return Err(WnError::SenseOutOfRange {
                lemma: normalize_lemma(lemma),
                pos,
                requested: sense,
                available: senses.len(),
            });
        }
        Ok(senses[sense - 1])
    }

    /// Resolve a user-facing concept reference: a wnid (`n02123045`), a
    /// sense-qualified lemma (`cat.n.1`), or a bare lemma (first noun sense).
    pub fn resolve(&self, reference: &str) -> Result<&Synset> {
        let reference = reference.trim();
        if looks_like_wnid(reference) {
            return self.synset_by_wnid(reference);
        }
        if let Some((lemma, pos, sense)) = split_sense_notation(reference) {
            return self.synset_by_lemma(lemma, pos, sense);
        }
        self.synset_by_lemma(reference, PartOfSpeech::Noun, 1)
    }
}

fn looks_like_wnid(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 9 && PartOfSpeech::from_letter(b[0] as char).is_some() && b[1..].iter().all(u8::is_ascii_digit)
}

fn split_sense_notation(s: &str) -> Option<(&str, PartOfSpeech, usize)> {
    let (rest, sense) = s.rsplit_once('.')?;
    let (lemma, pos) = rest.rsplit_once('.')?;
    let mut pos_chars = pos.chars();
    let pos = PartOfSpeech::from_letter(pos_chars.next()?)?;
    if pos_chars.next().is_some() || lemma.is_empty() {
        return None;
    }
    Some((lemma, pos, sense.parse().ok()?))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| WnError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_table(pos: PartOfSpeech, data_path: &Path, data: &str, index_path: &Path) -> Result<PosTable> {
    let mut table = PosTable::default();
    for (lineno, line) in data.lines().enumerate() {
        if line.starts_with("  ") || line.is_empty() {
            continue;
        }
        let synset = parse_data_line(line, pos).map_err(|message| WnError::Parse {
            file: data_path.to_path_buf(),
            line: lineno + 1,
            message,
        })?;
        let offset = synset.id.offset;
        if table.synsets.insert(offset, synset).is_some() {
            return Err(WnError::Parse {
                file: data_path.to_path_buf(),
                line: lineno + 1,
                message: format!("duplicate synset offset {offset:08}"),
            });
        }
        table.order.push(offset);
    }

    let index = fs::read(index_path).map_err(|e| WnError::Io {
        path: index_path.to_path_buf(),
        message: e.to_string(),
    })?;
    for (lineno, line) in String::from_utf8_lossy(&index).lines().enumerate() {
        if line.starts_with("  ") || line.is_empty() {
            continue;
        }
        let parse_err = |message: String| WnError::Parse {
            file: index_path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let (lemma, offsets) = parse_index_line(line).map_err(parse_err)?;
        for o in &offsets {
            if !table.synsets.contains_key(o) {
                return Err(parse_err(format!("{lemma} references unknown offset {o:08}")));
            }
        }
        table.lemma_index.insert(lemma, offsets);
    }

    validate_links(&table, pos)?;
    Ok(table)
}

/// `offset lex_filenum ss_type w_cnt (word lex_id)+ p_cnt (sym offset pos st)* [frames] | gloss`
fn parse_data_line(line: &str, file_pos: PartOfSpeech) -> std::result::Result<Synset, String> {
    let (fields, gloss) = match line.split_once(" | ") {
        Some((f, g)) => (f, g.trim_end()),
        None => (line.trim_end().trim_end_matches(" |"), ""),
    };
    let mut tok = fields.split_ascii_whitespace();
    let mut next = |what: &str| tok.next().ok_or_else(|| format!("truncated record: missing {what}"));

    let offset_str = next("synset_offset")?;
    if offset_str.len() != 8 {
        return Err(format!("bad synset offset {offset_str:?}"));
    }
    let offset: u32 = offset_str
        .parse()
        .map_err(|_| format!("bad synset offset {offset_str:?}"))?;
    let lex_filenum: u8 = next("lex_filenum")?
        .parse()
        .map_err(|_| "bad lex_filenum".to_string())?;
    let ss_type = next("ss_type")?;
    let pos = match ss_type.chars().next().and_then(PartOfSpeech::from_letter) {
        Some(p) if ss_type.len() == 1 && p.file_suffix() == file_pos.file_suffix() => p,
        _ => return Err(format!("unexpected ss_type {ss_type:?}")),
    };
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16).map_err(|_| "bad w_cnt".to_string())?;
    if w_cnt == 0 {
        return Err("synset without words".into());
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = next("word")?;
        let lex_id = next("lex_id")?;
        u8::from_str_radix(lex_id, 16).map_err(|_| format!("bad lex_id {lex_id:?}"))?;
        lemmas.push(strip_adjective_marker(word).to_lowercase());
    }
    let p_cnt: usize = next("p_cnt")?.parse().map_err(|_| "bad p_cnt".to_string())?;
    let mut links = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let symbol = LinkSymbol::parse(next("pointer_symbol")?);
        let target_offset: u32 = next("target offset")?
            .parse()
            .map_err(|_| "bad pointer offset".to_string())?;
        let target_pos = next("pointer pos")?;
        let target_pos = target_pos
            .chars()
            .next()
            .and_then(PartOfSpeech::from_letter)
            .ok_or_else(|| format!("bad pointer pos {target_pos:?}"))?;
        let st = next("source/target")?;
        if st.len() != 4 {
            return Err(format!("bad source/target field {st:?}"));
        }
        let source_target = u16::from_str_radix(st, 16).map_err(|_| format!("bad source/target field {st:?}"))?;
        links.push(Link {
            symbol,
            target: SynsetId {
                pos: target_pos,
                offset: target_offset,
            },
            source_target,
        });
    }
    if pos == PartOfSpeech::Verb {
        let f_cnt: usize = next("f_cnt")?.parse().map_err(|_| "bad f_cnt".to_string())?;
        for _ in 0..f_cnt {
            next("frame marker")?;
            next("f_num")?;
            next("w_num")?;
        }
    }
    if tok.next().is_some() {
        return Err("trailing fields before gloss".into());
    }
    if !line.contains(" | ") && !line.trim_end().ends_with('|') {
        return Err("truncated record: missing gloss separator".into());
    }
    Ok(Synset {
        id: SynsetId { pos, offset },
        lex_filenum,
        lemmas,
        links,
        gloss: gloss.to_string(),
    })
}

fn strip_adjective_marker(word: &str) -> &str {
    for marker in ["(a)", "(p)", "(ip)"] {
        if let Some(w) = word.strip_suffix(marker) {
            return w;
        }
    }
    word
}

/// `lemma pos synset_cnt p_cnt ptr_symbol* sense_cnt tagsense_cnt synset_offset+`
fn parse_index_line(line: &str) -> std::result::Result<(String, Vec<u32>), String> {
    let tok: Vec<&str> = line.split_ascii_whitespace().collect();
    let field = |i: usize, what: &str| tok.get(i).copied().ok_or_else(|| format!("truncated index record: missing {what}"));
    let lemma = field(0, "lemma")?.to_lowercase();
    field(1, "pos")?;
    let synset_cnt: usize = field(2, "synset_cnt")?
        .parse()
        .map_err(|_| "bad synset_cnt".to_string())?;
    let p_cnt: usize = field(3, "p_cnt")?.parse().map_err(|_| "bad p_cnt".to_string())?;
    let first_offset = 4 + p_cnt + 2;
    if tok.len() != first_offset + synset_cnt {
        return Err(format!(
            "expected {synset_cnt} synset offsets, found {}",
            tok.len().saturating_sub(first_offset)
        ));
    }
    let offsets = tok[first_offset..]
        .iter()
        .map(|o| o.parse::<u32>().map_err(|_| format!("bad synset offset {o:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((lemma, offsets))
}

/// Every same-pos link target must exist, and hypernym/hyponym links (plain
/// and instance) must come in inverse pairs.
fn validate_links(table: &PosTable, pos: PartOfSpeech) -> Result<()> {
    for offset in &table.order {
        let synset = &table.synsets[offset];
        for link in &synset.links {
            if link.target.pos.file_suffix() != pos.file_suffix() {
                continue;
            }
            let Some(target) = table.synsets.get(&link.target.offset) else {
                return Err(WnError::DanglingLink {
                    source_id: synset.id,
                    target: link.target,
                });
            };
            let Some(inverse) = link.symbol.inverse() else {
                continue;
            };
            let has_inverse = target
                .links
                .iter()
                .any(|l| l.symbol == inverse && l.target.offset == synset.id.offset);
            if !has_inverse {
                return Err(WnError::InconsistentLink {
                    source_id: synset.id,
                    symbol: link.symbol.to_string(),
                    target: link.target,
                });
            }
        }
    }
    Ok(())
}
