//! Shared helpers: the bundled WordNet location and a deliberately naive
//! reader of data.noun used as an independent oracle.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

pub fn wordnet_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet-3.0")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[derive(Debug, Default, Clone)]
pub struct RawNoun {
    pub lemmas: Vec<String>,
    /// `@` and `@i` targets.
    pub hypernyms: Vec<u32>,
    /// `~` and `~i` targets.
    pub hyponyms: Vec<u32>,
    pub gloss: String,
}

/// Offsets to records, straight from the text of data.noun.
pub fn scan_data_noun() -> HashMap<u32, RawNoun> {
    let text = fs::read_to_string(wordnet_dir().join("data.noun")).unwrap();
    let mut out = HashMap::new();
    for line in text.lines().filter(|l| !l.starts_with("  ")) {
        let (fields, gloss) = line.split_once(" | ").unwrap_or((line, ""));
        let t: Vec<&str> = fields.split(' ').filter(|s| !s.is_empty()).collect();
        let offset: u32 = t[0].parse().unwrap();
        let w_cnt = usize::from_str_radix(t[3], 16).unwrap();
        let mut rec = RawNoun {
            gloss: gloss.to_string(),
            ..Default::default()
        };
        for w in 0..w_cnt {
            rec.lemmas.push(t[4 + 2 * w].to_lowercase());
        }
        let p_at = 4 + 2 * w_cnt;
        let p_cnt: usize = t[p_at].parse().unwrap();
        for p in 0..p_cnt {
            let base = p_at + 1 + 4 * p;
            if t[base + 2] != "n" {
                continue;
            }
            let target: u32 = t[base + 1].parse().unwrap();
            match t[base] {
                "@" | "@i" => rec.hypernyms.push(target),
                "~" | "~i" => rec.hyponyms.push(target),
                _ => {}
            }
        }
        assert!(out.insert(offset, rec).is_none(), "offset {offset} twice");
    }
    out
}

/// Every upward path enumerated explicitly; shortest length per ancestor,
/// the concept itself included at 0.
pub fn brute_force_ancestors(raw: &HashMap<u32, RawNoun>, start: u32) -> HashMap<u32, u32> {
    fn walk(raw: &HashMap<u32, RawNoun>, node: u32, len: u32, out: &mut HashMap<u32, u32>) {
        let best = out.entry(node).or_insert(u32::MAX);
        *best = (*best).min(len);
        for &p in &raw[&node].hypernyms {
            walk(raw, p, len + 1, out);
        }
    }
    let mut out = HashMap::new();
    walk(raw, start, 0, &mut out);
    out
}

/// Longest root-to-node path counted in nodes.
pub fn brute_force_depth(raw: &HashMap<u32, RawNoun>, node: u32, memo: &mut HashMap<u32, u32>) -> u32 {
    if let Some(&d) = memo.get(&node) {
        return d;
    }
    let d = raw[&node]
        .hypernyms
        .iter()
        .map(|&p| brute_force_depth(raw, p, memo) + 1)
        .max()
        .unwrap_or(1);
    memo.insert(node, d);
    d
}
