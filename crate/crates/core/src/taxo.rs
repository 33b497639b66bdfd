//! Hypernym DAG over the noun synsets, with node depths and the
//! path / Leacock-Chodorow / Wu-Palmer similarity measures.
//!
//! Conventions: root depth is 1 and a node's depth is one more than its
//! deepest parent. Distances are counted through common subsumers (up from
//! each concept to a shared ancestor), never through arbitrary undirected
//! paths. Logarithms are natural.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wndb::{LexicalDatabase, LinkSymbol, PartOfSpeech, SynsetId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxoError {
    #[error("{0} is not a noun synset in the taxonomy")]
    UnknownSynset(SynsetId),
    #[error("{0} and {1} share no common ancestor")]
    NoCommonAncestor(SynsetId, SynsetId),
    #[error("hypernym cycle through {0}")]
    Cycle(SynsetId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyOptions {
    /// Follow `@i` links as ordinary hypernym edges.
    pub instance_links_as_hypernyms: bool,
}

impl Default for TaxonomyOptions {
    fn default() -> Self {
        TaxonomyOptions {
            instance_links_as_hypernyms: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTriple {
    pub path_sim: f64,
    pub lch: f64,
    pub wups: f64,
}

/// Everything the similarity measures need about a concept pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsumption {
    pub distance: u32,
    pub lcs: SynsetId,
    pub lcs_depth: u32,
    pub up_first: u32,
    pub up_second: u32,
}

type Node = u32;

#[derive(Debug)]
pub struct TaxonomyIndex {
    ids: Vec<SynsetId>,
    node_of: HashMap<SynsetId, Node>,
    parents: Vec<Vec<Node>>,
    children: Vec<Vec<Node>>,
    depth: Vec<u32>,
    max_depth: u32,
    options: TaxonomyOptions,
}

#[derive(Serialize, Deserialize)]
struct DepthCache {
    data_noun_sha256: String,
    options: TaxonomyOptions,
    max_depth: u32,
    /// In data-file order.
    depths: Vec<u32>,
}

impl TaxonomyIndex {
    pub fn build(db: &LexicalDatabase, options: TaxonomyOptions) -> Result<Self, TaxoError> {
        let mut index = Self::edges(db, options);
        let (depth, max_depth) = index.compute_depths()?;
        index.depth = depth;
        index.max_depth = max_depth;
        Ok(index)
    }

    /// Like [`TaxonomyIndex::build`], reusing node depths from `cache_path`
    /// when it was written for the same `data.noun` checksum and options.
    pub fn build_cached(
        db: &LexicalDatabase,
        options: TaxonomyOptions,
        cache_path: &Path,
    ) -> Result<Self, TaxoError> {
        let mut index = Self::edges(db, options);
        let cached = fs::read(cache_path)
            .ok()
            .and_then(|bytes| serde_json::from_slice::<DepthCache>(&bytes).ok())
            .filter(|c| {
                c.data_noun_sha256 == db.noun_data_sha256()
                    && c.options == options
                    && c.depths.len() == index.ids.len()
            });
        match cached {
            Some(c) => {
                index.depth = c.depths;
                index.max_depth = c.max_depth;
            }
            None => {
                let (depth, max_depth) = index.compute_depths()?;
                let cache = DepthCache {
                    data_noun_sha256: db.noun_data_sha256().to_string(),
                    options,
                    max_depth,
                    depths: depth,
                };
                if let Err(e) = serde_json::to_vec(&cache).map(|b| fs::write(cache_path, b)) {
                    log::warn!("could not serialise depth cache: {e}");
                }
                index.depth = cache.depths;
                index.max_depth = max_depth;
            }
        }
        Ok(index)
    }

    fn edges(db: &LexicalDatabase, options: TaxonomyOptions) -> Self {
        let ids: Vec<SynsetId> = db.nouns().map(|s| s.id).collect();
        let node_of: HashMap<SynsetId, Node> = ids.iter().enumerate().map(|(i, id)| (*id, i as Node)).collect();
        let mut parents = vec![Vec::new(); ids.len()];
        let mut children = vec![Vec::new(); ids.len()];
        for (i, synset) in db.nouns().enumerate() {
            for link in &synset.links {
                let is_up = match link.symbol {
                    LinkSymbol::Hypernym => true,
                    LinkSymbol::InstanceHypernym => options.instance_links_as_hypernyms,
                    _ => false,
                };
                if !is_up || link.target.pos != PartOfSpeech::Noun {
                    continue;
                }
                if let Some(&p) = node_of.get(&link.target) {
                    if !parents[i].contains(&p) {
                        parents[i].push(p);
                        children[p as usize].push(i as Node);
                    }
                }
            }
        }
        TaxonomyIndex {
            ids,
            node_of,
            parents,
            children,
            depth: Vec::new(),
            max_depth: 0,
            options,
        }
    }

    /// Longest-path depths in topological order from the roots.
    fn compute_depths(&self) -> Result<(Vec<u32>, u32), TaxoError> {
        let n = self.ids.len();
        let mut pending: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut depth = vec![0u32; n];
        let mut queue: VecDeque<Node> = (0..n as Node).filter(|&i| pending[i as usize] == 0).collect();
        for &r in &queue {
            depth[r as usize] = 1;
        }
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &c in &self.children[v as usize] {
                let c = c as usize;
                depth[c] = depth[c].max(depth[v as usize] + 1);
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push_back(c as Node);
                }
            }
        }
        if seen != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
            return Err(TaxoError::Cycle(self.ids[stuck]));
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        Ok((depth, max_depth))
    }

    pub fn options(&self) -> TaxonomyOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: SynsetId) -> bool {
        self.node_of.contains_key(&id)
    }

    /// All synsets in data-file order.
    pub fn synsets(&self) -> &[SynsetId] {
        &self.ids
    }

    /// The `d` of the Leacock-Chodorow measure: the deepest node depth.
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    fn node(&self, id: SynsetId) -> Result<Node, TaxoError> {
        self.node_of.get(&id).copied().ok_or(TaxoError::UnknownSynset(id))
    }

    pub fn node_depth(&self, id: SynsetId) -> Result<u32, TaxoError> {
        Ok(self.depth[self.node(id)? as usize])
    }

    pub fn parents(&self, id: SynsetId) -> Result<Vec<SynsetId>, TaxoError> {
        let v = self.node(id)?;
        Ok(self.parents[v as usize].iter().map(|&p| self.ids[p as usize]).collect())
    }

    pub fn children(&self, id: SynsetId) -> Result<Vec<SynsetId>, TaxoError> {
        let v = self.node(id)?;
        Ok(self.children[v as usize].iter().map(|&c| self.ids[c as usize]).collect())
    }

    pub fn is_root(&self, id: SynsetId) -> Result<bool, TaxoError> {
        Ok(self.parents[self.node(id)? as usize].is_empty())
    }

    /// Minimum number of hypernym hops from `id` to each of its ancestors,
    /// including `id` itself at 0.
    pub fn ancestor_distances(&self, id: SynsetId) -> Result<HashMap<SynsetId, u32>, TaxoError> {
        let dist = self.up_distances(self.node(id)?);
        Ok(dist.into_iter().map(|(v, d)| (self.ids[v as usize], d)).collect())
    }

    fn up_distances(&self, start: Node) -> HashMap<Node, u32> {
        let mut dist = HashMap::from([(start, 0)]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for &p in &self.parents[v as usize] {
                dist.entry(p).or_insert_with(|| {
                    queue.push_back(p);
                    d + 1
                });
            }
        }
        dist
    }

    pub fn is_ancestor_or_self(&self, ancestor: SynsetId, id: SynsetId) -> Result<bool, TaxoError> {
        let target = self.node(ancestor)?;
        Ok(self.up_distances(self.node(id)?).contains_key(&target))
    }

    /// Descendants of `id` with their minimum hop count, up to `max_hops`
    /// (unbounded when `None`). `id` itself is not included.
    pub fn descendants(&self, id: SynsetId, max_hops: Option<u32>) -> Result<Vec<(SynsetId, u32)>, TaxoError> {
        let start = self.node(id)?;
        let mut dist = HashMap::from([(start, 0u32)]);
        let mut queue = VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if max_hops.is_some_and(|m| d >= m) {
                continue;
            }
            for &c in &self.children[v as usize] {
                if let Entry::Vacant(e) = dist.entry(c) {
                    e.insert(d + 1);
                    out.push((self.ids[c as usize], d + 1));
                    queue.push_back(c);
                }
            }
        }
        Ok(out)
    }

    /// Distance, least common subsumer and the hop counts from each side to it.
    pub fn subsumption(&self, first: SynsetId, second: SynsetId) -> Result<Subsumption, TaxoError> {
        let up1 = self.up_distances(self.node(first)?);
        let up2 = self.up_distances(self.node(second)?);
        let (small, large) = if up1.len() <= up2.len() { (&up1, &up2) } else { (&up2, &up1) };

        let mut distance = u32::MAX;
        let mut lcs: Option<Node> = None;
        for (&a, &da) in small {
            let Some(&db) = large.get(&a) else { continue };
            distance = distance.min(da + db);
            let better = match lcs {
                None => true,
                Some(b) => {
                    let (depth_a, depth_b) = (self.depth[a as usize], self.depth[b as usize]);
                    depth_a > depth_b || (depth_a == depth_b && self.ids[a as usize] < self.ids[b as usize])
                }
            };
            if better {
                lcs = Some(a);
            }
        }
        let lcs = lcs.ok_or(TaxoError::NoCommonAncestor(first, second))?;
        Ok(Subsumption {
            distance,
            lcs: self.ids[lcs as usize],
            lcs_depth: self.depth[lcs as usize],
            up_first: up1[&lcs],
            up_second: up2[&lcs],
        })
    }

    pub fn shortest_path_distance(&self, first: SynsetId, second: SynsetId) -> Result<u32, TaxoError> {
        Ok(self.subsumption(first, second)?.distance)
    }

    /// The deepest common ancestor; equal depths resolve to the smaller offset.
    pub fn least_common_subsumer(&self, first: SynsetId, second: SynsetId) -> Result<SynsetId, TaxoError> {
        Ok(self.subsumption(first, second)?.lcs)
    }

    pub fn path_similarity(&self, first: SynsetId, second: SynsetId) -> Result<f64, TaxoError> {
        Ok(path_from_distance(self.shortest_path_distance(first, second)?))
    }

    pub fn lch_similarity(&self, first: SynsetId, second: SynsetId) -> Result<f64, TaxoError> {
        Ok(lch_from_distance(self.shortest_path_distance(first, second)?, self.max_depth))
    }

    pub fn wup_similarity(&self, first: SynsetId, second: SynsetId) -> Result<f64, TaxoError> {
        Ok(wup_from_subsumption(&self.subsumption(first, second)?))
    }

    pub fn similarity(&self, first: SynsetId, second: SynsetId) -> Result<SimilarityTriple, TaxoError> {
        let s = self.subsumption(first, second)?;
        Ok(SimilarityTriple {
            path_sim: path_from_distance(s.distance),
            lch: lch_from_distance(s.distance, self.max_depth),
            wups: wup_from_subsumption(&s),
        })
    }

    /// Distinct concepts sharing at least one immediate hypernym.
    pub fn are_siblings(&self, first: SynsetId, second: SynsetId) -> bool {
        if first == second {
            return false;
        }
        let (Ok(a), Ok(b)) = (self.node(first), self.node(second)) else {
            return false;
        };
        self.parents[a as usize]
            .iter()
            .any(|p| self.parents[b as usize].contains(p))
    }
}

pub fn path_from_distance(distance: u32) -> f64 {
    1.0 / (1.0 + f64::from(distance))
}

/// `-ln((distance + 1) / (2 * max_depth))`; the +1 keeps identical concepts finite.
pub fn lch_from_distance(distance: u32, max_depth: u32) -> f64 {
    -((f64::from(distance) + 1.0) / (2.0 * f64::from(max_depth))).ln()
}

pub fn wup_from_subsumption(s: &Subsumption) -> f64 {
    let d = f64::from(s.lcs_depth);
    let d1 = d + f64::from(s.up_first);
    let d2 = d + f64::from(s.up_second);
    2.0 * d / (d1 + d2)
}
