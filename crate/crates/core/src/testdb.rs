//! Small synthetic WordNet written in the real file format, for unit tests.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;

use crate::wndb::SynsetId;

struct Node {
    key: &'static str,
    lemmas: Vec<&'static str>,
    hypernyms: Vec<&'static str>,
    instance_of: Vec<&'static str>,
}

pub struct MiniWordNet {
    nodes: Vec<Node>,
    dropped: Vec<(&'static str, &'static str)>,
}

impl MiniWordNet {
    /// entity
    /// ├─ organism ─ animal ─┬─ carnivore ─┬─ feline ─┬─ cat ─┬─ domestic_cat ─ {tabby, tiger_cat, persian_cat,
    /// │                     │             │          │       │                   angora, siamese_cat, egyptian_cat, lapcat}
    /// │                     │             │          │       └─ wildcat ─ {cougar, lynx, leopard_cat}
    /// │                     │             │          └─ big_cat ─ {lion, tiger}
    /// │                     │             └─ canine ─ {fox ─ arctic_fox, coyote}
    /// │                     └─ pet ─ lapcat
    /// ├─ person ─ {cat_music, Tom (instance)}
    /// └─ artifact ─ {mask, web_site}
    pub fn cats() -> Self {
        let n = |key, lemmas: &[&'static str], hypernyms: &[&'static str]| Node {
            key,
            lemmas: lemmas.to_vec(),
            hypernyms: hypernyms.to_vec(),
            instance_of: vec![],
        };
        let mut nodes = vec![
            n("entity", &["entity"], &[]),
            n("organism", &["organism", "being"], &["entity"]),
            n("animal", &["animal"], &["organism"]),
            n("carnivore", &["carnivore"], &["animal"]),
            n("feline", &["feline", "felid"], &["carnivore"]),
            n("cat", &["cat", "true_cat"], &["feline"]),
            n("domestic_cat", &["domestic_cat", "house_cat"], &["cat"]),
            n("tabby", &["tabby", "tabby_cat"], &["domestic_cat"]),
            n("tiger_cat", &["tiger_cat"], &["domestic_cat"]),
            n("persian_cat", &["Persian_cat"], &["domestic_cat"]),
            n("angora", &["Angora", "Angora_cat"], &["domestic_cat"]),
            n("siamese_cat", &["Siamese_cat", "Siamese"], &["domestic_cat"]),
            n("egyptian_cat", &["Egyptian_cat"], &["domestic_cat"]),
            n("pet", &["pet"], &["animal"]),
            n("lapcat", &["lapcat"], &["domestic_cat", "pet"]),
            n("wildcat", &["wildcat"], &["cat"]),
            n("cougar", &["cougar", "puma"], &["wildcat"]),
            n("lynx", &["lynx", "catamount"], &["wildcat"]),
            n("leopard_cat", &["leopard_cat"], &["wildcat"]),
            n("big_cat", &["big_cat", "cat"], &["feline"]),
            n("lion", &["lion"], &["big_cat"]),
            n("tiger", &["tiger"], &["big_cat"]),
            n("canine", &["canine", "canid"], &["carnivore"]),
            n("fox", &["fox"], &["canine"]),
            n("arctic_fox", &["Arctic_fox", "white_fox"], &["fox"]),
            n("coyote", &["coyote"], &["canine"]),
            n("person", &["person"], &["organism"]),
            n("cat_music", &["cat", "hombre"], &["person"]),
            n("artifact", &["artifact"], &["entity"]),
            n("mask", &["mask"], &["artifact"]),
            n("web_site", &["web_site", "website"], &["artifact"]),
        ];
        nodes.push(Node {
            key: "tom",
            lemmas: vec!["Tom"],
            hypernyms: vec![],
            instance_of: vec!["person"],
        });
        MiniWordNet {
            nodes,
            dropped: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.nodes.iter().map(|n| n.key)
    }

    /// Remove the hyponym link `parent ~ child` while keeping `child @ parent`.
    pub fn drop_hyponym(&mut self, parent: &'static str, child: &'static str) {
        self.dropped.push((parent, child));
    }

    fn layout(&self) -> (HashMap<&'static str, u32>, String, String) {
        // Offset fields are fixed width, so line lengths do not depend on offsets.
        let header = "  1 This is a synthetic WordNet for tests.\n  2 \n";
        let render = |offsets: &HashMap<&'static str, u32>| {
            let mut out = String::from(header);
            for node in &self.nodes {
                let mut links: Vec<(&str, &str)> = vec![];
                links.extend(node.hypernyms.iter().map(|h| ("@", *h)));
                links.extend(node.instance_of.iter().map(|h| ("@i", *h)));
                for other in &self.nodes {
                    if other.hypernyms.contains(&node.key) && !self.dropped.contains(&(node.key, other.key)) {
                        links.push(("~", other.key));
                    }
                    if other.instance_of.contains(&node.key) {
                        links.push(("~i", other.key));
                    }
                }
                let _ = write!(
                    out,
                    "{:08} 05 n {:02x} ",
                    offsets.get(node.key).copied().unwrap_or(0),
                    node.lemmas.len()
                );
                for l in &node.lemmas {
                    let _ = write!(out, "{l} 0 ");
                }
                let _ = write!(out, "{:03} ", links.len());
                for (sym, target) in links {
                    let _ = write!(out, "{sym} {:08} n 0000 ", offsets.get(target).copied().unwrap_or(0));
                }
                let _ = writeln!(out, "| synthetic gloss for {}", node.key);
            }
            out
        };
        let draft = render(&HashMap::new());
        let mut offsets = HashMap::new();
        let mut pos = header.len();
        for (node, line) in self.nodes.iter().zip(draft[header.len()..].lines()) {
            offsets.insert(node.key, pos as u32);
            pos += line.len() + 1;
        }
        let data = render(&offsets);

        let mut senses: Vec<(String, Vec<u32>)> = vec![];
        for node in &self.nodes {
            for lemma in &node.lemmas {
                let lemma = lemma.to_lowercase();
                match senses.iter_mut().find(|(l, _)| *l == lemma) {
                    Some((_, offs)) => offs.push(offsets[node.key]),
                    None => senses.push((lemma, vec![offsets[node.key]])),
                }
            }
        }
        senses.sort();
        let mut index = String::from(header);
        for (lemma, offs) in senses {
            let _ = write!(index, "{lemma} n {} 2 @ ~ {} 0 ", offs.len(), offs.len());
            for o in offs {
                let _ = write!(index, "{o:08} ");
            }
            index.push('\n');
        }
        (offsets, data, index)
    }

    pub fn id(&self, key: &str) -> SynsetId {
        SynsetId::noun(self.layout().0[key])
    }

    pub fn write(&self) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let (_, data, index) = self.layout();
        fs::write(dir.path().join("data.noun"), data).unwrap();
        fs::write(dir.path().join("index.noun"), index).unwrap();
        dir
    }
}
