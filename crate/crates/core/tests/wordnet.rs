mod common;

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;
use std::time::Instant;

use taxoscope::{LexicalDatabase, PartOfSpeech, SynsetId, TaxonomyIndex, TaxonomyOptions};

use common::{scan_data_noun, wordnet_dir, RawNoun};

fn db() -> &'static LexicalDatabase {
    static DB: OnceLock<LexicalDatabase> = OnceLock::new();
    DB.get_or_init(|| LexicalDatabase::load(wordnet_dir()).unwrap())
}

fn raw() -> &'static HashMap<u32, RawNoun> {
    static RAW: OnceLock<HashMap<u32, RawNoun>> = OnceLock::new();
    RAW.get_or_init(scan_data_noun)
}

#[test]
fn synset_count_matches_record_scan() {
    let text = std::fs::read_to_string(wordnet_dir().join("data.noun")).unwrap();
    let records = text.lines().filter(|l| !l.starts_with("  ")).count();
    assert_eq!(records, 82_115);
    assert_eq!(db().noun_count(), records);
    assert_eq!(db().nouns().count(), records);
}

#[test]
fn every_hypernym_link_has_its_inverse() {
    let raw = raw();
    let mut pairs = 0usize;
    for (&off, rec) in raw {
        for &h in &rec.hypernyms {
            assert!(raw[&h].hyponyms.contains(&off), "{off} -> {h}");
            pairs += 1;
        }
        for &c in &rec.hyponyms {
            assert!(raw[&c].hypernyms.contains(&off), "{off} <- {c}");
        }
    }
    assert!(pairs > 80_000);
}

#[test]
fn loaded_links_match_the_raw_text() {
    let raw = raw();
    for s in db().nouns() {
        let rec = &raw[&s.id.offset];
        assert_eq!(s.lemmas, rec.lemmas, "{}", s.id);
        let mut want: Vec<u32> = rec.hypernyms.clone();
        want.sort();
        let mut got: Vec<u32> = s
            .links
            .iter()
            .filter(|l| matches!(l.symbol.as_str(), "@" | "@i") && l.target.pos == PartOfSpeech::Noun)
            .map(|l| l.target.offset)
            .collect();
        got.sort();
        assert_eq!(got, want, "{}", s.id);
    }
}

#[test]
fn hypernym_graph_is_acyclic_and_rooted() {
    // iterative three-colour DFS over the raw parent lists
    let raw = raw();
    let mut colour: HashMap<u32, u8> = HashMap::new();
    for &start in raw.keys() {
        if colour.contains_key(&start) {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour.insert(start, 1);
        while let Some((node, i)) = stack.pop() {
            let parents = &raw[&node].hypernyms;
            if i < parents.len() {
                stack.push((node, i + 1));
                let p = parents[i];
                match colour.get(&p) {
                    Some(1) => panic!("cycle through {p}"),
                    Some(_) => {}
                    None => {
                        colour.insert(p, 1);
                        stack.push((p, 0));
                    }
                }
            } else {
                colour.insert(node, 2);
            }
        }
    }
    let roots: Vec<u32> = raw.iter().filter(|(_, r)| r.hypernyms.is_empty()).map(|(&o, _)| o).collect();
    assert_eq!(roots, [1_740], "entity is the only root");

    let taxo = TaxonomyIndex::build(db(), TaxonomyOptions::default()).unwrap();
    for &id in taxo.synsets() {
        assert!(taxo.is_ancestor_or_self(SynsetId::noun(1_740), id).unwrap());
    }
}

#[test]
fn depths_match_longest_root_path() {
    let raw = raw();
    let taxo = TaxonomyIndex::build(db(), TaxonomyOptions::default()).unwrap();
    let mut memo = HashMap::new();
    let mut max = 0;
    for &off in raw.keys() {
        let d = common::brute_force_depth(raw, off, &mut memo);
        assert_eq!(taxo.node_depth(SynsetId::noun(off)).unwrap(), d);
        max = max.max(d);
    }
    assert_eq!(taxo.max_depth(), max);
}

#[test]
fn wnids_round_trip() {
    for s in db().nouns().step_by(97) {
        let wnid = s.id.to_string();
        assert_eq!(wnid.len(), 9);
        assert_eq!(wnid.parse::<SynsetId>().unwrap(), s.id);
        assert_eq!(db().synset_by_wnid(&wnid).unwrap().id, s.id);
    }
    assert_eq!("n02123045".parse::<SynsetId>().unwrap(), SynsetId::noun(2_123_045));
}

#[test]
fn cat_facts() {
    let db = db();
    let cat = db.resolve("cat").unwrap();
    assert_eq!(cat.id.to_string(), "n02121620");
    assert!(cat.gloss.contains("feline"));
    assert_eq!(db.resolve("cat.n.1").unwrap().id, cat.id);
    assert_eq!(db.synsets_by_lemma("cat", PartOfSpeech::Noun).unwrap().len(), 8);

    let taxo = TaxonomyIndex::build(db, TaxonomyOptions::default()).unwrap();
    let domestic: SynsetId = "n02121808".parse().unwrap();
    let tabby: SynsetId = "n02123045".parse().unwrap();
    let egyptian: SynsetId = "n02124075".parse().unwrap();
    assert_eq!(taxo.parents(tabby).unwrap(), [domestic]);
    assert_eq!(taxo.parents(egyptian).unwrap(), [domestic]);
    // domestic cat is also a domestic animal
    assert_eq!(taxo.parents(domestic).unwrap(), [cat.id, "n01317541".parse().unwrap()]);
    let feline: SynsetId = "n02120997".parse().unwrap();
    assert_eq!(taxo.parents(cat.id).unwrap(), [feline]);
}

#[test]
fn lemma_index_agrees_with_data_lemmas() {
    let raw = raw();
    let mut by_lemma: HashMap<&str, HashSet<u32>> = HashMap::new();
    for (&off, r) in raw {
        for l in &r.lemmas {
            by_lemma.entry(l.as_str()).or_default().insert(off);
        }
    }
    for lemma in ["cat", "tabby", "lynx", "crane", "web_site", "mask", "entity"] {
        let got: HashSet<u32> = db()
            .synsets_by_lemma(lemma, PartOfSpeech::Noun)
            .unwrap()
            .iter()
            .map(|s| s.id.offset)
            .collect();
        assert_eq!(got, by_lemma[lemma], "{lemma}");
    }
}

#[test]
fn full_load_is_fast_enough() {
    let start = Instant::now();
    let db = LexicalDatabase::load(wordnet_dir()).unwrap();
    let taxo = TaxonomyIndex::build(&db, TaxonomyOptions::default()).unwrap();
    assert_eq!(taxo.len(), 82_115);
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn missing_directory_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        LexicalDatabase::load(dir.path()),
        Err(taxoscope::WnError::MissingFile(_))
    ));
}
