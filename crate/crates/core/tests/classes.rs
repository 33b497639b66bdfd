mod common;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::OnceLock;

use taxoscope::classmap::ClassMapError;
use taxoscope::evalx::{relation_tag, resolve_label, PredictedClass, RelationTag};
use taxoscope::{build_class_set, ClassSet, LabelVocabulary, LexicalDatabase, SynsetId, TaxonomyIndex, TaxonomyOptions};

use common::{fixture, wordnet_dir};

struct World {
    db: LexicalDatabase,
    taxo: TaxonomyIndex,
}

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(|| {
        let db = LexicalDatabase::load(wordnet_dir()).unwrap();
        let taxo = TaxonomyIndex::build(&db, TaxonomyOptions::default()).unwrap();
        World { db, taxo }
    })
}

fn normalize(name: &str) -> String {
    name.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join("_")
}

const CASE_STUDY: [&str; 9] = [
    "angora cat",
    "cougar cat",
    "egyptian cat",
    "leopard cat",
    "lynx cat",
    "persian cat",
    "siamese cat",
    "tabby cat",
    "tiger cat",
];

#[test]
fn imagenet_vocabulary_resolves_completely() {
    let w = world();
    let vocab = LabelVocabulary::load(fixture("imagenet1k.tsv"), &w.db).unwrap();
    assert_eq!(vocab.len(), 1_000);
    assert!(vocab.unresolved().is_empty());
    for e in vocab.entries() {
        assert_eq!(vocab.synset_of(&e.wnid.to_string()).unwrap(), e.wnid);
        assert_eq!(vocab.label_of(e.wnid).unwrap().label_id, e.label_id);
        assert_eq!(vocab.by_label_id(e.label_id).unwrap().wnid, e.wnid);
    }
    assert_eq!(vocab.synset_of("tabby").unwrap().to_string(), "n02123045");
    assert_eq!(vocab.synset_of("281").unwrap().to_string(), "n02123045");
    assert!(matches!(vocab.synset_of("angora cat"), Err(ClassMapError::Unmapped(_))));
}

#[test]
fn cat_query_gives_the_case_study_classes() {
    let w = world();
    let vocab = LabelVocabulary::load(fixture("cat21k.tsv"), &w.db).unwrap();
    let set = build_class_set(&w.db, &w.taxo, &vocab, "cat", None).unwrap();
    assert_eq!(set.query.to_string(), "n02121620");
    let names: BTreeSet<String> = set.members.iter().map(|m| normalize(&m.name)).collect();
    let want: BTreeSet<String> = CASE_STUDY.iter().map(|n| normalize(n)).collect();
    assert_eq!(names, want);
    assert!(set.members.windows(2).all(|p| p[0].synset < p[1].synset));

    // every member is reached by hyponym links; rebuild the path by BFS over children
    for m in &set.members {
        let mut prev: HashMap<SynsetId, SynsetId> = HashMap::new();
        let mut queue = VecDeque::from([set.query]);
        while let Some(n) = queue.pop_front() {
            if n == m.synset {
                break;
            }
            for c in w.taxo.children(n).unwrap() {
                if c != set.query && !prev.contains_key(&c) {
                    prev.insert(c, n);
                    queue.push_back(c);
                }
            }
        }
        let mut hops = 0;
        let mut at = m.synset;
        while at != set.query {
            let p = prev[&at];
            assert!(w.taxo.parents(at).unwrap().contains(&p));
            at = p;
            hops += 1;
        }
        assert_eq!(hops, m.hops);
    }

    let again = build_class_set(&w.db, &w.taxo, &vocab, "cat.n.1", None).unwrap();
    assert_eq!(again, set);
    let round = ClassSet::from_tsv(&set.to_tsv(), "roundtrip").unwrap();
    assert_eq!(round, set);
}

#[test]
fn depth_one_is_a_strict_subset() {
    let w = world();
    let vocab = LabelVocabulary::load(fixture("cat21k.tsv"), &w.db).unwrap();
    let full = build_class_set(&w.db, &w.taxo, &vocab, "cat", None).unwrap();
    let shallow = build_class_set(&w.db, &w.taxo, &vocab, "cat", Some(1)).unwrap();
    let direct: BTreeSet<SynsetId> = w.taxo.children(full.query).unwrap().into_iter().collect();
    let got: BTreeSet<SynsetId> = shallow.wnids().collect();
    let all: BTreeSet<SynsetId> = full.wnids().collect();
    assert!(got.is_subset(&all) && got.len() < all.len());
    assert_eq!(got, all.intersection(&direct).copied().collect());
    // the nine breeds and wild cats all sit two levels below cat
    assert!(shallow.is_empty());
    let two = build_class_set(&w.db, &w.taxo, &vocab, "cat", Some(2)).unwrap();
    assert_eq!(two, ClassSet { traversal_depth: Some(2), ..full });
}

#[test]
fn query_outside_the_vocabulary_gives_an_empty_set() {
    let w = world();
    let vocab = LabelVocabulary::load(fixture("cat21k.tsv"), &w.db).unwrap();
    let set = build_class_set(&w.db, &w.taxo, &vocab, "furniture", None).unwrap();
    assert!(set.is_empty());
    assert!(build_class_set(&w.db, &w.taxo, &vocab, "xyzzyplugh", None).is_err());
}

#[test]
fn relation_tags_on_wordnet() {
    let w = world();
    let vocab = LabelVocabulary::load(fixture("cat21k.tsv"), &w.db).unwrap();
    let id = |s: &str| s.parse::<SynsetId>().unwrap();
    let cat = id("n02121620");
    let tag = |gt: &str, label: &str| {
        relation_tag(id(gt), &resolve_label(label, &vocab, &w.taxo), &w.taxo, Some(cat), 4)
    };
    assert_eq!(tag("n02123045", "tiger cat"), RelationTag::Sibling);
    assert_eq!(tag("n02121620", "feline"), RelationTag::Hypernym1Hop);
    assert_eq!(tag("n02124075", "mask"), RelationTag::Distant);
    assert_eq!(tag("n02123045", "n02123045"), RelationTag::Exact);
    assert_eq!(tag("n02123045", "lynx cat"), RelationTag::Kin);
    assert_eq!(tag("n02121808", "tabby cat"), RelationTag::Hyponym1Hop);
    assert_eq!(
        resolve_label("space heater", &vocab, &w.taxo),
        PredictedClass::Unmapped("space heater".into())
    );
    assert_eq!(tag("n02123045", "space heater"), RelationTag::Distant);
}
