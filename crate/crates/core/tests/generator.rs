use std::collections::BTreeMap;

use memroute::io::{write_dataset, CORPUS_FILE, MANIFEST_FILE, QUERIES_FILE, SPLIT_FILE};
use memroute::policy::{Router, DEFAULT_SIMILARITY_THRESHOLD, FALLBACK};
use memroute::signals::extract_signals;
use memroute::synthgen::{canonical_flag, generate_dataset, generate_qa_pack, Dataset, GeneratorConfig};
use memroute::tokenize::{Tokenizer, WhitespaceTokenizer};
use memroute::{label_for_type, QueryType, Regime, StoreId, StoreSet, ViewIndex};
use proptest::prelude::*;

fn config(n: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n_queries: n,
        seed,
        ..Default::default()
    }
}

fn view_tokens(ds: &Dataset, views: &ViewIndex<'_>, qid: &str, store: StoreId) -> usize {
    views
        .view(qid, store)
        .into_iter()
        .map(|i| WhitespaceTokenizer.count(&ds.corpus.items[i].text))
        .sum()
}

fn assert_sound(ds: &Dataset) {
    let views = ViewIndex::new(&ds.corpus);
    for (q, l) in ds.queries.iter().zip(&ds.labels) {
        assert_eq!(l.stores, label_for_type(q.query_type));
        for store in StoreId::ALL {
            let texts: Vec<&str> = views
                .view(&q.id, store)
                .into_iter()
                .map(|i| ds.corpus.items[i].text.as_str())
                .collect();
            let has_answer = texts.iter().any(|t| t.contains(&q.answer));
            assert_eq!(has_answer, l.stores.contains(store), "{} {store}: {:?}", q.id, q.text);
        }
    }
}

#[test]
fn default_dataset_shape() {
    let ds = generate_dataset(&GeneratorConfig::default()).unwrap();
    assert_eq!(ds.queries.len(), 1000);
    assert_eq!(ds.split.train.len(), 700);
    assert_eq!(ds.split.test.len(), 300);
    let mut ids: Vec<&String> = ds.split.train.iter().chain(&ds.split.test).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 1000);

    let mut counts: BTreeMap<QueryType, usize> = BTreeMap::new();
    for q in &ds.queries {
        *counts.entry(q.query_type).or_default() += 1;
    }
    for t in QueryType::ALL {
        let c = counts[&t] as f64;
        assert!((c - 1000.0 / 7.0).abs() <= 1.0, "{t}: {c}");
    }
    assert_sound(&ds);
}

#[test]
fn seven_queries_one_per_type() {
    let ds = generate_dataset(&config(7, 3)).unwrap();
    let mut types: Vec<QueryType> = ds.queries.iter().map(|q| q.query_type).collect();
    types.sort();
    assert_eq!(types, QueryType::ALL.to_vec());
}

#[test]
fn degenerate_mix() {
    let cfg = GeneratorConfig {
        n_queries: 50,
        type_mix: GeneratorConfig::parse_mix("temporal=1").unwrap(),
        ..Default::default()
    };
    let ds = generate_dataset(&cfg).unwrap();
    assert!(ds.queries.iter().all(|q| q.query_type == QueryType::Temporal));
    assert!(ds
        .labels
        .iter()
        .all(|l| l.stores == StoreSet::of(&[StoreId::LongTerm, StoreId::Episodic])));
}

#[test]
fn files_are_byte_identical_across_runs() {
    let cfg = config(200, 42);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_dataset(a.path(), &generate_dataset(&cfg).unwrap(), &cfg).unwrap();
    write_dataset(b.path(), &generate_dataset(&cfg).unwrap(), &cfg).unwrap();
    for name in [QUERIES_FILE, CORPUS_FILE, SPLIT_FILE, MANIFEST_FILE] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let other = config(200, 43);
    let c = tempfile::tempdir().unwrap();
    write_dataset(c.path(), &generate_dataset(&other).unwrap(), &other).unwrap();
    assert_ne!(
        std::fs::read(a.path().join(QUERIES_FILE)).unwrap(),
        std::fs::read(c.path().join(QUERIES_FILE)).unwrap()
    );
}

#[test]
fn store_views_hit_regime_targets() {
    for regime in [Regime::Short, Regime::Long] {
        let ds = generate_dataset(&GeneratorConfig {
            n_queries: 300,
            regime,
            ..Default::default()
        })
        .unwrap();
        let target = regime.target_tokens() as f64;
        let views = ViewIndex::new(&ds.corpus);
        for q in &ds.queries {
            for store in StoreId::ALL {
                let t = view_tokens(&ds, &views, &q.id, store) as f64;
                assert!((t - target).abs() <= 0.25 * target, "{regime} {} {store}: {t}", q.id);
            }
        }
    }
}

#[test]
fn explicit_cues_give_hybrid_coverage_by_construction() {
    let router = Router::default();
    for seed in 0..5 {
        let ds = generate_dataset(&GeneratorConfig {
            n_queries: 700,
            seed,
            paraphrase_rate: 0.0,
            ..Default::default()
        })
        .unwrap();
        for (q, l) in ds.queries.iter().zip(&ds.labels) {
            assert!(canonical_flag(q.query_type, &extract_signals(&q.text)), "{}", q.text);
            let d = router.route_hybrid(q, Some(DEFAULT_SIMILARITY_THRESHOLD));
            match q.query_type {
                QueryType::RecentSession | QueryType::KnowledgeUpdate => {
                    assert!(FALLBACK.is_subset(d.stores), "{}: {}", q.text, d.stores);
                    assert!(l.stores.is_subset(d.stores));
                }
                _ => assert_eq!(d.stores, l.stores, "{}", q.text),
            }
        }
    }
}

#[test]
fn answer_keys_reflect_construction() {
    let ds = generate_dataset(&GeneratorConfig {
        n_queries: 140,
        distractor_rate: 1.0,
        ..Default::default()
    })
    .unwrap();
    let keys = generate_qa_pack(&ds.queries, &ds.labels, &ds.corpus).unwrap();
    for (q, k) in ds.queries.iter().zip(&keys) {
        let stores_of = |ids: &[usize]| ids.iter().map(|&i| ds.corpus.items[i].store).collect::<Vec<_>>();
        match q.query_type {
            QueryType::SingleHop => {
                assert_eq!(stores_of(&k.answer_items), vec![StoreId::Summary]);
                assert_eq!(stores_of(&k.distractor_items), vec![StoreId::LongTerm]);
            }
            QueryType::KnowledgeUpdate => {
                assert_eq!(stores_of(&k.answer_items), vec![StoreId::Summary, StoreId::LongTerm]);
                assert_eq!(stores_of(&k.distractor_items), vec![StoreId::LongTerm]);
                let sum = &ds.corpus.items[k.answer_items[0]].text;
                let ltm = &ds.corpus.items[k.answer_items[1]].text;
                let old = &ds.corpus.items[k.distractor_items[0]].text;
                assert!(sum.contains(&q.answer) && ltm.contains(&q.answer) && !old.contains(&q.answer));
            }
            _ => assert!(k.distractor_items.is_empty()),
        }
        assert_eq!(k.answer_items.iter().map(|&i| ds.corpus.items[i].store).collect::<StoreSet>(), k.required);
    }

    let none = generate_dataset(&GeneratorConfig {
        n_queries: 140,
        distractor_rate: 0.0,
        ..Default::default()
    })
    .unwrap();
    let keys = generate_qa_pack(&none.queries, &none.labels, &none.corpus).unwrap();
    assert!(keys.iter().all(|k| k.distractor_items.is_empty()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_configs_generate_sound_data(
        n in 1usize..80,
        seed in any::<u64>(),
        weights in proptest::collection::vec(0u8..4, 7),
        split in 0.05f64..0.95,
        distractor in 0.0f64..=1.0,
        paraphrase in 0.0f64..=1.0,
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let cfg = GeneratorConfig {
            n_queries: n,
            seed,
            type_mix: QueryType::ALL.iter().zip(&weights).map(|(&t, &w)| (t, f64::from(w))).collect(),
            split_ratio: split,
            distractor_rate: distractor,
            paraphrase_rate: paraphrase,
            regime: Regime::Short,
        };
        let ds = generate_dataset(&cfg).unwrap();
        prop_assert_eq!(ds.queries.len(), n);
        prop_assert_eq!(ds.split.train.len(), (n as f64 * split).round() as usize);
        let total: f64 = weights.iter().map(|&w| f64::from(w)).sum();
        for (t, &w) in QueryType::ALL.iter().zip(&weights) {
            let c = ds.queries.iter().filter(|q| q.query_type == *t).count() as f64;
            prop_assert!((c - f64::from(w) / total * n as f64).abs() < 1.0);
        }
        assert_sound(&ds);
        prop_assert_eq!(generate_dataset(&cfg).unwrap(), ds);
    }
}
