//! Seeded synthetic datasets: labeled queries plus a memory corpus.

mod templates;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundTruthLabel, ItemId, MemoryCorpus, MemoryItem, Query, QueryType, Regime};
use crate::signals::SignalProfile;
use crate::store::{StoreId, StoreSet};
use crate::tokenize::{Tokenizer, WhitespaceTokenizer};

pub use templates::{instantiate, Instance};

/// Query types that may receive a conflicting historical fact.
pub const DISTRACTOR_TYPES: [QueryType; 2] = [QueryType::SingleHop, QueryType::KnowledgeUpdate];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_queries: usize,
    pub type_mix: BTreeMap<QueryType, f64>,
    pub split_ratio: f64,
    pub seed: u64,
    pub regime: Regime,
    pub distractor_rate: f64,
    /// Share of queries phrased without any routing cue.
    pub paraphrase_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_queries: 1000,
            type_mix: QueryType::ALL.iter().map(|&t| (t, 1.0)).collect(),
            split_ratio: 0.7,
            seed: 42,
            regime: Regime::Short,
            distractor_rate: 0.2,
            paraphrase_rate: 0.2,
        }
    }
}

fn unit_fraction(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be in [0, 1], got {x}")))
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_queries == 0 {
            return Err(Error::Config("n_queries must be at least 1".into()));
        }
        if self.type_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("type_mix weights must be finite and non-negative".into()));
        }
        if !self.type_mix.values().any(|w| *w > 0.0) {
            return Err(Error::Config("type_mix needs at least one positive weight".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio must be in (0, 1), got {}", self.split_ratio)));
        }
        unit_fraction("distractor_rate", self.distractor_rate)?;
        unit_fraction("paraphrase_rate", self.paraphrase_rate)
    }

    /// Parses `type=weight` pairs separated by commas; unnamed types get 0.
    pub fn parse_mix(spec: &str) -> Result<BTreeMap<QueryType, f64>> {
        let mut mix: BTreeMap<QueryType, f64> = QueryType::ALL.iter().map(|&t| (t, 0.0)).collect();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, weight) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("mix entry `{part}` is not type=weight")))?;
            let t: QueryType = name.trim().parse()?;
            let w: f64 = weight
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad weight in mix entry `{part}`")))?;
            mix.insert(t, w);
        }
        Ok(mix)
    }

    /// Per-type query counts by largest-remainder apportionment; remainder ties
    /// go to the earlier type.
    pub fn type_counts(&self) -> Result<BTreeMap<QueryType, usize>> {
        self.validate()?;
        let total: f64 = self.type_mix.values().sum();
        let n = self.n_queries;
        let mut counts = BTreeMap::new();
        let mut remainders = Vec::new();
        let mut assigned = 0;
        for t in QueryType::ALL {
            let quota = self.type_mix.get(&t).copied().unwrap_or(0.0) / total * n as f64;
            let base = quota.floor() as usize;
            counts.insert(t, base);
            assigned += base;
            remainders.push((quota - base as f64, t));
        }
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.index().cmp(&b.1.index())));
        for (_, t) in remainders.into_iter().take(n - assigned) {
            *counts.get_mut(&t).expect("type present") += 1;
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactSlot {
    pub slot_name: String,
    pub current_value: String,
    pub historical_value: Option<String>,
}

impl FactSlot {
    pub fn new(slot_name: impl Into<String>, current: impl Into<String>, historical: Option<String>) -> Result<Self> {
        let current_value = current.into();
        if historical.as_deref() == Some(current_value.as_str()) {
            return Err(Error::InvalidDataset(format!(
                "fact slot current and historical values are both `{current_value}`"
            )));
        }
        Ok(FactSlot {
            slot_name: slot_name.into(),
            current_value,
            historical_value: historical,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub queries: Vec<Query>,
    pub labels: Vec<GroundTruthLabel>,
    pub corpus: MemoryCorpus,
    pub split: Split,
}

impl Dataset {
    pub fn label_of(&self, query_id: &str) -> Option<&GroundTruthLabel> {
        self.labels.iter().find(|l| l.query_id == query_id)
    }

    /// Queries and labels restricted to the named ids, in dataset order.
    pub fn subset(&self, ids: &[String]) -> (Vec<Query>, Vec<GroundTruthLabel>) {
        let keep: std::collections::BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        let queries: Vec<Query> = self.queries.iter().filter(|q| keep.contains(q.id.as_str())).cloned().collect();
        let labels = self
            .labels
            .iter()
            .filter(|l| keep.contains(l.query_id.as_str()))
            .cloned()
            .collect();
        (queries, labels)
    }
}

/// The flag every explicit template of `t` must trigger.
pub fn canonical_flag(t: QueryType, s: &SignalProfile) -> bool {
    match t {
        QueryType::SingleHop => s.fact_lookup,
        QueryType::SingleSession => s.current_session,
        QueryType::RecentSession => s.past_tense,
        QueryType::MultiHop => s.multi_hop,
        QueryType::MemoryCapacity => s.quantity,
        QueryType::Temporal => s.temporal,
        QueryType::KnowledgeUpdate => s.possessive_pronoun,
    }
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(4)
}

pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset> {
    let counts = config.type_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<QueryType> = counts.iter().flat_map(|(&t, &c)| std::iter::repeat(t).take(c)).collect();
    order.shuffle(&mut rng);

    let width = id_width(config.n_queries);
    let mut queries = Vec::with_capacity(order.len());
    let mut planted: Vec<MemoryItem> = Vec::new();
    for (i, &t) in order.iter().enumerate() {
        let id = format!("q{i:0width$}");
        let paraphrase = rng.gen_bool(config.paraphrase_rate);
        let distractor = DISTRACTOR_TYPES.contains(&t) && rng.gen_bool(config.distractor_rate);
        let inst = instantiate(t, &mut rng, paraphrase, distractor);
        for (store, text) in inst.answer_items {
            planted.push(MemoryItem {
                store,
                text,
                planted_answer_for: Some(id.clone()),
                is_distractor_for: None,
            });
        }
        for (store, text) in inst.distractor_items {
            planted.push(MemoryItem {
                store,
                text,
                planted_answer_for: None,
                is_distractor_for: Some(id.clone()),
            });
        }
        queries.push(Query {
            id,
            text: inst.text,
            query_type: t,
            answer: inst.answer,
            regime: config.regime,
        });
    }

    let tok = WhitespaceTokenizer;
    let filler_target = config.regime.target_tokens().saturating_sub(10);
    let mut items = Vec::new();
    for store in StoreId::ALL {
        let mut tokens = 0;
        while tokens < filler_target {
            let text = templates::filler_sentence(store, &mut rng);
            tokens += tok.count(&text);
            items.push(MemoryItem::filler(store, text));
        }
        items.extend(planted.iter().filter(|it| it.store == store).cloned());
    }

    let mut ids: Vec<&str> = queries.iter().map(|q| q.id.as_str()).collect();
    ids.shuffle(&mut rng);
    let n_train = (config.n_queries as f64 * config.split_ratio).round() as usize;
    let mut train: Vec<String> = ids[..n_train].iter().map(|s| s.to_string()).collect();
    let mut test: Vec<String> = ids[n_train..].iter().map(|s| s.to_string()).collect();
    train.sort();
    test.sort();

    let labels = queries.iter().map(GroundTruthLabel::for_query).collect();
    let dataset = Dataset {
        queries,
        labels,
        corpus: MemoryCorpus {
            regime: config.regime,
            items,
        },
        split: Split { train, test },
    };
    validate_dataset(&dataset)?;
    Ok(dataset)
}

/// Checks label and corpus soundness of a dataset.
pub fn validate_dataset(ds: &Dataset) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for q in &ds.queries {
        if q.text.trim().is_empty() || q.answer.trim().is_empty() {
            return Err(Error::InvalidDataset(format!("query {} has empty text or answer", q.id)));
        }
        if !seen.insert(q.id.as_str()) {
            return Err(Error::InvalidDataset(format!("duplicate query id {}", q.id)));
        }
    }
    if ds.labels.len() != ds.queries.len() {
        return Err(Error::LengthMismatch {
            left: ds.queries.len(),
            right: ds.labels.len(),
        });
    }
    for item in &ds.corpus.items {
        if item.planted_answer_for.is_some() && item.planted_answer_for == item.is_distractor_for {
            return Err(Error::InvalidDataset(format!("item `{}` is both answer and distractor", item.text)));
        }
    }
    let filler: Vec<String> = ds.corpus.items.iter().filter(|i| i.is_shared()).map(|i| i.text.clone()).collect();
    let keys = generate_qa_pack(&ds.queries, &ds.labels, &ds.corpus)?;
    for (q, key) in ds.queries.iter().zip(&keys) {
        templates::check_answer_not_in_filler(&q.answer, &filler)?;
        for &d in &key.distractor_items {
            if ds.corpus.items[d].text.contains(&q.answer) {
                return Err(Error::InvalidDataset(format!("distractor for {} contains its answer", q.id)));
            }
        }
        for &a in &key.answer_items {
            if !ds.corpus.items[a].text.contains(&q.answer) {
                return Err(Error::InvalidDataset(format!("answer item for {} lacks its answer", q.id)));
            }
        }
    }
    Ok(())
}

/// Where a query's answer and distractors live in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub query_id: String,
    pub answer: String,
    pub required: StoreSet,
    pub answer_items: Vec<ItemId>,
    pub distractor_items: Vec<ItemId>,
}

impl AnswerKey {
    /// Stores holding at least one answer item.
    pub fn answer_stores(&self, corpus: &MemoryCorpus) -> StoreSet {
        self.answer_items.iter().map(|&i| corpus.items[i].store).collect()
    }
}

/// Links each labeled query to its planted answer and distractor items.
pub fn generate_qa_pack(queries: &[Query], labels: &[GroundTruthLabel], corpus: &MemoryCorpus) -> Result<Vec<AnswerKey>> {
    let label_by_id: BTreeMap<&str, StoreSet> = labels.iter().map(|l| (l.query_id.as_str(), l.stores)).collect();
    let mut keys: BTreeMap<&str, AnswerKey> = BTreeMap::new();
    for q in queries {
        let required = *label_by_id.get(q.id.as_str()).ok_or_else(|| Error::MissingLabel(q.id.clone()))?;
        if required.is_empty() {
            return Err(Error::InvalidDataset(format!("query {} has an empty label", q.id)));
        }
        keys.insert(
            q.id.as_str(),
            AnswerKey {
                query_id: q.id.clone(),
                answer: q.answer.clone(),
                required,
                answer_items: Vec::new(),
                distractor_items: Vec::new(),
            },
        );
    }
    for (i, item) in corpus.items.iter().enumerate() {
        if let Some(qid) = &item.planted_answer_for {
            keys.get_mut(qid.as_str())
                .ok_or_else(|| Error::InvalidDataset(format!("item {i} references unknown query {qid}")))?
                .answer_items
                .push(i);
        }
        if let Some(qid) = &item.is_distractor_for {
            keys.get_mut(qid.as_str())
                .ok_or_else(|| Error::InvalidDataset(format!("distractor {i} references unknown query {qid}")))?
                .distractor_items
                .push(i);
        }
    }
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        let key = keys.remove(q.id.as_str()).expect("inserted above");
        let have = key.answer_stores(corpus);
        if !key.required.is_subset(have) {
            return Err(Error::InvalidDataset(format!(
                "query {} lacks answer items in {}",
                q.id,
                key.required.difference(have)
            )));
        }
        out.push(key);
    }
    Ok(out)
}
