//! Queries, labels, route decisions, memory content and the cost model.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::store::{StoreId, StoreSet};

/// Query taxonomy classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    SingleHop,
    SingleSession,
    RecentSession,
    MultiHop,
    MemoryCapacity,
    Temporal,
    KnowledgeUpdate,
}

impl QueryType {
    pub const ALL: [QueryType; 7] = [
        QueryType::SingleHop,
        QueryType::SingleSession,
        QueryType::RecentSession,
        QueryType::MultiHop,
        QueryType::MemoryCapacity,
        QueryType::Temporal,
        QueryType::KnowledgeUpdate,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            QueryType::SingleHop => "single_hop",
            QueryType::SingleSession => "single_session",
            QueryType::RecentSession => "recent_session",
            QueryType::MultiHop => "multi_hop",
            QueryType::MemoryCapacity => "memory_capacity",
            QueryType::Temporal => "temporal",
            QueryType::KnowledgeUpdate => "knowledge_update",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryType::ALL
            .into_iter()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| Error::UnknownQueryType(s.to_string()))
    }
}

/// Ground-truth store set for a query type.
pub const fn label_for_type(t: QueryType) -> StoreSet {
    use StoreId::*;
    let bits = match t {
        QueryType::SingleHop => Summary.bit(),
        QueryType::SingleSession => ShortTerm.bit(),
        QueryType::RecentSession => LongTerm.bit(),
        QueryType::MultiHop => Summary.bit() | LongTerm.bit(),
        QueryType::MemoryCapacity => LongTerm.bit() | Episodic.bit(),
        QueryType::Temporal => LongTerm.bit() | Episodic.bit(),
        QueryType::KnowledgeUpdate => Summary.bit() | LongTerm.bit(),
    };
    match StoreSet::from_bits(bits) {
        Some(set) => set,
        None => unreachable!(),
    }
}

/// Context regime: how much content each store holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Short,
    Long,
}

impl Regime {
    /// Approximate tokens retrieved per store.
    pub const fn target_tokens(self) -> usize {
        match self {
            Regime::Short => 200,
            Regime::Long => 1000,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Regime::Short => "short",
            Regime::Long => "long",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "short" => Ok(Regime::Short),
            "long" => Ok(Regime::Long),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub query_type: QueryType,
    pub answer: String,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthLabel {
    pub query_id: String,
    pub stores: StoreSet,
}

impl GroundTruthLabel {
    pub fn for_query(query: &Query) -> Self {
        GroundTruthLabel {
            query_id: query.id.clone(),
            stores: label_for_type(query.query_type),
        }
    }
}

/// Which rule or signal produced a route decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Uniform,
    Oracle,
    Fixed,
    // linguistic router
    CurrentSession,
    PossessivePresent,
    PossessivePast,
    PastTense,
    LinguisticDefault,
    // hybrid router
    Quantity,
    Temporal,
    MultiHop,
    FactLookup,
    SimilarityTiebreak,
    Fallback,
    CostSensitive { lambda: f64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Provenance::Uniform => "uniform",
            Provenance::Oracle => "oracle",
            Provenance::Fixed => "fixed",
            Provenance::CurrentSession => "current-session-rule",
            Provenance::PossessivePresent => "possessive-present-rule",
            Provenance::PossessivePast => "possessive-past-rule",
            Provenance::PastTense => "past-tense-rule",
            Provenance::LinguisticDefault => "linguistic-default",
            Provenance::Quantity => "quantity-rule",
            Provenance::Temporal => "temporal-rule",
            Provenance::MultiHop => "multi-hop-rule",
            Provenance::FactLookup => "fact-lookup-rule",
            Provenance::SimilarityTiebreak => "similarity-tiebreak",
            Provenance::Fallback => "fallback",
            Provenance::CostSensitive { lambda } => {
                return write!(f, "cost-sensitive(λ={lambda})");
            }
        };
        f.write_str(tag)
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteDecision {
    pub query_id: String,
    pub stores: StoreSet,
    pub provenance: Provenance,
}

/// Position of an item in its corpus.
pub type ItemId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryItem {
    pub store: StoreId,
    pub text: String,
    pub planted_answer_for: Option<String>,
    pub is_distractor_for: Option<String>,
}

impl MemoryItem {
    pub fn filler(store: StoreId, text: impl Into<String>) -> Self {
        MemoryItem {
            store,
            text: text.into(),
            planted_answer_for: None,
            is_distractor_for: None,
        }
    }

    /// Shared background content, visible to every query.
    pub fn is_shared(&self) -> bool {
        self.planted_answer_for.is_none() && self.is_distractor_for.is_none()
    }

    /// Whether the item is part of the memory visible when `query_id` is asked.
    pub fn visible_to(&self, query_id: &str) -> bool {
        self.is_shared()
            || self.planted_answer_for.as_deref() == Some(query_id)
            || self.is_distractor_for.as_deref() == Some(query_id)
    }
}

/// Store contents for one regime.
///
/// Items without a query reference are shared background content; items that
/// reference a query belong only to that query's memory view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryCorpus {
    pub regime: Regime,
    pub items: Vec<MemoryItem>,
}

impl MemoryCorpus {
    /// Items of `store` visible to `query_id`, in corpus order.
    pub fn view<'a>(
        &'a self,
        query_id: &'a str,
        store: StoreId,
    ) -> impl Iterator<Item = (ItemId, &'a MemoryItem)> + 'a {
        self.items
            .iter()
            .enumerate()
            .filter(move |(_, item)| item.store == store && item.visible_to(query_id))
    }

    pub fn store_items(&self, store: StoreId) -> impl Iterator<Item = &MemoryItem> {
        self.items.iter().filter(move |item| item.store == store)
    }
}

/// Precomputed per-query memory views over a corpus.
#[derive(Debug, Clone)]
pub struct ViewIndex<'c> {
    corpus: &'c MemoryCorpus,
    shared: [Vec<ItemId>; 4],
    owned: HashMap<&'c str, [Vec<ItemId>; 4]>,
}

impl<'c> ViewIndex<'c> {
    pub fn new(corpus: &'c MemoryCorpus) -> Self {
        let mut shared: [Vec<ItemId>; 4] = Default::default();
        let mut owned: HashMap<&'c str, [Vec<ItemId>; 4]> = HashMap::new();
        for (i, item) in corpus.items.iter().enumerate() {
            let s = item.store.index();
            if item.is_shared() {
                shared[s].push(i);
                continue;
            }
            let mut owners = [item.planted_answer_for.as_deref(), item.is_distractor_for.as_deref()];
            if owners[0] == owners[1] {
                owners[1] = None;
            }
            for q in owners.into_iter().flatten() {
                owned.entry(q).or_default()[s].push(i);
            }
        }
        ViewIndex { corpus, shared, owned }
    }

    pub fn corpus(&self) -> &'c MemoryCorpus {
        self.corpus
    }

    /// Item ids of `store` visible to `query_id`, in corpus order.
    pub fn view(&self, query_id: &str, store: StoreId) -> Vec<ItemId> {
        let s = store.index();
        let mine = self.owned.get(query_id).map(|v| v[s].as_slice()).unwrap_or(&[]);
        let mut out: Vec<ItemId> = self.shared[s].iter().chain(mine).copied().collect();
        out.sort_unstable();
        out
    }
}

/// Per-store access costs plus the tokenizer tag used for context counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub per_store_access_cost: [f64; 4],
    pub tokenizer: String,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            per_store_access_cost: [1.0, 1.0, 3.0, 5.0],
            tokenizer: crate::tokenize::WHITESPACE.to_string(),
        }
    }
}

impl CostModel {
    pub fn new(per_store_access_cost: [f64; 4], tokenizer: impl Into<String>) -> Result<Self> {
        if per_store_access_cost
            .iter()
            .any(|c| !c.is_finite() || *c < 0.0)
        {
            return Err(Error::Config(format!(
                "store access costs must be finite and non-negative, got {per_store_access_cost:?}"
            )));
        }
        Ok(CostModel {
            per_store_access_cost,
            tokenizer: tokenizer.into(),
        })
    }

    pub fn cost(&self, store: StoreId) -> f64 {
        self.per_store_access_cost[store.index()]
    }
}

pub fn access_cost(stores: StoreSet, model: &CostModel) -> f64 {
    stores.iter().map(|s| model.cost(s)).sum()
}
