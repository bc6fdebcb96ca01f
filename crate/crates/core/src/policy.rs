//! Routing policies.
//!
//! Policy strings follow a small grammar: `uniform`, `oracle`, `none`,
//! `rules`, `hybrid[:τ]`, `cost:λ[:hybrid]`, or a `+`-joined store list such
//! as `stm+sum+ltm` (`summary`, `episodic` are accepted as aliases).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{access_cost, CostModel, GroundTruthLabel, Provenance, Query, RouteDecision};
use crate::signals::{SignalExtractor, SignalProfile, SimilarityIndex};
use crate::store::{StoreId, StoreSet};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.15;

/// The conservative fallback used when no hybrid rule fires.
pub const FALLBACK: StoreSet = StoreSet::FULL
    .difference(StoreSet::single(StoreId::ShortTerm))
    .difference(StoreSet::single(StoreId::Episodic));

/// The twelve policies of the full comparison table, by row name.
pub const BENCH_POLICIES: [&str; 12] = [
    "oracle",
    "stm+sum+ltm",
    "uniform",
    "summary+ltm",
    "hybrid",
    "ltm",
    "ltm+episodic",
    "stm+summary",
    "summary",
    "episodic",
    "stm",
    "none",
];

/// Where the cost-sensitive router takes its estimate of the required stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Oracle,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Uniform,
    Oracle,
    Fixed(StoreSet),
    RuleBased,
    /// `None` disables the similarity tiebreaker.
    Hybrid { threshold: Option<f64> },
    CostSensitive { lambda: f64, labels: LabelSource },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    /// Row name; the policy string as given.
    pub name: String,
    pub kind: PolicyKind,
}

impl PolicySpec {
    pub fn new(name: impl Into<String>, kind: PolicyKind) -> Self {
        PolicySpec {
            name: name.into(),
            kind,
        }
    }

    pub fn needs_label(&self) -> bool {
        matches!(
            self.kind,
            PolicyKind::Oracle
                | PolicyKind::CostSensitive {
                    labels: LabelSource::Oracle,
                    ..
                }
        )
    }
}

impl PolicySpec {
    /// Parses a policy string; bare `hybrid` takes threshold `tau`.
    pub fn parse_with_threshold(s: &str, tau: f64) -> Result<Self> {
        let mut spec: PolicySpec = s.parse()?;
        if spec.name == "hybrid" {
            spec.kind = PolicyKind::Hybrid { threshold: Some(tau) };
        }
        Ok(spec)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn parse_number(policy: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::UnknownPolicy(policy.to_string()))
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        let unknown = || Error::UnknownPolicy(s.to_string());
        let kind = match name.as_str() {
            "" => return Err(unknown()),
            "uniform" => PolicyKind::Uniform,
            "oracle" => PolicyKind::Oracle,
            "none" => PolicyKind::Fixed(StoreSet::EMPTY),
            "rules" => PolicyKind::RuleBased,
            "hybrid" => PolicyKind::Hybrid {
                threshold: Some(DEFAULT_SIMILARITY_THRESHOLD),
            },
            _ => {
                if let Some(tau) = name.strip_prefix("hybrid:") {
                    let tau = parse_number(s, tau)?;
                    if !(0.0..=1.0).contains(&tau) {
                        return Err(unknown());
                    }
                    PolicyKind::Hybrid {
                        threshold: Some(tau),
                    }
                } else if let Some(rest) = name.strip_prefix("cost:") {
                    let (lambda, labels) = match rest.split_once(':') {
                        Some((l, "hybrid")) => (l, LabelSource::Hybrid),
                        Some((l, "oracle")) => (l, LabelSource::Oracle),
                        Some(_) => return Err(unknown()),
                        None => (rest, LabelSource::Oracle),
                    };
                    let lambda = parse_number(s, lambda)?;
                    if lambda < 0.0 {
                        return Err(unknown());
                    }
                    PolicyKind::CostSensitive { lambda, labels }
                } else {
                    let stores = name
                        .split('+')
                        .map(|p| p.parse::<StoreId>().map_err(|_| unknown()))
                        .collect::<Result<Vec<_>>>()?;
                    PolicyKind::Fixed(StoreSet::of(&stores))
                }
            }
        };
        Ok(PolicySpec { name, kind })
    }
}

/// Expected answer accuracy as a function of the retrieved set.
///
/// `alpha` when every required store is retrieved, minus `gamma` per extra
/// store (never below `beta`); `beta` when a required store is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for AccuracyModel {
    fn default() -> Self {
        AccuracyModel {
            alpha: 0.9,
            beta: 0.1,
            gamma: 0.02,
        }
    }
}

impl AccuracyModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let m = AccuracyModel { alpha, beta, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let AccuracyModel { alpha, beta, gamma } = *self;
        if !(0.0 <= beta && beta <= alpha && alpha <= 1.0 && gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "accuracy model needs 0 <= beta <= alpha <= 1 and gamma >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn estimate(&self, required: StoreSet, selected: StoreSet) -> f64 {
        if required.is_subset(selected) {
            let wasted = selected.difference(required).len() as f64;
            (self.alpha - self.gamma * wasted).clamp(self.beta, 1.0)
        } else {
            self.beta
        }
    }
}

/// Result of the exhaustive subset search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSensitiveChoice {
    pub stores: StoreSet,
    pub objective: f64,
    pub estimated_accuracy: f64,
}

const TIE_EPS: f64 = 1e-12;

/// Objective value `Acc(G) − λ·Σ c_s` of one candidate set.
pub fn objective(
    required: StoreSet,
    selected: StoreSet,
    acc: &AccuracyModel,
    cost: &CostModel,
    lambda: f64,
) -> f64 {
    acc.estimate(required, selected) - lambda * access_cost(selected, cost)
}

/// Evaluates all 16 subsets and returns the maximizer. Ties go to the lower
/// access cost, then to the lexicographically smaller member list.
pub fn optimize_subset(
    required: StoreSet,
    acc: &AccuracyModel,
    cost: &CostModel,
    lambda: f64,
) -> CostSensitiveChoice {
    let rank = |a: &(StoreSet, f64), b: &(StoreSet, f64)| -> Ordering {
        if (a.1 - b.1).abs() > TIE_EPS {
            return a.1.total_cmp(&b.1);
        }
        let (ca, cb) = (access_cost(a.0, cost), access_cost(b.0, cost));
        if (ca - cb).abs() > TIE_EPS {
            // cheaper ranks higher
            return cb.total_cmp(&ca);
        }
        b.0.to_vec().cmp(&a.0.to_vec())
    };
    let (stores, objective) = StoreSet::all_subsets()
        .map(|g| (g, objective(required, g, acc, cost, lambda)))
        .max_by(rank)
        .expect("16 candidates");
    CostSensitiveChoice {
        stores,
        objective,
        estimated_accuracy: acc.estimate(required, stores),
    }
}

/// Everything a router needs besides the query.
#[derive(Debug, Clone)]
pub struct Router {
    pub extractor: SignalExtractor,
    pub similarity: SimilarityIndex,
    pub accuracy: AccuracyModel,
    pub cost: CostModel,
    /// Similarity threshold used when the hybrid router feeds the optimizer.
    pub threshold: f64,
}

impl Default for Router {
    fn default() -> Self {
        Router {
            extractor: SignalExtractor::default(),
            similarity: SimilarityIndex::default(),
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            accuracy: AccuracyModel::default(),
            cost: CostModel::default(),
        }
    }
}

fn decision(query: &Query, stores: StoreSet, provenance: Provenance) -> RouteDecision {
    RouteDecision {
        query_id: query.id.clone(),
        stores,
        provenance,
    }
}

impl Router {
    pub fn route(
        &self,
        spec: &PolicySpec,
        query: &Query,
        label: Option<&GroundTruthLabel>,
    ) -> Result<RouteDecision> {
        match spec.kind {
            PolicyKind::Uniform => Ok(route_uniform(query)),
            PolicyKind::Oracle => {
                let label = label.ok_or_else(|| Error::MissingLabel(query.id.clone()))?;
                route_oracle(query, label)
            }
            PolicyKind::Fixed(set) => Ok(route_fixed(query, set)),
            PolicyKind::RuleBased => Ok(self.route_rule_based(query)),
            PolicyKind::Hybrid { threshold } => Ok(self.route_hybrid(query, threshold)),
            PolicyKind::CostSensitive { lambda, labels } => {
                let estimate = match labels {
                    LabelSource::Oracle => {
                        let label = label.ok_or_else(|| Error::MissingLabel(query.id.clone()))?;
                        if label.query_id != query.id {
                            return Err(Error::LabelMismatch {
                                expected: query.id.clone(),
                                found: label.query_id.clone(),
                            });
                        }
                        label.stores
                    }
                    LabelSource::Hybrid => {
                        self.route_hybrid(query, Some(self.threshold)).stores
                    }
                };
                Ok(self.route_cost_sensitive(query, estimate, lambda))
            }
        }
    }

    /// Linguistic-only routing from pronoun and tense cues.
    pub fn route_rule_based(&self, query: &Query) -> RouteDecision {
        let (stores, provenance) = rule_based_stores(&self.extractor.extract(&query.text));
        decision(query, stores, provenance)
    }

    /// Ordered cue rules, then the fallback, widened by the best-matching
    /// store when its similarity reaches `threshold`.
    pub fn route_hybrid(&self, query: &Query, threshold: Option<f64>) -> RouteDecision {
        use StoreId::*;
        let signals = self.extractor.extract(&query.text);
        let (stores, provenance) = if signals.quantity {
            (StoreSet::of(&[LongTerm, Episodic]), Provenance::Quantity)
        } else if signals.temporal {
            (StoreSet::of(&[LongTerm, Episodic]), Provenance::Temporal)
        } else if signals.multi_hop {
            (StoreSet::of(&[Summary, LongTerm]), Provenance::MultiHop)
        } else if signals.current_session {
            (StoreSet::of(&[ShortTerm]), Provenance::CurrentSession)
        } else if signals.fact_lookup {
            (StoreSet::of(&[Summary]), Provenance::FactLookup)
        } else {
            match threshold {
                Some(tau) => {
                    let (best, score) = self.similarity.score(&query.text).best();
                    if score >= tau {
                        (FALLBACK.with(best), Provenance::SimilarityTiebreak)
                    } else {
                        (FALLBACK, Provenance::Fallback)
                    }
                }
                None => (FALLBACK, Provenance::Fallback),
            }
        };
        decision(query, stores, provenance)
    }

    pub fn route_cost_sensitive(&self, query: &Query, label_estimate: StoreSet, lambda: f64) -> RouteDecision {
        route_cost_sensitive(query, label_estimate, &self.accuracy, &self.cost, lambda)
    }
}

/// Linguistic router decision table.
///
/// Current-session cue → STM; possessive with past tense → Sum+LTM;
/// possessive → Sum; past tense → LTM; otherwise Sum.
pub fn rule_based_stores(signals: &SignalProfile) -> (StoreSet, Provenance) {
    use StoreId::*;
    if signals.current_session {
        (StoreSet::of(&[ShortTerm]), Provenance::CurrentSession)
    } else if signals.possessive_pronoun && signals.past_tense {
        (StoreSet::of(&[Summary, LongTerm]), Provenance::PossessivePast)
    } else if signals.possessive_pronoun {
        (StoreSet::of(&[Summary]), Provenance::PossessivePresent)
    } else if signals.past_tense {
        (StoreSet::of(&[LongTerm]), Provenance::PastTense)
    } else {
        (StoreSet::of(&[Summary]), Provenance::LinguisticDefault)
    }
}

pub fn route_uniform(query: &Query) -> RouteDecision {
    decision(query, StoreSet::FULL, Provenance::Uniform)
}

pub fn route_oracle(query: &Query, label: &GroundTruthLabel) -> Result<RouteDecision> {
    if label.query_id != query.id {
        return Err(Error::LabelMismatch {
            expected: query.id.clone(),
            found: label.query_id.clone(),
        });
    }
    Ok(decision(query, label.stores, Provenance::Oracle))
}

pub fn route_fixed(query: &Query, subset: StoreSet) -> RouteDecision {
    decision(query, subset, Provenance::Fixed)
}

/// Linguistic routing with the default cue lists.
pub fn route_rule_based(query: &Query) -> RouteDecision {
    Router::default().route_rule_based(query)
}

/// Hybrid routing with the default cue lists and store descriptors.
pub fn route_hybrid(query: &Query, threshold: f64) -> RouteDecision {
    Router::default().route_hybrid(query, Some(threshold))
}

pub fn route_cost_sensitive(
    query: &Query,
    label_estimate: StoreSet,
    acc: &AccuracyModel,
    cost: &CostModel,
    lambda: f64,
) -> RouteDecision {
    let choice = optimize_subset(label_estimate, acc, cost, lambda);
    decision(query, choice.stores, Provenance::CostSensitive { lambda })
}
