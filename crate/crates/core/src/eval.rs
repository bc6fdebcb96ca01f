//! Policy evaluation, lambda sweeps and router ablation over datasets.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bootstrap_diff, context_tokens, BootstrapResult, QueryOutcome, RoutingMetrics};
use crate::model::{access_cost, label_for_type, CostModel, GroundTruthLabel, Query, QueryType, Regime, ViewIndex};
use crate::policy::{optimize_subset, AccuracyModel, PolicyKind, PolicySpec, Router};
use crate::qa::{answer_noisy_oracle, answer_oracle, assemble, AnswerRecord, AssembledContext, ExternalClient, ExternalConfig};
use crate::synthgen::{generate_qa_pack, AnswerKey, Dataset};
use crate::tokenize::Tokenizer;

#[derive(Debug, Clone, PartialEq)]
pub enum AnswererChoice {
    Oracle,
    Noisy { noise: f64, seed: u64 },
    External(ExternalConfig),
}

impl AnswererChoice {
    pub fn name(&self) -> &'static str {
        match self {
            AnswererChoice::Oracle => "oracle",
            AnswererChoice::Noisy { .. } => "noisy-oracle",
            AnswererChoice::External(_) => "external-llm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    #[default]
    Test,
    Train,
    All,
}

impl std::str::FromStr for SplitChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "test" => Ok(SplitChoice::Test),
            "train" => Ok(SplitChoice::Train),
            "all" => Ok(SplitChoice::All),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub policies: Vec<PolicySpec>,
    pub answerer: AnswererChoice,
    /// Policy every other row is bootstrapped against.
    pub baseline: Option<String>,
    pub bootstrap_iterations: usize,
    pub bootstrap_seed: u64,
    pub split: SplitChoice,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            policies: Vec::new(),
            answerer: AnswererChoice::Oracle,
            baseline: None,
            bootstrap_iterations: 1000,
            bootstrap_seed: 7,
            split: SplitChoice::Test,
        }
    }
}

/// Queries of one dataset selected by a split, with everything needed to
/// route and answer them.
pub struct Prepared<'d> {
    pub queries: Vec<&'d Query>,
    pub labels: Vec<&'d GroundTruthLabel>,
    pub keys: Vec<AnswerKey>,
    pub views: ViewIndex<'d>,
}

impl<'d> Prepared<'d> {
    pub fn new(dataset: &'d Dataset, split: SplitChoice) -> Result<Self> {
        let keys = generate_qa_pack(&dataset.queries, &dataset.labels, &dataset.corpus)?;
        let wanted: Option<std::collections::BTreeSet<&str>> = match split {
            SplitChoice::All => None,
            SplitChoice::Test => Some(dataset.split.test.iter().map(String::as_str).collect()),
            SplitChoice::Train => Some(dataset.split.train.iter().map(String::as_str).collect()),
        };
        let mut out = Prepared {
            queries: Vec::new(),
            labels: Vec::new(),
            keys: Vec::new(),
            views: ViewIndex::new(&dataset.corpus),
        };
        for ((q, l), k) in dataset.queries.iter().zip(&dataset.labels).zip(keys) {
            if l.query_id != q.id {
                return Err(Error::LabelMismatch {
                    expected: q.id.clone(),
                    found: l.query_id.clone(),
                });
            }
            if wanted.as_ref().is_none_or(|w| w.contains(q.id.as_str())) {
                out.queries.push(q);
                out.labels.push(l);
                out.keys.push(k);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Aggregate row for one policy.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    #[serde(flatten)]
    pub metrics: RoutingMetrics,
    pub per_type: BTreeMap<QueryType, RoutingMetrics>,
    pub per_regime: BTreeMap<Regime, RoutingMetrics>,
    /// Mean wall-clock routing time per decision, microseconds.
    pub mean_routing_us: f64,
    pub answer_errors: usize,
    #[serde(skip)]
    pub outcomes: Vec<QueryOutcome>,
    #[serde(skip)]
    pub answers: Vec<AnswerRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub policy: String,
    pub baseline: String,
    #[serde(flatten)]
    pub result: BootstrapResult,
}

/// Closed-form uniform waste and oracle access cost for a label distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analytic {
    pub mean_label_size: f64,
    pub uniform_waste: f64,
    pub oracle_access_cost: f64,
}

impl Analytic {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a GroundTruthLabel>, cost: &CostModel) -> Option<Self> {
        let (mut n, mut size, mut c) = (0usize, 0usize, 0.0);
        for l in labels {
            n += 1;
            size += l.stores.len();
            c += access_cost(l.stores, cost);
        }
        (n > 0).then(|| Analytic {
            mean_label_size: size as f64 / n as f64,
            uniform_waste: 4.0 - size as f64 / n as f64,
            oracle_access_cost: c / n as f64,
        })
    }

    /// Expectation under a type mixture, using the mapping table.
    pub fn from_mix(mix: &BTreeMap<QueryType, f64>, cost: &CostModel) -> Option<Self> {
        let total: f64 = mix.values().sum();
        if !(total > 0.0) {
            return None;
        }
        let (mut size, mut c) = (0.0, 0.0);
        for (&t, &w) in mix {
            let g = label_for_type(t);
            size += w / total * g.len() as f64;
            c += w / total * access_cost(g, cost);
        }
        Some(Analytic {
            mean_label_size: size,
            uniform_waste: 4.0 - size,
            oracle_access_cost: c,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub answerer: String,
    pub split: SplitChoice,
    pub n_queries: usize,
    pub rows: Vec<PolicyRow>,
    pub comparisons: Vec<Comparison>,
    pub analytic: Analytic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_mix: Option<Analytic>,
}

impl EvalReport {
    pub fn row(&self, policy: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }
}

enum Answering {
    Oracle,
    Noisy(f64, u64),
    External(ExternalClient),
}

struct Routed {
    ctx: AssembledContext,
    tokens: usize,
    routing_us: f64,
    selected: crate::store::StoreSet,
}

fn route_all(p: &Prepared<'_>, spec: &PolicySpec, router: &Router, tokenizer: &dyn Tokenizer) -> Result<Vec<Routed>> {
    p.queries
        .par_iter()
        .zip(p.labels.par_iter())
        .map(|(q, l)| {
            let start = Instant::now();
            let decision = router.route(spec, q, Some(l))?;
            let routing_us = start.elapsed().as_secs_f64() * 1e6;
            Ok(Routed {
                tokens: context_tokens(&decision, &p.views, tokenizer),
                ctx: assemble(&decision, &p.views, tokenizer),
                routing_us,
                selected: decision.stores,
            })
        })
        .collect()
}

fn answer_all(p: &Prepared<'_>, routed: &[Routed], answering: &Answering) -> Result<Vec<AnswerRecord>> {
    match answering {
        Answering::Oracle => Ok(routed
            .par_iter()
            .zip(p.keys.par_iter())
            .map(|(r, k)| answer_oracle(&r.ctx, k))
            .collect()),
        Answering::Noisy(noise, seed) => routed
            .par_iter()
            .zip(p.keys.par_iter())
            .map(|(r, k)| answer_noisy_oracle(&r.ctx, k, &p.views, *noise, *seed))
            .collect(),
        Answering::External(client) => {
            let jobs: Vec<(&AssembledContext, &Query)> = routed.iter().map(|r| &r.ctx).zip(p.queries.iter().copied()).collect();
            Ok(client.answer_batch(&jobs))
        }
    }
}

fn breakdown<K: Ord + Copy>(outcomes: &[QueryOutcome], keys: &[K]) -> BTreeMap<K, RoutingMetrics> {
    let mut groups: BTreeMap<K, Vec<&QueryOutcome>> = BTreeMap::new();
    for (o, &k) in outcomes.iter().zip(keys) {
        groups.entry(k).or_default().push(o);
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| RoutingMetrics::aggregate(v).map(|m| (k, m)))
        .collect()
}

/// Evaluates every policy over the selected queries of all datasets.
pub fn evaluate(datasets: &[Dataset], router: &Router, tokenizer: &dyn Tokenizer, opts: &EvalOptions) -> Result<EvalReport> {
    if opts.policies.is_empty() {
        return Err(Error::Config("no policies to evaluate".into()));
    }
    let prepared: Vec<Prepared<'_>> = datasets.iter().map(|d| Prepared::new(d, opts.split)).collect::<Result<_>>()?;
    let n: usize = prepared.iter().map(Prepared::len).sum();
    if n == 0 {
        return Err(Error::Empty("no queries in the selected split"));
    }
    let answering = match &opts.answerer {
        AnswererChoice::Oracle => Answering::Oracle,
        AnswererChoice::Noisy { noise, seed } => {
            if !(0.0..=1.0).contains(noise) {
                return Err(Error::Config(format!("noise must be in [0, 1], got {noise}")));
            }
            Answering::Noisy(*noise, *seed)
        }
        AnswererChoice::External(cfg) => Answering::External(ExternalClient::new(cfg.clone())?),
    };
    let types: Vec<QueryType> = prepared.iter().flat_map(|p| p.queries.iter().map(|q| q.query_type)).collect();
    let regimes: Vec<Regime> = prepared.iter().flat_map(|p| p.queries.iter().map(|q| q.regime)).collect();

    let mut rows = Vec::with_capacity(opts.policies.len());
    for spec in &opts.policies {
        let mut outcomes = Vec::with_capacity(n);
        let mut answers = Vec::with_capacity(n);
        let mut routing_us = 0.0;
        for p in &prepared {
            let routed = route_all(p, spec, router, tokenizer)?;
            let recs = answer_all(p, &routed, &answering)?;
            for ((r, rec), l) in routed.iter().zip(&recs).zip(&p.labels) {
                routing_us += r.routing_us;
                outcomes.push(QueryOutcome {
                    query_id: l.query_id.clone(),
                    required: l.stores,
                    selected: r.selected,
                    tokens: r.tokens,
                    access_cost: access_cost(r.selected, &router.cost),
                    correct: rec.correct,
                });
            }
            answers.extend(recs);
        }
        rows.push(PolicyRow {
            policy: spec.name.clone(),
            metrics: RoutingMetrics::aggregate(&outcomes).expect("n > 0"),
            per_type: breakdown(&outcomes, &types),
            per_regime: breakdown(&outcomes, &regimes),
            mean_routing_us: routing_us / n as f64,
            answer_errors: answers.iter().filter(|a| a.error.is_some()).count(),
            outcomes,
            answers,
        });
    }

    let mut comparisons = Vec::new();
    if let Some(base) = &opts.baseline {
        let base_row = rows
            .iter()
            .find(|r| &r.policy == base)
            .ok_or_else(|| Error::UnknownPolicy(format!("baseline `{base}` is not among the evaluated policies")))?;
        let b: Vec<bool> = base_row.outcomes.iter().map(|o| o.correct).collect();
        for row in rows.iter().filter(|r| &r.policy != base) {
            let a: Vec<bool> = row.outcomes.iter().map(|o| o.correct).collect();
            comparisons.push(Comparison {
                policy: row.policy.clone(),
                baseline: base.clone(),
                result: bootstrap_diff(&a, &b, opts.bootstrap_iterations, opts.bootstrap_seed)?,
            });
        }
    }

    let analytic = Analytic::from_labels(prepared.iter().flat_map(|p| p.labels.iter().copied()), &router.cost).expect("n > 0");
    Ok(EvalReport {
        answerer: opts.answerer.name().to_string(),
        split: opts.split,
        n_queries: n,
        rows,
        comparisons,
        analytic,
        analytic_mix: None,
    })
}

pub const CSV_COLUMNS: [&str; 8] = [
    "policy",
    "coverage",
    "exact_match",
    "waste",
    "mean_tokens",
    "mean_access_cost",
    "qa_accuracy",
    "n",
];

/// One CSV row per policy.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        let m = &r.metrics;
        w.write_record([
            r.policy.clone(),
            m.coverage.to_string(),
            m.exact_match.to_string(),
            m.waste.to_string(),
            m.mean_tokens.to_string(),
            m.mean_access_cost.to_string(),
            m.qa_accuracy.to_string(),
            m.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mean_access_cost: f64,
    pub mean_stores: f64,
    pub mean_estimated_accuracy: f64,
    pub mean_objective: f64,
    pub oracle_accuracy: f64,
}

/// Cost-sensitive routing with oracle labels at each λ.
pub fn sweep_lambda(
    datasets: &[Dataset],
    split: SplitChoice,
    lambdas: &[f64],
    acc: &AccuracyModel,
    cost: &CostModel,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda list is empty".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Config(format!("lambda must be finite and non-negative, got {l}")));
    }
    acc.validate()?;
    let prepared: Vec<Prepared<'_>> = datasets.iter().map(|d| Prepared::new(d, split)).collect::<Result<_>>()?;
    let n: usize = prepared.iter().map(Prepared::len).sum();
    if n == 0 {
        return Err(Error::Empty("no queries in the selected split"));
    }
    let router = Router {
        accuracy: *acc,
        cost: cost.clone(),
        ..Router::default()
    };
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = PolicySpec::new(
            format!("cost:{lambda}"),
            PolicyKind::CostSensitive {
                lambda,
                labels: crate::policy::LabelSource::Oracle,
            },
        );
        let (mut c, mut size, mut est, mut obj, mut correct) = (0.0, 0usize, 0.0, 0.0, 0usize);
        for p in &prepared {
            let routed = route_all(p, &spec, &router, tokenizer)?;
            for ((r, l), k) in routed.iter().zip(&p.labels).zip(&p.keys) {
                let choice = optimize_subset(l.stores, acc, cost, lambda);
                debug_assert_eq!(choice.stores, r.selected);
                c += access_cost(r.selected, cost);
                size += r.selected.len();
                est += choice.estimated_accuracy;
                obj += choice.objective;
                correct += usize::from(answer_oracle(&r.ctx, k).correct);
            }
        }
        let nf = n as f64;
        rows.push(SweepRow {
            lambda,
            mean_access_cost: c / nf,
            mean_stores: size as f64 / nf,
            mean_estimated_accuracy: est / nf,
            mean_objective: obj / nf,
            oracle_accuracy: correct as f64 / nf,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub coverage: f64,
    pub per_type: BTreeMap<QueryType, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub n_queries: usize,
    pub rows: Vec<AblationRow>,
    /// Coverage gain of the cue rules over linguistic-only routing.
    pub semantic_delta: f64,
    /// Coverage gain of the similarity tiebreaker over the cue rules.
    pub similarity_delta: f64,
}

pub const ABLATION_VARIANTS: [&str; 3] = ["linguistic", "+semantic", "+similarity"];

/// Coverage of the linguistic router, the cue rules without tiebreaking, and
/// the full hybrid router.
pub fn ablate(datasets: &[Dataset], split: SplitChoice, router: &Router) -> Result<AblationReport> {
    let kinds = [
        PolicyKind::RuleBased,
        PolicyKind::Hybrid { threshold: None },
        PolicyKind::Hybrid {
            threshold: Some(router.threshold),
        },
    ];
    let prepared: Vec<Prepared<'_>> = datasets.iter().map(|d| Prepared::new(d, split)).collect::<Result<_>>()?;
    let n: usize = prepared.iter().map(Prepared::len).sum();
    if n == 0 {
        return Err(Error::Empty("no queries in the selected split"));
    }
    let mut rows = Vec::new();
    for (name, kind) in ABLATION_VARIANTS.iter().zip(kinds) {
        let spec = PolicySpec::new(*name, kind);
        let mut hits: BTreeMap<QueryType, (usize, usize)> = BTreeMap::new();
        for p in &prepared {
            for (q, l) in p.queries.iter().zip(&p.labels) {
                let d = router.route(&spec, q, Some(l))?;
                let e = hits.entry(q.query_type).or_default();
                e.0 += usize::from(l.stores.is_subset(d.stores));
                e.1 += 1;
            }
        }
        let covered: usize = hits.values().map(|h| h.0).sum();
        rows.push(AblationRow {
            variant: name.to_string(),
            coverage: covered as f64 / n as f64,
            per_type: hits.into_iter().map(|(t, (c, m))| (t, c as f64 / m as f64)).collect(),
        });
    }
    Ok(AblationReport {
        n_queries: n,
        semantic_delta: rows[1].coverage - rows[0].coverage,
        similarity_delta: rows[2].coverage - rows[1].coverage,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_dataset, GeneratorConfig};
    use crate::tokenize::WhitespaceTokenizer;

    fn small() -> Dataset {
        generate_dataset(&GeneratorConfig {
            n_queries: 70,
            ..Default::default()
        })
        .unwrap()
    }

    fn opts(list: &str) -> EvalOptions {
        EvalOptions {
            policies: list.split(',').map(|s| s.parse().unwrap()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn split_selection() {
        let ds = small();
        assert_eq!(Prepared::new(&ds, SplitChoice::Test).unwrap().len(), 21);
        assert_eq!(Prepared::new(&ds, SplitChoice::Train).unwrap().len(), 49);
        assert_eq!(Prepared::new(&ds, SplitChoice::All).unwrap().len(), 70);
    }

    #[test]
    fn oracle_and_none_rows() {
        let ds = small();
        let r = evaluate(&[ds], &Router::default(), &WhitespaceTokenizer, &opts("oracle,none,uniform")).unwrap();
        let o = r.row("oracle").unwrap().metrics;
        assert_eq!((o.coverage, o.exact_match, o.waste, o.qa_accuracy), (1.0, 1.0, 0.0, 1.0));
        let none = r.row("none").unwrap().metrics;
        assert_eq!((none.qa_accuracy, none.mean_tokens, none.mean_access_cost), (0.0, 0.0, 0.0));
        let u = r.row("uniform").unwrap().metrics;
        assert_eq!(u.mean_access_cost, 10.0);
        assert!((u.waste - r.analytic.uniform_waste).abs() < 1e-12);
        assert!((o.mean_access_cost - r.analytic.oracle_access_cost).abs() < 1e-12);
        assert_eq!(r.n_queries, 21);
    }

    #[test]
    fn baseline_must_be_evaluated() {
        let ds = small();
        let mut o = opts("oracle,uniform");
        o.baseline = Some("hybrid".into());
        assert!(evaluate(&[ds.clone()], &Router::default(), &WhitespaceTokenizer, &o).is_err());
        o.baseline = Some("uniform".into());
        let r = evaluate(&[ds], &Router::default(), &WhitespaceTokenizer, &o).unwrap();
        assert_eq!(r.comparisons.len(), 1);
        assert_eq!(r.comparisons[0].result.delta, 0.0);
        assert!(!r.comparisons[0].result.significant);
    }

    #[test]
    fn mix_analytic_equal_weights() {
        let mix: BTreeMap<QueryType, f64> = QueryType::ALL.iter().map(|&t| (t, 1.0)).collect();
        let a = Analytic::from_mix(&mix, &CostModel::default()).unwrap();
        assert!((a.uniform_waste - 17.0 / 7.0).abs() < 1e-12);
        assert!((a.oracle_access_cost - 29.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let ds = small();
        let acc = AccuracyModel::default();
        let cost = CostModel::default();
        let t = WhitespaceTokenizer;
        assert!(sweep_lambda(&[ds.clone()], SplitChoice::All, &[], &acc, &cost, &t).is_err());
        assert!(sweep_lambda(&[ds], SplitChoice::All, &[-1.0], &acc, &cost, &t).is_err());
    }
}
