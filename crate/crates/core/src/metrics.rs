//! Routing metrics, context cost and paired bootstrap comparison.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundTruthLabel, RouteDecision, ViewIndex};
use crate::store::StoreSet;
use crate::tokenize::Tokenizer;

/// Pairs labels and decisions by query id, in label order.
fn paired(
    labels: &[GroundTruthLabel],
    decisions: &[RouteDecision],
) -> Result<Vec<(StoreSet, StoreSet)>> {
    if labels.is_empty() {
        return Err(Error::Empty("no labeled queries"));
    }
    if labels.len() != decisions.len() {
        return Err(Error::MismatchedIds(format!(
            "{} labels vs {} decisions",
            labels.len(),
            decisions.len()
        )));
    }
    let mut by_id: HashMap<&str, StoreSet> = HashMap::with_capacity(decisions.len());
    for d in decisions {
        if by_id.insert(d.query_id.as_str(), d.stores).is_some() {
            return Err(Error::MismatchedIds(format!("duplicate decision for `{}`", d.query_id)));
        }
    }
    labels
        .iter()
        .map(|l| {
            by_id
                .remove(l.query_id.as_str())
                .map(|selected| (l.stores, selected))
                .ok_or_else(|| Error::MismatchedIds(format!("no decision for `{}`", l.query_id)))
        })
        .collect()
}

fn mean_of(pairs: &[(StoreSet, StoreSet)], f: impl Fn(StoreSet, StoreSet) -> f64) -> f64 {
    pairs.iter().map(|&(g, s)| f(g, s)).sum::<f64>() / pairs.len() as f64
}

/// Fraction of queries whose selected stores include every required store.
pub fn coverage(labels: &[GroundTruthLabel], decisions: &[RouteDecision]) -> Result<f64> {
    let pairs = paired(labels, decisions)?;
    Ok(mean_of(&pairs, |g, s| f64::from(u8::from(g.is_subset(s)))))
}

/// Fraction of queries whose selected stores equal the required stores.
pub fn exact_match(labels: &[GroundTruthLabel], decisions: &[RouteDecision]) -> Result<f64> {
    let pairs = paired(labels, decisions)?;
    Ok(mean_of(&pairs, |g, s| f64::from(u8::from(g == s))))
}

/// Mean number of selected stores outside the required set.
pub fn waste(labels: &[GroundTruthLabel], decisions: &[RouteDecision]) -> Result<f64> {
    let pairs = paired(labels, decisions)?;
    Ok(mean_of(&pairs, |g, s| s.difference(g).len() as f64))
}

/// Tokens of all content in the selected stores of the decision's memory view.
pub fn context_tokens(decision: &RouteDecision, views: &ViewIndex<'_>, tokenizer: &dyn Tokenizer) -> usize {
    decision
        .stores
        .iter()
        .flat_map(|store| views.view(&decision.query_id, store))
        .map(|i| tokenizer.count(&views.corpus().items[i].text))
        .sum()
}

/// Everything measured for one routed query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub required: StoreSet,
    pub selected: StoreSet,
    pub tokens: usize,
    pub access_cost: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingMetrics {
    pub coverage: f64,
    pub exact_match: f64,
    pub waste: f64,
    pub mean_tokens: f64,
    pub mean_access_cost: f64,
    pub qa_accuracy: f64,
    pub n: usize,
}

impl RoutingMetrics {
    pub fn aggregate<'a>(outcomes: impl IntoIterator<Item = &'a QueryOutcome>) -> Option<Self> {
        let mut n = 0usize;
        let (mut covered, mut exact, mut wasted, mut correct) = (0usize, 0usize, 0usize, 0usize);
        let (mut tokens, mut cost) = (0usize, 0.0f64);
        for o in outcomes {
            n += 1;
            covered += usize::from(o.required.is_subset(o.selected));
            exact += usize::from(o.required == o.selected);
            wasted += o.selected.difference(o.required).len();
            correct += usize::from(o.correct);
            tokens += o.tokens;
            cost += o.access_cost;
        }
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        Some(RoutingMetrics {
            coverage: covered as f64 / nf,
            exact_match: exact as f64 / nf,
            waste: wasted as f64 / nf,
            mean_tokens: tokens as f64 / nf,
            mean_access_cost: cost / nf,
            qa_accuracy: correct as f64 / nf,
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub iterations: usize,
    pub significant: bool,
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Paired percentile bootstrap of `mean(a) − mean(b)` with a 95% interval.
///
/// Each iteration draws from its own ChaCha stream `(seed, iteration)`, so
/// results do not depend on how iterations are scheduled across threads.
pub fn bootstrap_diff(a: &[bool], b: &[bool], iterations: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("no paired outcomes"));
    }
    if iterations == 0 {
        return Err(Error::Config("bootstrap needs at least one iteration".into()));
    }
    let diffs: Vec<i32> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| i32::from(x) - i32::from(y))
        .collect();
    let n = diffs.len();
    let delta = diffs.iter().sum::<i32>() as f64 / n as f64;

    let mut resampled: Vec<f64> = (0..iterations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let total: i64 = (0..n).map(|_| i64::from(diffs[rng.gen_range(0..n)])).sum();
            total as f64 / n as f64
        })
        .collect();
    resampled.sort_by(f64::total_cmp);

    // widened to include the observed difference when the percentiles miss it
    let ci_low = quantile(&resampled, 0.025).min(delta);
    let ci_high = quantile(&resampled, 0.975).max(delta);
    Ok(BootstrapResult {
        delta,
        ci_low,
        ci_high,
        iterations,
        significant: ci_low > 0.0 || ci_high < 0.0,
    })
}
