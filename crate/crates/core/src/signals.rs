//! Query signals: cue-phrase flags and query-store similarity.
//!
//! Matching is case-insensitive on whole words. Text and cue phrases go through
//! the same word splitter (alphanumeric runs, so "what's" becomes "what s"),
//! and a phrase fires when its words occur contiguously in the query.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::StoreId;

/// Lowercased alphanumeric word runs.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SignalProfile {
    pub quantity: bool,
    pub temporal: bool,
    pub multi_hop: bool,
    pub current_session: bool,
    pub fact_lookup: bool,
    pub past_tense: bool,
    pub possessive_pronoun: bool,
}

impl SignalProfile {
    /// Whether any of the hybrid router's rule signals fired.
    pub fn any_rule(&self) -> bool {
        self.quantity || self.temporal || self.multi_hop || self.current_session || self.fact_lookup
    }
}

/// Cue phrase lists. Loadable from the `[signals]` section of a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CueLists {
    pub quantity: Vec<String>,
    pub temporal: Vec<String>,
    pub multi_hop: Vec<String>,
    pub current_session: Vec<String>,
    pub fact_lookup: Vec<String>,
    pub possessives: Vec<String>,
    pub past_auxiliaries: Vec<String>,
    pub past_suffix: String,
    /// Words ending in the past suffix that are not past tense.
    pub past_suffix_exceptions: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for CueLists {
    fn default() -> Self {
        CueLists {
            quantity: strings(&["list all", "every", "all the", "how many"]),
            temporal: strings(&["before", "changed", "previous", "used to", "back when"]),
            multi_hop: strings(&["compare", "relate", "both", "difference between"]),
            current_session: strings(&["just said", "just mentioned", "today", "this conversation"]),
            fact_lookup: strings(&["what is my", "who is my", "what's my"]),
            possessives: strings(&["my", "our"]),
            past_auxiliaries: strings(&["did", "was", "were"]),
            past_suffix: "ed".to_string(),
            past_suffix_exceptions: strings(&[
                "need", "indeed", "speed", "seed", "feed", "breed", "proceed", "exceed",
                "succeed",
            ]),
        }
    }
}

/// Compiled cue lists, ready for matching.
#[derive(Debug, Clone)]
pub struct SignalExtractor {
    quantity: Vec<Vec<String>>,
    temporal: Vec<Vec<String>>,
    multi_hop: Vec<Vec<String>>,
    current_session: Vec<Vec<String>>,
    fact_lookup: Vec<Vec<String>>,
    possessives: Vec<String>,
    past_auxiliaries: Vec<String>,
    past_suffix: String,
    past_suffix_exceptions: Vec<String>,
}

impl SignalExtractor {
    pub fn new(cues: &CueLists) -> Self {
        let compile = |xs: &[String]| -> Vec<Vec<String>> {
            xs.iter().map(|p| words(p)).filter(|w| !w.is_empty()).collect()
        };
        let lower = |xs: &[String]| -> Vec<String> { xs.iter().map(|s| s.to_lowercase()).collect() };
        SignalExtractor {
            quantity: compile(&cues.quantity),
            temporal: compile(&cues.temporal),
            multi_hop: compile(&cues.multi_hop),
            current_session: compile(&cues.current_session),
            fact_lookup: compile(&cues.fact_lookup),
            possessives: lower(&cues.possessives),
            past_auxiliaries: lower(&cues.past_auxiliaries),
            past_suffix: cues.past_suffix.to_lowercase(),
            past_suffix_exceptions: lower(&cues.past_suffix_exceptions),
        }
    }

    pub fn extract(&self, text: &str) -> SignalProfile {
        let ws = words(text);
        let any = |phrases: &[Vec<String>]| phrases.iter().any(|p| contains_phrase(&ws, p));
        let past_tense = ws.iter().any(|w| {
            self.past_auxiliaries.contains(w)
                || (!self.past_suffix.is_empty()
                    && w.len() > self.past_suffix.len() + 1
                    && w.ends_with(&self.past_suffix)
                    && !self.past_suffix_exceptions.contains(w))
        });
        SignalProfile {
            quantity: any(&self.quantity),
            temporal: any(&self.temporal),
            multi_hop: any(&self.multi_hop),
            current_session: any(&self.current_session),
            fact_lookup: any(&self.fact_lookup),
            past_tense,
            possessive_pronoun: ws.iter().any(|w| self.possessives.contains(w)),
        }
    }
}

impl Default for SignalExtractor {
    fn default() -> Self {
        SignalExtractor::new(&CueLists::default())
    }
}

/// Signal flags under the default cue lists.
pub fn extract_signals(text: &str) -> SignalProfile {
    SignalExtractor::default().extract(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDescriptor {
    pub store: StoreId,
    pub descriptor_text: String,
}

/// Keyword profiles describing each store's semantic role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescriptorTexts {
    pub stm: String,
    pub sum: String,
    pub ltm: String,
    pub epi: String,
}

impl Default for DescriptorTexts {
    fn default() -> Self {
        DescriptorTexts {
            stm: "current conversation chat session right now moment ago just said mentioned \
                  today this morning tonight here recent turns latest message"
                .to_string(),
            sum: "profile preference phone number email contact manager name biography fact \
                  address job title employer birthday favorite allergy"
                .to_string(),
            ltm: "past conversations previous sessions last week last month discussed talked \
                  history summary earlier sessions topic recap"
                .to_string(),
            epi: "exact wording verbatim quote transcript timestamp precisely said turn raw \
                  exactly word for word phrasing"
                .to_string(),
        }
    }
}

impl DescriptorTexts {
    pub fn descriptors(&self) -> Vec<StoreDescriptor> {
        [
            (StoreId::ShortTerm, &self.stm),
            (StoreId::Summary, &self.sum),
            (StoreId::LongTerm, &self.ltm),
            (StoreId::Episodic, &self.epi),
        ]
        .into_iter()
        .map(|(store, text)| StoreDescriptor {
            store,
            descriptor_text: text.clone(),
        })
        .collect()
    }
}

type TermVector = BTreeMap<String, f64>;

fn term_vector(text: &str) -> TermVector {
    let mut tf = TermVector::new();
    for w in words(text) {
        *tf.entry(w).or_insert(0.0) += 1.0;
    }
    tf
}

fn norm(v: &TermVector) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine(a: &TermVector, a_norm: f64, b: &TermVector, b_norm: f64) -> f64 {
    if a_norm == 0.0 || b_norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(term, x)| b.get(term).map(|y| x * y))
        .sum();
    (dot / (a_norm * b_norm)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityScores {
    pub per_store: [f64; 4],
}

impl SimilarityScores {
    pub fn get(&self, store: StoreId) -> f64 {
        self.per_store[store.index()]
    }

    /// Highest-scoring store; ties go to the earlier store in canonical order.
    pub fn best(&self) -> (StoreId, f64) {
        let mut best = (StoreId::ShortTerm, self.per_store[0]);
        for store in StoreId::ALL.into_iter().skip(1) {
            let s = self.get(store);
            if s > best.1 {
                best = (store, s);
            }
        }
        best
    }
}

/// Precomputed term vectors for the four store descriptors.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    vectors: [(TermVector, f64); 4],
}

impl SimilarityIndex {
    /// Requires exactly one non-empty descriptor per store.
    pub fn new(descriptors: &[StoreDescriptor]) -> Result<Self> {
        let mut slots: [Option<TermVector>; 4] = Default::default();
        for d in descriptors {
            if d.descriptor_text.trim().is_empty() {
                return Err(Error::Config(format!("empty descriptor for store {}", d.store)));
            }
            let slot = &mut slots[d.store.index()];
            if slot.is_some() {
                return Err(Error::Config(format!("duplicate descriptor for store {}", d.store)));
            }
            *slot = Some(term_vector(&d.descriptor_text));
        }
        let mut out: Vec<(TermVector, f64)> = Vec::with_capacity(4);
        for (store, slot) in StoreId::ALL.into_iter().zip(slots) {
            let v = slot.ok_or_else(|| Error::Config(format!("missing descriptor for store {store}")))?;
            let n = norm(&v);
            out.push((v, n));
        }
        let vectors: [(TermVector, f64); 4] = out.try_into().expect("four descriptors");
        Ok(SimilarityIndex { vectors })
    }

    pub fn score(&self, text: &str) -> SimilarityScores {
        let q = term_vector(text);
        let qn = norm(&q);
        let mut per_store = [0.0; 4];
        for (score, (v, vn)) in per_store.iter_mut().zip(&self.vectors) {
            *score = cosine(&q, qn, v, *vn);
        }
        SimilarityScores { per_store }
    }
}

impl Default for SimilarityIndex {
    fn default() -> Self {
        SimilarityIndex::new(&DescriptorTexts::default().descriptors()).expect("default descriptors")
    }
}

/// Bag-of-words cosine between `text` and each store descriptor.
pub fn similarity(text: &str, descriptors: &[StoreDescriptor]) -> Result<SimilarityScores> {
    Ok(SimilarityIndex::new(descriptors)?.score(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantity_cue() {
        let p = extract_signals("List all the books I mentioned");
        assert!(p.quantity);
    }

    #[test]
    fn diet_question() {
        let p = extract_signals("What was my weight before I started the diet?");
        assert!(p.temporal);
        assert!(p.possessive_pronoun);
        assert!(p.past_tense);
        assert!(!p.quantity && !p.multi_hop && !p.current_session && !p.fact_lookup);
    }

    #[test]
    fn no_cue() {
        assert_eq!(extract_signals("xyzzy"), SignalProfile::default());
    }

    #[test]
    fn case_insensitive_whole_words() {
        assert!(extract_signals("EVERY single one").quantity);
        assert!(!extract_signals("everything is fine").quantity);
        assert!(extract_signals("What's my email?").fact_lookup);
        assert!(extract_signals("about today's meeting").current_session);
        assert!(!extract_signals("Mythical").possessive_pronoun);
    }

    #[test]
    fn past_tense_heuristic() {
        let x = SignalExtractor::default();
        assert!(x.extract("We talked for hours").past_tense);
        assert!(x.extract("did it work").past_tense);
        assert!(!x.extract("I need a hand").past_tense);
        assert!(!x.extract("a red bed").past_tense);
    }

    #[test]
    fn each_phrase_sets_its_flag() {
        let cues = CueLists::default();
        let x = SignalExtractor::new(&cues);
        let groups: [(&[String], fn(&SignalProfile) -> bool); 5] = [
            (&cues.quantity, |p| p.quantity),
            (&cues.temporal, |p| p.temporal),
            (&cues.multi_hop, |p| p.multi_hop),
            (&cues.current_session, |p| p.current_session),
            (&cues.fact_lookup, |p| p.fact_lookup),
        ];
        for (phrases, flag) in groups {
            for phrase in phrases {
                assert!(flag(&x.extract(phrase)), "{phrase}");
            }
        }
        for phrase in &cues.possessives {
            assert!(x.extract(phrase).possessive_pronoun);
        }
        for phrase in &cues.past_auxiliaries {
            assert!(x.extract(phrase).past_tense);
        }
        // "changed" is past-suffixed; "what is my" carries a possessive
        let changed = x.extract("changed");
        assert!(changed.temporal && changed.past_tense && !changed.quantity);
    }

    #[test]
    fn identical_text_scores_one() {
        let d = DescriptorTexts::default();
        let s = similarity(&d.sum, &d.descriptors()).unwrap();
        assert!((s.get(StoreId::Summary) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_text_scores_zero() {
        let s = SimilarityIndex::default().score("tell me a joke");
        assert_eq!(s.per_store, [0.0; 4]);
        let empty = SimilarityIndex::default().score("?!");
        assert_eq!(empty.per_store, [0.0; 4]);
    }

    #[test]
    fn contact_terms_prefer_summary() {
        // summary descriptor: 17 distinct terms, 4 shared with the query
        // => 4 / (2 * sqrt(17)) ≈ 0.485; long-term descriptor shares none
        let s = SimilarityIndex::default().score("phone number email contact");
        let expected = 4.0 / (2.0 * 17f64.sqrt());
        assert!((s.get(StoreId::Summary) - expected).abs() < 1e-12);
        assert_eq!(s.get(StoreId::LongTerm), 0.0);
        assert_eq!(s.best().0, StoreId::Summary);
    }

    #[test]
    fn descriptor_set_must_be_complete() {
        let mut ds = DescriptorTexts::default().descriptors();
        ds.pop();
        assert!(SimilarityIndex::new(&ds).is_err());
        let mut dup = DescriptorTexts::default().descriptors();
        dup[3].store = StoreId::ShortTerm;
        assert!(SimilarityIndex::new(&dup).is_err());
    }

    proptest! {
        #[test]
        fn reordering_words_keeps_scores(ws in proptest::collection::vec("[a-z]{1,8}", 0..12), seed in any::<u64>()) {
            let index = SimilarityIndex::default();
            let mut shuffled = ws.clone();
            let k = if shuffled.is_empty() { 0 } else { (seed as usize) % shuffled.len() };
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = index.score(&ws.join(" "));
            let b = index.score(&shuffled.join(" "));
            for i in 0..4 {
                prop_assert!((a.per_store[i] - b.per_store[i]).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a.per_store[i]));
            }
        }

        #[test]
        fn extraction_is_pure(text in ".{0,80}") {
            let x = SignalExtractor::default();
            prop_assert_eq!(x.extract(&text), x.extract(&text));
        }
    }
}
