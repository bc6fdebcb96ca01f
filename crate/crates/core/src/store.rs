//! Store identities and subsets of the four-store universe.

use std::fmt;
use std::str::FromStr;

use serde::de::{SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// One of the four memory stores.
///
/// Declaration order is the canonical iteration and serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StoreId {
    /// Current conversation turns.
    ShortTerm,
    /// Compressed persistent user facts.
    Summary,
    /// Summaries of past sessions.
    LongTerm,
    /// Raw transcript turns.
    Episodic,
}

impl StoreId {
    pub const ALL: [StoreId; 4] = [
        StoreId::ShortTerm,
        StoreId::Summary,
        StoreId::LongTerm,
        StoreId::Episodic,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Short name used in policy strings and serialized output.
    pub const fn name(self) -> &'static str {
        match self {
            StoreId::ShortTerm => "stm",
            StoreId::Summary => "sum",
            StoreId::LongTerm => "ltm",
            StoreId::Episodic => "epi",
        }
    }

    /// Human-readable label used for context headers.
    pub const fn label(self) -> &'static str {
        match self {
            StoreId::ShortTerm => "Short-Term Memory",
            StoreId::Summary => "Summary Store",
            StoreId::LongTerm => "Long-Term Memory",
            StoreId::Episodic => "Episodic Memory",
        }
    }
}

impl fmt::Display for StoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StoreId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stm" | "short" | "short_term" | "shortterm" => Ok(StoreId::ShortTerm),
            "sum" | "summary" => Ok(StoreId::Summary),
            "ltm" | "long" | "long_term" | "longterm" => Ok(StoreId::LongTerm),
            "epi" | "episodic" => Ok(StoreId::Episodic),
            other => Err(Error::UnknownStore(other.to_string())),
        }
    }
}

impl Serialize for StoreId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for StoreId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of the store universe, packed into the low four bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct StoreSet(u8);

impl StoreSet {
    pub const EMPTY: StoreSet = StoreSet(0);
    pub const FULL: StoreSet = StoreSet(0b1111);

    /// Builds a set from its 4-bit encoding. Returns `None` above 15.
    pub const fn from_bits(bits: u8) -> Option<StoreSet> {
        if bits <= 0b1111 {
            Some(StoreSet(bits))
        } else {
            None
        }
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    /// All 16 subsets, in increasing bit order.
    pub fn all_subsets() -> impl Iterator<Item = StoreSet> {
        (0u8..16).map(StoreSet)
    }

    pub fn of(stores: &[StoreId]) -> StoreSet {
        stores.iter().copied().collect()
    }

    pub const fn single(store: StoreId) -> StoreSet {
        StoreSet(store.bit())
    }

    pub const fn with(self, store: StoreId) -> StoreSet {
        StoreSet(self.0 | store.bit())
    }

    pub const fn contains(self, store: StoreId) -> bool {
        self.0 & store.bit() != 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn union(self, other: StoreSet) -> StoreSet {
        StoreSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: StoreSet) -> StoreSet {
        StoreSet(self.0 & other.0)
    }

    pub const fn difference(self, other: StoreSet) -> StoreSet {
        StoreSet(self.0 & !other.0)
    }

    pub const fn is_subset(self, other: StoreSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_superset(self, other: StoreSet) -> bool {
        other.is_subset(self)
    }

    /// Members in canonical order.
    pub fn iter(self) -> impl Iterator<Item = StoreId> {
        StoreId::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    pub fn to_vec(self) -> Vec<StoreId> {
        self.iter().collect()
    }

    /// `+`-joined member names, or `none` for the empty set.
    pub fn policy_name(self) -> String {
        if self.is_empty() {
            return "none".to_string();
        }
        self.iter().map(StoreId::name).collect::<Vec<_>>().join("+")
    }
}

impl FromIterator<StoreId> for StoreSet {
    fn from_iter<I: IntoIterator<Item = StoreId>>(iter: I) -> Self {
        iter.into_iter().fold(StoreSet::EMPTY, StoreSet::with)
    }
}

impl fmt::Debug for StoreSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for StoreSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for StoreSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for StoreSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SetVisitor;

        impl<'de> Visitor<'de> for SetVisitor {
            type Value = StoreSet;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of store names")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<StoreSet, A::Error> {
                let mut set = StoreSet::EMPTY;
                while let Some(store) = seq.next_element::<StoreId>()? {
                    set = set.with(store);
                }
                Ok(set)
            }
        }

        deserializer.deserialize_seq(SetVisitor)
    }
}
