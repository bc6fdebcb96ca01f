//! Token counting behind a pluggable registry.
//!
//! Counts only need to be a consistent cost proxy, so the built-in tokenizer
//! splits on whitespace. Other tokenizers can be registered under a tag.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const WHITESPACE: &str = "whitespace";

pub trait Tokenizer: Send + Sync {
    /// Must be deterministic and return 0 for the empty string.
    fn count(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl<F> Tokenizer for F
where
    F: Fn(&str) -> usize + Send + Sync,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

#[derive(Clone)]
pub struct TokenizerRegistry {
    entries: BTreeMap<String, Arc<dyn Tokenizer>>,
}

impl TokenizerRegistry {
    pub fn new() -> Self {
        let mut entries: BTreeMap<String, Arc<dyn Tokenizer>> = BTreeMap::new();
        entries.insert(WHITESPACE.to_string(), Arc::new(WhitespaceTokenizer));
        Self { entries }
    }

    pub fn register(&mut self, tag: impl Into<String>, tokenizer: Arc<dyn Tokenizer>) {
        self.entries.insert(tag.into(), tokenizer);
    }

    pub fn get(&self, tag: &str) -> Result<Arc<dyn Tokenizer>> {
        self.entries
            .get(tag)
            .cloned()
            .ok_or_else(|| Error::UnknownTokenizer(tag.to_string()))
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for TokenizerRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for TokenizerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

/// Counts tokens of `text` with the default registry.
pub fn count_tokens(text: &str, tokenizer: &str) -> Result<usize> {
    if tokenizer == WHITESPACE {
        return Ok(WhitespaceTokenizer.count(text));
    }
    Err(Error::UnknownTokenizer(tokenizer.to_string()))
}
