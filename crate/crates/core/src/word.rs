//! Finite words over an alphabet.
//!
//! A word is stored oldest symbol first, so the most recent symbol is the
//! last one and a suffix is a trailing segment. Extending a context to the
//! past means prepending a symbol.

use crate::alphabet::{Alphabet, AlphabetError, Symbol};
use serde::{Deserialize, Serialize};

/// Token used in text formats for the empty word.
pub const EMPTY_WORD_TOKEN: &str = "EPS";

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    /// Parses a word from its token string; `EPS` denotes the empty word.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self, AlphabetError> {
        let text = text.trim();
        if text == EMPTY_WORD_TOKEN {
            return Ok(Self::empty());
        }
        alphabet.encode(text).map(Self)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `true` iff `self` is a (not necessarily proper) suffix of `other`.
    pub fn is_suffix_of(&self, other: &Word) -> bool {
        other.0.ends_with(&self.0)
    }

    /// `true` iff `other = u self` with `|u| >= 1`.
    pub fn is_proper_suffix_of(&self, other: &Word) -> bool {
        self.len() < other.len() && self.is_suffix_of(other)
    }

    /// The word `b self`, one step further into the past.
    pub fn extend_past(&self, b: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(b);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// The word `self a`.
    pub fn append(&self, a: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(a);
        Word(v)
    }

    /// The suffix of length `k` (the whole word if `k >= len`).
    pub fn suffix(&self, k: usize) -> Word {
        let start = self.len().saturating_sub(k);
        Word(self.0[start..].to_vec())
    }

    /// Proper suffixes, shortest (the empty word) first.
    pub fn proper_suffixes(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.len()).map(move |k| self.suffix(k))
    }

    /// Token string; the empty word renders as `EPS`.
    pub fn render(&self, alphabet: &Alphabet) -> String {
        if self.is_empty() {
            EMPTY_WORD_TOKEN.to_string()
        } else {
            alphabet.decode(&self.0)
        }
    }

    /// Every word of length `k` over an alphabet of `alphabet_size` symbols,
    /// in lexicographic order.
    pub fn all_of_length(alphabet_size: usize, k: usize) -> impl Iterator<Item = Word> {
        let total = alphabet_size.pow(k as u32);
        (0..total).map(move |mut idx| {
            let mut v = vec![0 as Symbol; k];
            for slot in v.iter_mut().rev() {
                *slot = (idx % alphabet_size) as Symbol;
                idx /= alphabet_size;
            }
            Word(v)
        })
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Self(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Self(v.to_vec())
    }
}
