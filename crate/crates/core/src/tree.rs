//! Context trees: suffix-free sets of words, with truncation and inclusion.

use crate::alphabet::Alphabet;
use crate::word::Word;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree has no leaves")]
    Empty,
    #[error("suffix violation: {suffix} is a proper suffix of {word}")]
    SuffixViolation { suffix: String, word: String },
    #[error("symbol index {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("truncation level must be at least 1")]
    ZeroTruncation,
}

/// A truncation depth `K >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TruncationLevel(usize);

impl TruncationLevel {
    pub fn new(k: usize) -> Result<Self, TreeError> {
        if k == 0 {
            Err(TreeError::ZeroTruncation)
        } else {
            Ok(Self(k))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// A finite suffix-free set of words (the leaves). Leaves are kept in
/// lexicographic order, which fixes the summation order of every score
/// computed over a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTree {
    alphabet: Alphabet,
    leaves: BTreeSet<Word>,
}

impl ContextTree {
    /// Validates that `leaves` is nonempty and suffix-free.
    pub fn new(alphabet: Alphabet, leaves: impl IntoIterator<Item = Word>) -> Result<Self, TreeError> {
        let leaves: BTreeSet<Word> = leaves.into_iter().collect();
        if leaves.is_empty() {
            return Err(TreeError::Empty);
        }
        let size = alphabet.size();
        for w in &leaves {
            if let Some(&s) = w.symbols().iter().find(|&&s| s as usize >= size) {
                return Err(TreeError::SymbolOutOfRange { symbol: s as usize, size });
            }
        }
        for w in &leaves {
            if let Some(s) = w.proper_suffixes().find(|s| leaves.contains(s)) {
                return Err(TreeError::SuffixViolation {
                    suffix: s.render(&alphabet),
                    word: w.render(&alphabet),
                });
            }
        }
        Ok(Self { alphabet, leaves })
    }

    /// The single-leaf tree `{ε}` of an i.i.d. source.
    pub fn root_only(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            leaves: BTreeSet::from([Word::empty()]),
        }
    }

    /// Parses leaves written as token strings (`EPS` for the empty word).
    pub fn from_strs(alphabet: &Alphabet, leaves: &[&str]) -> Result<Self, crate::Error> {
        let words = leaves
            .iter()
            .map(|s| Word::parse(s, alphabet))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(alphabet.clone(), words)?)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn leaves(&self) -> &BTreeSet<Word> {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn height(&self) -> usize {
        self.leaves.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.leaves.contains(w)
    }

    /// Proper suffixes of leaves.
    pub fn internal_nodes(&self) -> BTreeSet<Word> {
        self.leaves.iter().flat_map(|w| w.proper_suffixes()).collect()
    }

    /// Leaves together with internal nodes.
    pub fn nodes(&self) -> BTreeSet<Word> {
        let mut out = self.internal_nodes();
        out.extend(self.leaves.iter().cloned());
        out
    }

    /// `T|_K`: leaves of length at most `K`, plus the length-`K` proper
    /// suffixes of longer leaves.
    pub fn truncate(&self, level: TruncationLevel) -> ContextTree {
        let k = level.get();
        let leaves = self
            .leaves
            .iter()
            .map(|w| if w.len() <= k { w.clone() } else { w.suffix(k) })
            .collect();
        Self {
            alphabet: self.alphabet.clone(),
            leaves,
        }
    }

    /// `self ⪯ other`: every leaf of `self` is a leaf or an internal node of
    /// `other`.
    pub fn is_included_in(&self, other: &ContextTree) -> bool {
        let nodes = other.nodes();
        self.leaves.iter().all(|w| nodes.contains(w))
    }

    /// For a complete tree every internal node has all `|A|` one-symbol
    /// extensions as nodes. Returns the first missing extension, if any.
    pub fn missing_branch(&self) -> Option<Word> {
        let nodes = self.nodes();
        for v in self.internal_nodes() {
            for b in 0..self.alphabet.size() {
                let child = v.extend_past(b as u8);
                if !nodes.contains(&child) {
                    return Some(child);
                }
            }
        }
        None
    }

    /// The unique leaf that is a suffix of `past`, if any.
    pub fn leaf_suffix_of(&self, past: &Word) -> Option<&Word> {
        let h = self.height().min(past.len());
        (0..=h).find_map(|k| self.leaves.get(&past.suffix(k)))
    }

    /// Leaves rendered as token strings, in leaf order.
    pub fn render_leaves(&self) -> Vec<String> {
        self.leaves.iter().map(|w| w.render(&self.alphabet)).collect()
    }
}

/// `t1 ⪯ t2`.
pub fn tree_includes(t1: &ContextTree, t2: &ContextTree) -> bool {
    t1.is_included_in(t2)
}
