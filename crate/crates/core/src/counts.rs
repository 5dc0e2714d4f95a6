//! Suffix-count trie: `N(w, a)` and `N(w)` for every context `w` of length
//! at most `d` observed in a sample.
//!
//! The first `past` raw symbols of a [`Sample`] play the role of the
//! observed past `X_{-d+1}..X_0`, so every one of the `n` effective
//! positions has a full window of `d` preceding symbols. That makes the
//! child-sum identity `N(w, a) = Σ_b N(bw, a)` exact for `|w| < d`.

use crate::alphabet::{Alphabet, Symbol};
use crate::word::Word;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("sample of length {len} is too short: need at least {needed} symbols")]
    SampleTooShort { len: usize, needed: usize },
    #[error("past length must be at least 1")]
    ZeroPast,
    #[error("trie depth must be at least 1")]
    ZeroDepth,
    #[error("trie depth {depth} exceeds the observed past length {past}")]
    DepthExceedsPast { depth: usize, past: usize },
    #[error("word of length {len} exceeds trie depth {depth}")]
    DepthExceeded { len: usize, depth: usize },
    #[error("symbol index {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
}

/// Raw symbols whose first `past` entries are the observed past.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    alphabet: Alphabet,
    symbols: Vec<Symbol>,
    past: usize,
}

impl Sample {
    pub fn new(alphabet: Alphabet, symbols: Vec<Symbol>, past: usize) -> Result<Self, CountError> {
        if past == 0 {
            return Err(CountError::ZeroPast);
        }
        if symbols.len() < past + 1 {
            return Err(CountError::SampleTooShort {
                len: symbols.len(),
                needed: past + 1,
            });
        }
        let size = alphabet.size();
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= size) {
            return Err(CountError::SymbolOutOfRange { symbol: s as usize, size });
        }
        Ok(Self { alphabet, symbols, past })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// All raw symbols, past included.
    pub fn raw(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn past_len(&self) -> usize {
        self.past
    }

    /// Effective length `n = m − past`.
    pub fn n(&self) -> usize {
        self.symbols.len() - self.past
    }

    /// The effective symbols `X_1..X_n`.
    pub fn effective(&self) -> &[Symbol] {
        &self.symbols[self.past..]
    }
}

/// Default maximal depth for `m` raw symbols: the largest `d >= 1` with
/// `|A|^d <= m − d`.
pub fn default_depth(raw_len: usize, alphabet_size: usize) -> usize {
    let mut d = 1;
    while let Some(pow) = alphabet_size.checked_pow(d as u32 + 1) {
        if raw_len < d + 1 || pow > raw_len - (d + 1) {
            break;
        }
        d += 1;
    }
    d
}

/// Handle to a node of a [`CountTrie`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    /// Dense index in `0..node_count()`.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

const NONE: u32 = u32::MAX;

/// Observed counts for one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordCounts {
    pub total: u64,
    pub next: Vec<u64>,
}

/// Counts of every observed word of length at most `depth`. Node `w` has
/// children `bw`; only words with `N(w) >= 1` are stored, the root `ε`
/// always is.
#[derive(Debug, Clone)]
pub struct CountTrie {
    alphabet: Alphabet,
    depth: usize,
    n: usize,
    parent: Vec<u32>,
    symbol: Vec<Symbol>,
    node_depth: Vec<u32>,
    total: Vec<u64>,
    // flat, |A| entries per node
    next: Vec<u64>,
    children: Vec<u32>,
}

impl CountTrie {
    /// Single pass over the effective positions, walking each window
    /// backwards from the most recent symbol.
    pub fn build(sample: &Sample, depth: usize) -> Result<Self, CountError> {
        if depth == 0 {
            return Err(CountError::ZeroDepth);
        }
        if depth > sample.past_len() {
            return Err(CountError::DepthExceedsPast {
                depth,
                past: sample.past_len(),
            });
        }
        let a = sample.alphabet().size();
        let mut trie = Self {
            alphabet: sample.alphabet().clone(),
            depth,
            n: sample.n(),
            parent: vec![NONE],
            symbol: vec![0],
            node_depth: vec![0],
            total: vec![0],
            next: vec![0; a],
            children: vec![NONE; a],
        };
        let raw = sample.raw();
        for t in sample.past_len()..raw.len() {
            let x = raw[t] as usize;
            let mut node = 0usize;
            trie.total[0] += 1;
            trie.next[x] += 1;
            for k in 1..=depth {
                let b = raw[t - k];
                node = trie.child_or_insert(node, b);
                trie.total[node] += 1;
                trie.next[node * a + x] += 1;
            }
        }
        Ok(trie)
    }

    fn child_or_insert(&mut self, node: usize, b: Symbol) -> usize {
        let a = self.alphabet.size();
        let slot = node * a + b as usize;
        if self.children[slot] == NONE {
            let id = self.parent.len();
            self.children[slot] = id as u32;
            self.parent.push(node as u32);
            self.symbol.push(b);
            self.node_depth.push(self.node_depth[node] + 1);
            self.total.push(0);
            self.next.extend(std::iter::repeat_n(0, a));
            self.children.extend(std::iter::repeat_n(NONE, a));
        }
        self.children[slot] as usize
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Effective sample length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn total(&self, id: NodeId) -> u64 {
        self.total[id.0 as usize]
    }

    pub fn next_counts(&self, id: NodeId) -> &[u64] {
        let a = self.alphabet.size();
        let i = id.0 as usize * a;
        &self.next[i..i + a]
    }

    pub fn node_depth(&self, id: NodeId) -> usize {
        self.node_depth[id.0 as usize] as usize
    }

    pub fn child(&self, id: NodeId, b: Symbol) -> Option<NodeId> {
        let c = self.children[id.0 as usize * self.alphabet.size() + b as usize];
        (c != NONE).then_some(NodeId(c))
    }

    /// Observed children `bw`, in symbol order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = (Symbol, NodeId)> + '_ {
        let a = self.alphabet.size();
        (0..a).filter_map(move |b| self.child(id, b as Symbol).map(|c| (b as Symbol, c)))
    }

    /// The word stored at a node.
    pub fn word(&self, id: NodeId) -> Word {
        let mut v = Vec::with_capacity(self.node_depth(id));
        let mut node = id.0;
        while node != 0 {
            v.push(self.symbol[node as usize]);
            node = self.parent[node as usize];
        }
        Word::new(v)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.parent.len() as u32).map(NodeId)
    }

    /// Node of `w`, or `None` when `w` was not observed.
    pub fn find(&self, w: &Word) -> Result<Option<NodeId>, CountError> {
        if w.len() > self.depth {
            return Err(CountError::DepthExceeded {
                len: w.len(),
                depth: self.depth,
            });
        }
        let mut node = self.root();
        for &b in w.symbols().iter().rev() {
            match self.child(node, b) {
                Some(c) => node = c,
                None => return Ok(None),
            }
        }
        Ok(Some(node))
    }

    /// `N(w)` and `N(w, ·)`; zeros for unobserved words.
    pub fn query(&self, w: &Word) -> Result<WordCounts, CountError> {
        Ok(match self.find(w)? {
            Some(id) => WordCounts {
                total: self.total(id),
                next: self.next_counts(id).to_vec(),
            },
            None => WordCounts {
                total: 0,
                next: vec![0; self.alphabet.size()],
            },
        })
    }

    /// `p̂(·|w)`; uniform when `w` was not observed.
    pub fn empirical_prob(&self, w: &Word) -> Result<Vec<f64>, CountError> {
        Ok(empirical_dist(&self.query(w)?.next))
    }
}

/// `N(w, a) / N(w)`, or the uniform vector when `N(w) = 0`.
pub fn empirical_dist(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        let u = 1.0 / counts.len() as f64;
        return vec![u; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abab() -> (Alphabet, CountTrie) {
        let a = Alphabet::parse("ab").unwrap();
        let s = Sample::new(a.clone(), a.encode("ab abab").unwrap(), 2).unwrap();
        let t = CountTrie::build(&s, 2).unwrap();
        (a, t)
    }

    fn w(a: &Alphabet, s: &str) -> Word {
        Word::parse(s, a).unwrap()
    }

    #[test]
    fn abab_counts() {
        let (a, t) = abab();
        assert_eq!(t.n(), 4);
        let qa = t.query(&w(&a, "a")).unwrap();
        assert_eq!(qa.next, vec![0, 2]);
        let qb = t.query(&w(&a, "b")).unwrap();
        assert_eq!(qb.next, vec![2, 0]);
        assert_eq!(t.query(&Word::empty()).unwrap(), WordCounts { total: 4, next: vec![2, 2] });
        assert_eq!(t.query(&w(&a, "ba")).unwrap(), WordCounts { total: 2, next: vec![0, 2] });
        assert_eq!(t.query(&w(&a, "aa")).unwrap(), WordCounts { total: 0, next: vec![0, 0] });
        assert!(matches!(
            t.query(&w(&a, "aba")),
            Err(CountError::DepthExceeded { len: 3, depth: 2 })
        ));
    }

    #[test]
    fn abab_empirical() {
        let (a, t) = abab();
        assert_eq!(t.empirical_prob(&w(&a, "a")).unwrap(), vec![0.0, 1.0]);
        assert_eq!(t.empirical_prob(&Word::empty()).unwrap(), vec![0.5, 0.5]);
        assert_eq!(t.empirical_prob(&w(&a, "aa")).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn node_words_roundtrip() {
        let (_, t) = abab();
        for id in t.nodes() {
            let word = t.word(id);
            assert_eq!(word.len(), t.node_depth(id));
            assert_eq!(t.find(&word).unwrap(), Some(id));
        }
    }

    #[test]
    fn build_errors() {
        let a = Alphabet::binary();
        assert_eq!(
            Sample::new(a.clone(), vec![0, 1], 2),
            Err(CountError::SampleTooShort { len: 2, needed: 3 })
        );
        assert_eq!(Sample::new(a.clone(), vec![0, 1], 0), Err(CountError::ZeroPast));
        let s = Sample::new(a, vec![0, 1, 1], 1).unwrap();
        assert!(matches!(CountTrie::build(&s, 2), Err(CountError::DepthExceedsPast { .. })));
        assert!(matches!(CountTrie::build(&s, 0), Err(CountError::ZeroDepth)));
    }

    #[test]
    fn default_depth_keeps_leaves_below_n() {
        assert_eq!(default_depth(3, 2), 1);
        assert_eq!(default_depth(1000, 2), 9);
        assert_eq!(default_depth(100_000, 2), 16);
        for m in [2usize, 10, 100, 5000] {
            for a in 2..5usize {
                let d = default_depth(m, a);
                assert!(d == 1 || a.pow(d as u32) <= m - d);
            }
        }
    }
}
