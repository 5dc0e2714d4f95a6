//! Finite VLMC sources: a complete context tree with one next-symbol
//! distribution per leaf.

use crate::alphabet::{Alphabet, Symbol};
use crate::tree::{ContextTree, TreeError};
use crate::word::Word;
use thiserror::Error;

/// Tolerance on `|Σ_a p(a|w) − 1|` for model distributions.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("incomplete tree: no leaf covers pasts ending in {missing}")]
    Incomplete { missing: String },
    #[error("leaf {leaf}: expected {expected} probabilities, got {got}")]
    WrongLength { leaf: String, expected: usize, got: usize },
    #[error("leaf {leaf}: probability {value} outside [0, 1]")]
    OutOfRange { leaf: String, value: f64 },
    #[error("leaf {leaf}: probabilities sum to {sum}, expected 1")]
    BadSum { leaf: String, sum: f64 },
    #[error("leaf {0} is listed more than once")]
    DuplicateLeaf(String),
    #[error("past of length {len} is shorter than the tree height {height} and matches no leaf")]
    PastTooShort { len: usize, height: usize },
}

/// Checks one next-symbol distribution against the alphabet size.
pub fn check_distribution(leaf: &str, probs: &[f64], alphabet_size: usize) -> Result<(), ModelError> {
    if probs.len() != alphabet_size {
        return Err(ModelError::WrongLength {
            leaf: leaf.to_string(),
            expected: alphabet_size,
            got: probs.len(),
        });
    }
    if let Some(&value) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ModelError::OutOfRange { leaf: leaf.to_string(), value });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(ModelError::BadSum { leaf: leaf.to_string(), sum });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlmcModel {
    tree: ContextTree,
    // aligned with tree.leaves() order
    dists: Vec<Vec<f64>>,
}

impl VlmcModel {
    /// Builds a model from `(leaf, distribution)` pairs. The leaves must form
    /// a complete suffix-free tree.
    pub fn new(alphabet: Alphabet, entries: Vec<(Word, Vec<f64>)>) -> Result<Self, ModelError> {
        let tree = ContextTree::new(alphabet.clone(), entries.iter().map(|(w, _)| w.clone()))?;
        if let Some(missing) = tree.missing_branch() {
            return Err(ModelError::Incomplete {
                missing: missing.render(&alphabet),
            });
        }
        let mut sorted = entries;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(pair) = sorted.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(ModelError::DuplicateLeaf(pair[0].0.render(&alphabet)));
        }
        for (w, p) in &sorted {
            check_distribution(&w.render(&alphabet), p, alphabet.size())?;
        }
        let dists = sorted.into_iter().map(|(_, p)| p).collect();
        Ok(Self { tree, dists })
    }

    /// Convenience constructor from token strings, e.g.
    /// `[("1", vec![0.7, 0.3]), ("EPS", ...)]`.
    pub fn from_strs(alphabet: &Alphabet, entries: &[(&str, Vec<f64>)]) -> Result<Self, crate::Error> {
        let mut parsed = Vec::with_capacity(entries.len());
        for (w, p) in entries {
            parsed.push((Word::parse(w, alphabet)?, p.clone()));
        }
        Ok(Self::new(alphabet.clone(), parsed)?)
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    pub fn alphabet_size(&self) -> usize {
        self.tree.alphabet().size()
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    /// Leaves with their distributions, in leaf order.
    pub fn entries(&self) -> impl Iterator<Item = (&Word, &[f64])> {
        self.tree.leaves().iter().zip(self.dists.iter().map(Vec::as_slice))
    }

    pub fn leaf_index(&self, leaf: &Word) -> Option<usize> {
        self.tree.leaves().iter().position(|w| w == leaf)
    }

    pub fn dist_at(&self, index: usize) -> &[f64] {
        &self.dists[index]
    }

    pub fn dist(&self, leaf: &Word) -> Option<&[f64]> {
        self.leaf_index(leaf).map(|i| self.dists[i].as_slice())
    }

    /// The unique leaf that is a suffix of `past`.
    pub fn context_of(&self, past: &Word) -> Result<&Word, ModelError> {
        self.tree.leaf_suffix_of(past).ok_or(ModelError::PastTooShort {
            len: past.len(),
            height: self.height(),
        })
    }

    /// Next-symbol distribution after `past`.
    pub fn next_dist(&self, past: &Word) -> Result<&[f64], ModelError> {
        let leaf = self.context_of(past)?;
        Ok(self.dist(leaf).expect("leaf has a distribution"))
    }

    pub fn resolver(&self) -> ContextResolver {
        ContextResolver::new(self)
    }
}

/// Suffix trie over the model leaves for O(h) context lookup on a history
/// slice (most recent symbol last).
#[derive(Debug, Clone)]
pub struct ContextResolver {
    alphabet_size: usize,
    // children[node * |A| + b]; usize::MAX for absent
    children: Vec<usize>,
    // leaf index for leaf nodes
    leaf: Vec<Option<usize>>,
}

impl ContextResolver {
    fn new(model: &VlmcModel) -> Self {
        let a = model.alphabet_size();
        let mut r = Self {
            alphabet_size: a,
            children: vec![usize::MAX; a],
            leaf: vec![None],
        };
        for (idx, w) in model.tree().leaves().iter().enumerate() {
            let mut node = 0;
            for &b in w.symbols().iter().rev() {
                let slot = node * a + b as usize;
                if r.children[slot] == usize::MAX {
                    r.children[slot] = r.leaf.len();
                    r.leaf.push(None);
                    r.children.extend(std::iter::repeat_n(usize::MAX, a));
                }
                node = r.children[slot];
            }
            r.leaf[node] = Some(idx);
        }
        r
    }

    /// Leaf index of the context of `history`, or `None` if the history is
    /// too short to reach a leaf.
    pub fn resolve(&self, history: &[Symbol]) -> Option<usize> {
        let mut node = 0;
        let mut back = history.iter().rev();
        loop {
            if let Some(i) = self.leaf[node] {
                return Some(i);
            }
            let b = *back.next()?;
            node = self.children[node * self.alphabet_size + b as usize];
            if node == usize::MAX {
                return None;
            }
        }
    }
}
