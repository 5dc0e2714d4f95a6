//! Context tree estimators: Rissanen's algorithm Context and the penalized
//! maximum likelihood tree computed by Context Tree Maximizing (CTM), plus
//! an exhaustive-search reference for the latter.
//!
//! Both estimators are post-order walks over the observed nodes of a
//! [`CountTrie`]. Only observed children `bw ∈ V_n` take part in any
//! recursion. Ties follow the definitions exactly: Context keeps the
//! children of `w` when `Δ(w) >= δ`, while CTM expands `w` only when the
//! children's value is strictly larger, so score ties prefer the shallower
//! tree.

use crate::counts::{empirical_dist, CountError, CountTrie, NodeId};
use crate::infodiv::{kl_div_unchecked, log_ml_counts, penalized_score};
use crate::tree::ContextTree;
use crate::word::Word;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest number of acceptable trees [`exhaustive_pml`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("threshold must be positive and finite, got {0}")]
    BadThreshold(f64),
    #[error("penalty must be positive and finite, got {0}")]
    BadPenalty(f64),
    #[error("maximal depth must be at least 1")]
    ZeroDepth,
    #[error("estimator depth {config} does not match trie depth {trie}")]
    DepthMismatch { config: usize, trie: usize },
    #[error("more than {limit} acceptable trees ({count} counted)")]
    TooManyTrees { count: u128, limit: u128 },
    #[error("word {0} was not observed in the sample")]
    NotObserved(String),
    #[error("invalid schedule {0:?}: expected bic, const:<v>, clogn:<c> or cloglogn:<c>")]
    BadSchedule(String),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// Penalty or threshold as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `(|A| − 1)/2 · log n`.
    Bic,
    Const(f64),
    /// `c · log n`.
    CLogN(f64),
    /// `c · log log n`.
    CLogLogN(f64),
}

impl Schedule {
    pub fn eval(&self, n: usize, alphabet_size: usize) -> f64 {
        let ln = (n as f64).ln();
        match *self {
            Schedule::Bic => (alphabet_size as f64 - 1.0) / 2.0 * ln,
            Schedule::Const(v) => v,
            Schedule::CLogN(c) => c * ln,
            Schedule::CLogLogN(c) => c * ln.ln(),
        }
    }
}

impl FromStr for Schedule {
    type Err = EstimateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EstimateError::BadSchedule(s.to_string());
        if s == "bic" {
            return Ok(Schedule::Bic);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = value.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        match kind {
            "const" => Ok(Schedule::Const(v)),
            "clogn" => Ok(Schedule::CLogN(v)),
            "cloglogn" => Ok(Schedule::CLogLogN(v)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Bic => write!(f, "bic"),
            Schedule::Const(v) => write!(f, "const:{v}"),
            Schedule::CLogN(c) => write!(f, "clogn:{c}"),
            Schedule::CLogLogN(c) => write!(f, "cloglogn:{c}"),
        }
    }
}

/// Maximal depth `d`, Context threshold `δ_n` and PML penalty `f(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub depth: usize,
    pub threshold: f64,
    pub penalty: f64,
}

impl EstimatorConfig {
    pub fn new(depth: usize, threshold: f64, penalty: f64) -> Result<Self, EstimateError> {
        if depth == 0 {
            return Err(EstimateError::ZeroDepth);
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(EstimateError::BadThreshold(threshold));
        }
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(EstimateError::BadPenalty(penalty));
        }
        Ok(Self { depth, threshold, penalty })
    }

    /// Evaluates both schedules at sample size `n`.
    pub fn from_schedules(
        depth: usize,
        threshold: Schedule,
        penalty: Schedule,
        n: usize,
        alphabet_size: usize,
    ) -> Result<Self, EstimateError> {
        Self::new(depth, threshold.eval(n, alphabet_size), penalty.eval(n, alphabet_size))
    }

    fn check(&self, trie: &CountTrie) -> Result<(), EstimateError> {
        if self.depth != trie.depth() {
            return Err(EstimateError::DepthMismatch {
                config: self.depth,
                trie: trie.depth(),
            });
        }
        Ok(())
    }
}

/// Per-node quantities: `Δ(w)` and `C_w` for Context, `log V_w` and `χ_w`
/// for CTM.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDiagnostic {
    pub count: u64,
    pub statistic: f64,
    pub indicator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub tree: ContextTree,
    pub diagnostics: BTreeMap<Word, NodeDiagnostic>,
    /// Penalized log-likelihood of `tree` under the configured penalty.
    pub score: f64,
}

fn delta_at(trie: &CountTrie, node: NodeId) -> f64 {
    let parent = empirical_dist(trie.next_counts(node));
    trie.children(node)
        .map(|(_, c)| {
            let child = empirical_dist(trie.next_counts(c));
            trie.total(c) as f64 * kl_div_unchecked(&child, &parent).to_f64()
        })
        .sum()
}

/// `Δ(w) = Σ_{b: bw ∈ V_n} N(bw) D(p̂(·|bw); p̂(·|w))`.
pub fn delta(trie: &CountTrie, w: &Word) -> Result<f64, EstimateError> {
    match trie.find(w)? {
        Some(node) => Ok(delta_at(trie, node)),
        None => Err(EstimateError::NotObserved(w.render(trie.alphabet()))),
    }
}

struct Walk {
    statistic: Vec<f64>,
    indicator: Vec<bool>,
}

impl Walk {
    fn new(size: usize) -> Self {
        Self {
            statistic: vec![0.0; size],
            indicator: vec![false; size],
        }
    }

    /// Leaves are the first nodes with a cleared indicator on each path
    /// from the root.
    fn tree(&self, trie: &CountTrie) -> ContextTree {
        let mut leaves = Vec::new();
        let mut stack = vec![trie.root()];
        while let Some(node) = stack.pop() {
            if self.indicator[node.index()] {
                stack.extend(trie.children(node).map(|(_, c)| c));
            } else {
                leaves.push(trie.word(node));
            }
        }
        ContextTree::new(trie.alphabet().clone(), leaves).expect("extracted leaves are suffix-free")
    }

    fn into_result(self, trie: &CountTrie, penalty: f64) -> Result<EstimationResult, EstimateError> {
        let tree = self.tree(trie);
        let diagnostics = trie
            .nodes()
            .map(|id| {
                (
                    trie.word(id),
                    NodeDiagnostic {
                        count: trie.total(id),
                        statistic: self.statistic[id.index()],
                        indicator: self.indicator[id.index()],
                    },
                )
            })
            .collect();
        let score = penalized_score(trie, &tree, penalty)?;
        Ok(EstimationResult { tree, diagnostics, score })
    }
}

/// Post-order traversal: children before parents.
fn post_order(trie: &CountTrie) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(trie.node_count());
    let mut stack = vec![(trie.root(), false)];
    while let Some((node, visited)) = stack.pop() {
        if visited {
            out.push(node);
        } else {
            stack.push((node, true));
            for (_, c) in trie.children(node) {
                stack.push((c, false));
            }
        }
    }
    out
}

/// Algorithm Context with threshold `config.threshold`.
pub fn context_estimator(trie: &CountTrie, config: &EstimatorConfig) -> Result<EstimationResult, EstimateError> {
    config.check(trie)?;
    let mut walk = Walk::new(trie.node_count());
    for node in post_order(trie) {
        let i = node.index();
        let d = delta_at(trie, node);
        walk.statistic[i] = d;
        walk.indicator[i] = if trie.total(node) <= 1 || trie.node_depth(node) >= config.depth {
            false
        } else {
            d >= config.threshold || trie.children(node).any(|(_, c)| walk.indicator[c.index()])
        };
    }
    walk.into_result(trie, config.penalty)
}

/// Penalized maximum likelihood tree via CTM with penalty `config.penalty`,
/// all values in the log domain.
pub fn ctm_estimator(trie: &CountTrie, config: &EstimatorConfig) -> Result<EstimationResult, EstimateError> {
    config.check(trie)?;
    let mut walk = Walk::new(trie.node_count());
    let f = config.penalty;
    for node in post_order(trie) {
        let i = node.index();
        let leaf_value = -f + log_ml_counts(trie.next_counts(node));
        let mut children = trie.children(node).peekable();
        if trie.node_depth(node) >= config.depth || children.peek().is_none() {
            walk.statistic[i] = leaf_value;
            walk.indicator[i] = false;
            continue;
        }
        let child_sum: f64 = children.map(|(_, c)| walk.statistic[c.index()]).sum();
        let expand = child_sum > leaf_value;
        walk.statistic[i] = if expand { child_sum } else { leaf_value };
        walk.indicator[i] = expand;
    }
    walk.into_result(trie, f)
}

/// Definition of an acceptable tree: leaves observed, height at most `d`,
/// and every observed word of length at most `d` is a leaf, an internal
/// node, or has a leaf as a proper suffix.
pub fn is_acceptable(tree: &ContextTree, trie: &CountTrie) -> bool {
    if tree.alphabet().size() != trie.alphabet_size() || tree.height() > trie.depth() {
        return false;
    }
    let observed = |w: &Word| matches!(trie.find(w), Ok(Some(id)) if trie.total(id) >= 1);
    if !tree.leaves().iter().all(observed) {
        return false;
    }
    let internal: BTreeSet<Word> = tree.internal_nodes();
    let mut stack = vec![trie.root()];
    while let Some(node) = stack.pop() {
        let w = trie.word(node);
        if tree.contains(&w) {
            continue;
        }
        if !internal.contains(&w) {
            return false;
        }
        stack.extend(trie.children(node).map(|(_, c)| c));
    }
    true
}

/// Best tree found by [`exhaustive_pml`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub tree: ContextTree,
    pub score: f64,
    /// Best score among the remaining candidates, if any.
    pub runner_up: Option<f64>,
    pub candidates: usize,
}

fn count_trees(trie: &CountTrie, node: NodeId, depth: usize) -> u128 {
    if trie.node_depth(node) >= depth {
        return 1;
    }
    let mut children = trie.children(node).peekable();
    if children.peek().is_none() {
        return 1;
    }
    let product = children.fold(1u128, |acc, (_, c)| acc.saturating_mul(count_trees(trie, c, depth)));
    product.saturating_add(1)
}

fn enumerate_trees(trie: &CountTrie, node: NodeId, depth: usize) -> Vec<Vec<Word>> {
    let mut out = vec![vec![trie.word(node)]];
    if trie.node_depth(node) >= depth {
        return out;
    }
    let mut expansions: Vec<Vec<Word>> = vec![Vec::new()];
    let mut any = false;
    for (_, c) in trie.children(node) {
        any = true;
        let options = enumerate_trees(trie, c, depth);
        let mut next = Vec::with_capacity(expansions.len() * options.len());
        for prefix in &expansions {
            for opt in &options {
                let mut v = prefix.clone();
                v.extend(opt.iter().cloned());
                next.push(v);
            }
        }
        expansions = next;
    }
    if any {
        out.extend(expansions);
    }
    out
}

/// Maximizes the penalized log-likelihood by scoring every acceptable
/// tree. Among equal scores the first enumerated tree wins; a node's
/// leaf option is enumerated before its expansions.
pub fn exhaustive_pml(trie: &CountTrie, config: &EstimatorConfig) -> Result<ExhaustiveResult, EstimateError> {
    config.check(trie)?;
    let count = count_trees(trie, trie.root(), config.depth);
    if count > EXHAUSTIVE_LIMIT {
        return Err(EstimateError::TooManyTrees { count, limit: EXHAUSTIVE_LIMIT });
    }
    let mut best: Option<(ContextTree, f64)> = None;
    let mut runner_up: Option<f64> = None;
    let candidates = enumerate_trees(trie, trie.root(), config.depth);
    let total = candidates.len();
    for leaves in candidates {
        let tree = ContextTree::new(trie.alphabet().clone(), leaves).expect("enumerated trees are suffix-free");
        let score = penalized_score(trie, &tree, config.penalty)?;
        match &best {
            Some((_, b)) if score <= *b => {
                runner_up = Some(runner_up.map_or(score, |r: f64| r.max(score)));
            }
            _ => {
                if let Some((_, b)) = &best {
                    runner_up = Some(runner_up.map_or(*b, |r: f64| r.max(*b)));
                }
                best = Some((tree, score));
            }
        }
    }
    let (tree, score) = best.expect("the root-only tree is always acceptable");
    Ok(ExhaustiveResult {
        tree,
        score,
        runner_up,
        candidates: total,
    })
}
