//! Kullback-Leibler divergences and maximum-likelihood scores, in nats.

use crate::counts::{CountError, CountTrie};
use crate::tree::ContextTree;
use crate::word::Word;
use serde::Serialize;
use std::cmp::Ordering;
use thiserror::Error;

/// Tolerance on `|Σ P(a) − 1|` for divergence arguments.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("distribution sums to {0}, expected 1")]
    NotNormalized(f64),
}

/// A nonnegative real or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The value as `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Infinite, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
        }
    }
}

/// One term `P log(P/Q)` with `0 log(0/·) = 0` and `P log(P/0) = +∞`.
fn kl_term(p: f64, q: f64) -> ExtReal {
    if p == 0.0 {
        ExtReal::Finite(0.0)
    } else if q == 0.0 {
        ExtReal::Infinite
    } else {
        ExtReal::Finite(p * (p / q).ln())
    }
}

fn check_prob(p: f64) -> Result<(), InfoError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(InfoError::OutOfRange(p))
    }
}

/// Bernoulli divergence `d(p; q)`.
pub fn binary_kl(p: f64, q: f64) -> Result<ExtReal, InfoError> {
    check_prob(p)?;
    check_prob(q)?;
    let d = kl_term(p, q) + kl_term(1.0 - p, 1.0 - q);
    // rounding can push a true zero slightly negative
    Ok(match d {
        ExtReal::Finite(v) => ExtReal::Finite(v.max(0.0)),
        inf => inf,
    })
}

fn check_simplex(p: &[f64]) -> Result<(), InfoError> {
    for &x in p {
        check_prob(x)?;
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(InfoError::NotNormalized(s));
    }
    Ok(())
}

/// `D(P; Q) = Σ_a P(a) log(P(a)/Q(a))`.
pub fn kl_div(p: &[f64], q: &[f64]) -> Result<ExtReal, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::LengthMismatch(p.len(), q.len()));
    }
    check_simplex(p)?;
    check_simplex(q)?;
    Ok(kl_div_unchecked(p, q))
}

pub(crate) fn kl_div_unchecked(p: &[f64], q: &[f64]) -> ExtReal {
    let d = p
        .iter()
        .zip(q)
        .fold(ExtReal::Finite(0.0), |acc, (&a, &b)| acc + kl_term(a, b));
    match d {
        ExtReal::Finite(v) => ExtReal::Finite(v.max(0.0)),
        inf => inf,
    }
}

/// `Σ_a N(a) log(N(a)/N)`, the log maximum likelihood of a count vector.
/// Zero when all counts vanish.
pub fn log_ml_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * (c / total).ln()
        })
        .sum()
}

/// `log P̂_ML,w(X_1^n)`.
pub fn log_ml_word(trie: &CountTrie, w: &Word) -> Result<f64, CountError> {
    Ok(log_ml_counts(&trie.query(w)?.next))
}

/// `log P̂_ML,T(X_1^n)`, summed left to right over the sorted leaves.
pub fn log_ml_tree(trie: &CountTrie, tree: &ContextTree) -> Result<f64, CountError> {
    let mut sum = 0.0;
    for w in tree.leaves() {
        sum += log_ml_word(trie, w)?;
    }
    Ok(sum)
}

/// `log P̂_ML,T(X_1^n) − |T| f`.
pub fn penalized_score(trie: &CountTrie, tree: &ContextTree, penalty: f64) -> Result<f64, CountError> {
    Ok(log_ml_tree(trie, tree)? - tree.len() as f64 * penalty)
}
