//! Context tree estimation for variable-length Markov chains.
//!
//! The crate covers the whole pipeline:
//!
//! - [`alphabet`], [`word`], [`tree`], [`model`]: words, context trees with
//!   truncation and inclusion, and finite VLMC sources;
//! - [`counts`]: the suffix-count trie `N(w, a)` of a sample;
//! - [`infodiv`]: Kullback-Leibler divergences and likelihood scores;
//! - [`estimators`]: algorithm Context, the penalized maximum likelihood
//!   tree via CTM, and an exhaustive-search reference;
//! - [`simulate`]: stationary distributions, marginals and sample paths;
//! - [`bounds`]: closed-form over- and under-estimation bounds, deviation
//!   inequalities and model coefficients;
//! - [`experiments`]: seeded Monte Carlo harnesses and CSV output;
//! - [`format`]: text formats for models, trees and samples.

#![forbid(unsafe_code)]

pub mod alphabet;
pub mod bounds;
pub mod counts;
pub mod estimators;
pub mod experiments;
pub mod format;
pub mod infodiv;
pub mod model;
pub mod simulate;
pub mod tree;
pub mod word;

pub use alphabet::{Alphabet, Symbol};
pub use counts::{CountTrie, Sample};
pub use estimators::{EstimatorConfig, Schedule};
pub use model::VlmcModel;
pub use tree::{tree_includes, ContextTree, TruncationLevel};
pub use word::Word;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Alphabet(#[from] alphabet::AlphabetError),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Format(#[from] format::FormatError),
    #[error(transparent)]
    Count(#[from] counts::CountError),
    #[error(transparent)]
    Info(#[from] infodiv::InfoError),
    #[error(transparent)]
    Estimate(#[from] estimators::EstimateError),
    #[error(transparent)]
    Sim(#[from] simulate::SimError),
    #[error(transparent)]
    Bound(#[from] bounds::BoundError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    AtPath {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}
