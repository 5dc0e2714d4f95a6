//! Text formats for models, trees and samples.
//!
//! Model file:
//!
//! ```text
//! alphabet: 0 1
//! 1 : 0.7 0.3
//! 10 : 0.4 0.6
//! 00 : 0.1 0.9
//! ```
//!
//! One leaf per line, probabilities in alphabet order, `EPS` for the empty
//! word. Tree files use the same layout without the probabilities. Blank
//! lines and lines starting with `#` are ignored.

use crate::alphabet::{Alphabet, AlphabetError, Symbol};
use crate::model::{ModelError, VlmcModel};
use crate::tree::ContextTree;
use crate::word::Word;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Symbol {
        line: usize,
        #[source]
        source: AlphabetError,
    },
    #[error("line {line}, token {token}: {text:?} is not a single alphabet symbol")]
    Token { line: usize, token: usize, text: String },
    #[error("missing `alphabet:` header line")]
    MissingHeader,
}

/// How sample symbols are separated in a sample file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    /// One character per symbol; whitespace is ignored.
    #[default]
    Contiguous,
    /// Whitespace-separated single-character tokens.
    Whitespace,
}

impl std::str::FromStr for SampleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contiguous" => Ok(Self::Contiguous),
            "whitespace" => Ok(Self::Whitespace),
            other => Err(format!("unknown sample format {other:?} (contiguous | whitespace)")),
        }
    }
}

/// A model file as written, before tree and distribution validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModelFile {
    pub alphabet: Alphabet,
    pub entries: Vec<RawLeaf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawLeaf {
    pub line: usize,
    pub word: Word,
    pub probs: Vec<f64>,
}

impl RawModelFile {
    pub fn into_model(self) -> Result<VlmcModel, ModelError> {
        VlmcModel::new(
            self.alphabet,
            self.entries.into_iter().map(|e| (e.word, e.probs)).collect(),
        )
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<Alphabet, FormatError> {
    let (line, first) = lines.next().ok_or(FormatError::MissingHeader)?;
    let decl = first
        .strip_prefix("alphabet:")
        .ok_or(FormatError::MissingHeader)?;
    Alphabet::parse(decl).map_err(|source| FormatError::Symbol { line, source })
}

/// Parses the syntax of a model file. Tree and distribution invariants are
/// checked by [`RawModelFile::into_model`].
pub fn parse_model_text(text: &str) -> Result<RawModelFile, FormatError> {
    let mut lines = content_lines(text);
    let alphabet = parse_header(&mut lines)?;
    let mut entries = Vec::new();
    for (line, l) in lines {
        let (w, probs) = l.split_once(':').ok_or_else(|| FormatError::Syntax {
            line,
            message: format!("expected `<word> : <probabilities>`, got {l:?}"),
        })?;
        let word = Word::parse(w, &alphabet).map_err(|source| FormatError::Symbol { line, source })?;
        let probs = probs
            .split_whitespace()
            .map(|p| {
                p.parse::<f64>().map_err(|_| FormatError::Syntax {
                    line,
                    message: format!("invalid probability {p:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        entries.push(RawLeaf { line, word, probs });
    }
    Ok(RawModelFile { alphabet, entries })
}

pub fn parse_model(text: &str) -> Result<VlmcModel, crate::Error> {
    Ok(parse_model_text(text)?.into_model()?)
}

pub fn model_to_text(model: &VlmcModel) -> String {
    let alphabet = model.alphabet();
    let mut out = format!("alphabet: {alphabet}\n");
    for (w, p) in model.entries() {
        let probs: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{} : {}\n", w.render(alphabet), probs.join(" ")));
    }
    out
}

/// Parses a tree file: header plus one leaf per line; anything after a `:`
/// on a leaf line is ignored, so model files also parse as trees.
pub fn parse_tree(text: &str) -> Result<ContextTree, crate::Error> {
    let (alphabet, leaves) = parse_tree_text(text)?;
    Ok(ContextTree::new(alphabet, leaves)?)
}

/// Syntax-only tree parse; suffix-freeness is left to [`ContextTree::new`].
pub fn parse_tree_text(text: &str) -> Result<(Alphabet, Vec<Word>), FormatError> {
    let mut lines = content_lines(text);
    let alphabet = parse_header(&mut lines)?;
    let mut leaves = Vec::new();
    for (line, l) in lines {
        let w = l.split(':').next().unwrap_or_default();
        leaves.push(Word::parse(w, &alphabet).map_err(|source| FormatError::Symbol { line, source })?);
    }
    Ok((alphabet, leaves))
}

pub fn tree_to_text(tree: &ContextTree) -> String {
    let mut out = format!("alphabet: {}\n", tree.alphabet());
    for leaf in tree.render_leaves() {
        out.push_str(&leaf);
        out.push('\n');
    }
    out
}

/// Parses sample symbols. Errors carry the 1-based line and column (or
/// token number in whitespace mode).
pub fn parse_sample(text: &str, alphabet: &Alphabet, format: SampleFormat) -> Result<Vec<Symbol>, FormatError> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        match format {
            SampleFormat::Contiguous => {
                out.extend(alphabet.encode(l).map_err(|source| FormatError::Symbol { line, source })?);
            }
            SampleFormat::Whitespace => {
                for (t, tok) in l.split_whitespace().enumerate() {
                    let mut chars = tok.chars();
                    let sym = match (chars.next(), chars.next()) {
                        (Some(c), None) => alphabet.index_of(c),
                        _ => None,
                    };
                    out.push(sym.ok_or_else(|| FormatError::Token {
                        line,
                        token: t + 1,
                        text: tok.to_string(),
                    })?);
                }
            }
        }
    }
    Ok(out)
}

pub fn sample_to_text(symbols: &[Symbol], alphabet: &Alphabet, format: SampleFormat) -> String {
    let mut out = match format {
        SampleFormat::Contiguous => alphabet.decode(symbols),
        SampleFormat::Whitespace => symbols
            .iter()
            .map(|&s| alphabet.token(s).to_string())
            .collect::<Vec<_>>()
            .join(" "),
    };
    out.push('\n');
    out
}

fn read(path: &Path) -> Result<String, crate::Error> {
    std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn at_path<T>(path: &Path, r: Result<T, crate::Error>) -> Result<T, crate::Error> {
    r.map_err(|e| crate::Error::AtPath {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

pub fn read_model(path: &Path) -> Result<VlmcModel, crate::Error> {
    let text = read(path)?;
    at_path(path, parse_model(&text))
}

pub fn read_tree(path: &Path) -> Result<ContextTree, crate::Error> {
    let text = read(path)?;
    at_path(path, parse_tree(&text))
}

pub fn read_sample(path: &Path, alphabet: &Alphabet, format: SampleFormat) -> Result<Vec<Symbol>, crate::Error> {
    let text = read(path)?;
    at_path(path, parse_sample(&text, alphabet, format).map_err(Into::into))
}
