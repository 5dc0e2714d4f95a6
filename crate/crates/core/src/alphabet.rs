//! Finite alphabets of single-character tokens.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a symbol in its [`Alphabet`].
pub type Symbol = u8;

/// Largest alphabet representable with [`Symbol`] indices.
pub const MAX_ALPHABET_SIZE: usize = Symbol::MAX as usize + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("alphabet needs at least 2 symbols, got {0}")]
    TooSmall(usize),
    #[error("alphabet has {0} symbols, at most {MAX_ALPHABET_SIZE} are supported")]
    TooLarge(usize),
    #[error("duplicate alphabet symbol {0:?}")]
    Duplicate(char),
    #[error("alphabet token {0:?} is not a single character")]
    NotSingleChar(String),
    #[error("alphabet token {0:?} is reserved")]
    Reserved(char),
    #[error("symbol {token:?} at position {position} is not in the alphabet")]
    UnknownSymbol { token: char, position: usize },
}

/// An ordered set of distinct single-character tokens. The position of a
/// token is its symbol index; distributions over the alphabet follow that
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, AlphabetError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.len() < 2 {
            return Err(AlphabetError::TooSmall(symbols.len()));
        }
        if symbols.len() > MAX_ALPHABET_SIZE {
            return Err(AlphabetError::TooLarge(symbols.len()));
        }
        for (i, &c) in symbols.iter().enumerate() {
            if c.is_whitespace() || c == ':' || c == '#' {
                return Err(AlphabetError::Reserved(c));
            }
            if symbols[..i].contains(&c) {
                return Err(AlphabetError::Duplicate(c));
            }
        }
        Ok(Self { symbols })
    }

    /// Parses a declaration such as `"0 1"` or `"acgt"`: whitespace-separated
    /// single-character tokens, or one contiguous run of characters.
    pub fn parse(decl: &str) -> Result<Self, AlphabetError> {
        let tokens: Vec<&str> = decl.split_whitespace().collect();
        if tokens.len() == 1 {
            return Self::new(tokens[0].chars());
        }
        let mut chars = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let mut it = tok.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(AlphabetError::NotSingleChar(tok.to_string())),
            }
        }
        Self::new(chars)
    }

    /// The binary alphabet `{0, 1}`.
    pub fn binary() -> Self {
        Self { symbols: vec!['0', '1'] }
    }

    /// Alphabet of the distinct characters of `text` (whitespace ignored),
    /// in sorted order.
    pub fn infer(text: &str) -> Result<Self, AlphabetError> {
        let mut chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        chars.sort_unstable();
        chars.dedup();
        Self::new(chars)
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<Symbol> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as Symbol)
    }

    pub fn token(&self, symbol: Symbol) -> char {
        self.symbols[symbol as usize]
    }

    /// Maps every non-whitespace character of `text` to its symbol index.
    /// Positions in errors are 1-based character offsets into `text`.
    pub fn encode(&self, text: &str) -> Result<Vec<Symbol>, AlphabetError> {
        let mut out = Vec::with_capacity(text.len());
        for (pos, c) in text.chars().enumerate() {
            if c.is_whitespace() {
                continue;
            }
            match self.index_of(c) {
                Some(i) => out.push(i),
                None => {
                    return Err(AlphabetError::UnknownSymbol {
                        token: c,
                        position: pos + 1,
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn decode(&self, symbols: &[Symbol]) -> String {
        symbols.iter().map(|&s| self.token(s)).collect()
    }
}

impl std::fmt::Display for Alphabet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, c) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
