//! Tokenization and normalization of math LaTeX.
//!
//! Normalization makes syntax variants of the same formula produce one token
//! stream: script arguments always get braces, a superscript is emitted before
//! its sibling subscript, and argument shorthand such as `\frac ab` is expanded
//! to `\frac { a } { b }`. Command names stay whole (`\sin` is one token), and
//! delimiter sizing prefixes are fused with their delimiter (`\left(`).

mod equiv;
mod lexer;
pub(crate) mod tree;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use equiv::{equiv, EquivTable, Equivalence};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LatexError {
    #[error("unbalanced braces: {0}")]
    UnbalancedBraces(String),
    #[error("environment `{0}` is never closed")]
    UnclosedEnvironment(String),
    #[error("`\\end{{{found}}}` does not close `\\begin{{{expected}}}`")]
    MismatchedEnvironment { expected: String, found: String },
    #[error("`\\end{{{0}}}` without a matching `\\begin`")]
    UnexpectedEnd(String),
    #[error("unbalanced \\left/\\right delimiters")]
    UnbalancedDelimiters,
    #[error("`{0}` must be followed by a delimiter")]
    MissingDelimiter(String),
    #[error("`{0}` is missing an argument")]
    MissingArgument(String),
    #[error("double superscript")]
    DoubleSuperscript,
    #[error("double subscript")]
    DoubleSubscript,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Char,
    Command,
    GroupOpen,
    GroupClose,
    ScriptMarker,
    Structural,
}

impl TokenKind {
    /// Whether tokens of this kind produce a glyph and receive a color.
    pub fn is_colorable(self) -> bool {
        matches!(self, TokenKind::Char | TokenKind::Command)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub order_index: usize,
    pub equiv_class: String,
}

/// A normalized token stream together with the source it came from.
#[derive(Clone, Debug)]
pub struct TokenSequence {
    tokens: Vec<Token>,
    colorable_count: usize,
    source: String,
    tree: Arc<Vec<tree::Node>>,
}

impl PartialEq for TokenSequence {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl TokenSequence {
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn colorable_count(&self) -> usize {
        self.colorable_count
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn colorable(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind.is_colorable())
    }

    pub(crate) fn tree(&self) -> &[tree::Node] {
        &self.tree
    }
}

/// Tokenizes with the built-in equivalence table.
pub fn tokenize(source: &str) -> Result<TokenSequence, LatexError> {
    tokenize_with(source, EquivTable::builtin())
}

pub fn tokenize_with(source: &str, table: &EquivTable) -> Result<TokenSequence, LatexError> {
    let mut nodes = tree::parse(source)?;
    let mut flat = Vec::new();
    tree::flatten(&mut nodes, &mut flat);
    let tokens: Vec<Token> = flat
        .into_iter()
        .enumerate()
        .map(|(i, (text, kind))| Token {
            equiv_class: table.class_of(&text).to_string(),
            text,
            kind,
            order_index: i,
        })
        .collect();
    let colorable_count = tokens.iter().filter(|t| t.kind.is_colorable()).count();
    Ok(TokenSequence {
        tokens,
        colorable_count,
        source: source.to_string(),
        tree: Arc::new(nodes),
    })
}

/// Joins token texts with single spaces.
pub fn detokenize(seq: &TokenSequence) -> String {
    seq.texts().join(" ")
}

/// Lexical split without normalization, for text metrics on sources that
/// fail to parse.
pub fn raw_tokens(source: &str) -> Vec<String> {
    lexer::lex(source).iter().map(|l| l.text()).collect()
}
