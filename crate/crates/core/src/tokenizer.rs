//! Hierarchical-punctuation tokenization of leaf sequences and the token
//! vocabulary shared by the corpus writers.
//!
//! Leaves are emitted in groups of `d` siblings. Between group `g - 1` and
//! group `g` sits the punctuation `p_i`, where `i - 1` is the number of
//! trailing zero digits of `g` in base `d`: `p_i` closes a subtree of
//! height `i`.

use serde::{Deserialize, Serialize};

use crate::broadcast::{validate_symbols, LeafSequence};
use crate::channel::{Channel, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TokenKind {
    Value(Symbol),
    /// `p_i` for `1 <= i <= h - 1`.
    Punct(u32),
    Refresh,
    MemSymbol(Symbol),
    /// Child index `1..=d` inside a memory state.
    ChildIndex(u32),
    Pad,
    MemStart,
    MemEnd,
}

/// Dense token ids: values, punctuation, refresh, memory symbols, child
/// indices, padding, memory start, memory end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    alphabet: usize,
    d: usize,
    h: u32,
    names: Vec<String>,
}

impl TokenVocab {
    pub fn new(channel: &Channel, shape: &TreeShape) -> Self {
        let alphabet = channel.alphabet_size();
        let (d, h) = (shape.d(), shape.h());
        let mut names = Vec::new();
        for s in 0..alphabet {
            names.push(format!("v{}", channel.render(s as Symbol)));
        }
        for i in 1..h {
            names.push(format!("p{i}"));
        }
        names.push("<refresh>".into());
        for s in 0..alphabet {
            names.push(format!("m{}", channel.render(s as Symbol)));
        }
        for r in 1..=d {
            names.push(format!("r{r}"));
        }
        names.push("<pad>".into());
        names.push("<s>".into());
        names.push("<e>".into());
        Self { alphabet, d, h, names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: TokenId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    fn punct_count(&self) -> u32 {
        self.h.saturating_sub(1)
    }

    pub fn value(&self, s: Symbol) -> TokenId {
        debug_assert!((s as usize) < self.alphabet);
        s as TokenId
    }

    pub fn punct(&self, i: u32) -> TokenId {
        debug_assert!(i >= 1 && i <= self.punct_count());
        self.alphabet as TokenId + i - 1
    }

    pub fn refresh(&self) -> TokenId {
        self.alphabet as TokenId + self.punct_count()
    }

    pub fn mem_symbol(&self, s: Symbol) -> TokenId {
        self.refresh() + 1 + s as TokenId
    }

    pub fn child_index(&self, r: u32) -> TokenId {
        debug_assert!(r >= 1 && r as usize <= self.d);
        self.refresh() + self.alphabet as TokenId + r
    }

    pub fn pad(&self) -> TokenId {
        self.refresh() + 1 + (self.alphabet + self.d) as TokenId
    }

    pub fn mem_start(&self) -> TokenId {
        self.pad() + 1
    }

    pub fn mem_end(&self) -> TokenId {
        self.pad() + 2
    }

    pub fn kind(&self, id: TokenId) -> Option<TokenKind> {
        let a = self.alphabet as TokenId;
        let refresh = self.refresh();
        Some(match id {
            _ if id < a => TokenKind::Value(id as Symbol),
            _ if id < refresh => TokenKind::Punct(id - a + 1),
            _ if id == refresh => TokenKind::Refresh,
            _ if id <= refresh + a => TokenKind::MemSymbol((id - refresh - 1) as Symbol),
            _ if id < self.pad() => TokenKind::ChildIndex(id - refresh - a),
            _ if id == self.pad() => TokenKind::Pad,
            _ if id == self.mem_start() => TokenKind::MemStart,
            _ if id == self.mem_end() => TokenKind::MemEnd,
            _ => return None,
        })
    }

    /// One `id\tname` line per token.
    pub fn to_text(&self) -> String {
        self.names.iter().enumerate().map(|(i, n)| format!("{i}\t{n}\n")).collect()
    }
}

/// Tokens per document, excluding the refresh token: `d^(h-1) (d+1) - 1`.
/// A height-zero tree is a single value token.
pub fn document_length(shape: &TreeShape) -> usize {
    match shape.h() {
        0 => 1,
        h => shape.d().pow(h - 1) * (shape.d() + 1) - 1,
    }
}

/// Punctuation level before leaf group `g >= 1`.
fn punct_level(mut g: usize, d: usize) -> u32 {
    let mut level = 1;
    while g % d == 0 {
        g /= d;
        level += 1;
    }
    level
}

/// Expected kind of token `m` (1-based) of a document.
pub fn token_slot(m: usize, shape: &TreeShape) -> TokenKind {
    let d = shape.d();
    let r0 = m % (d + 1);
    let group = m / (d + 1);
    if r0 >= 1 || shape.h() == 0 {
        TokenKind::Value(0)
    } else {
        TokenKind::Punct(punct_level(group, d))
    }
}

pub fn tokenize(leaves: &[Symbol], shape: &TreeShape, vocab: &TokenVocab) -> Result<Vec<TokenId>> {
    if leaves.len() != shape.leaves() {
        return Err(Error::LeafCount { expected: shape.leaves(), got: leaves.len() });
    }
    validate_symbols(leaves, vocab.alphabet())?;
    let mut out = Vec::with_capacity(document_length(shape));
    tokenize_into(leaves, shape, vocab, &mut out);
    Ok(out)
}

pub(crate) fn tokenize_into(leaves: &[Symbol], shape: &TreeShape, vocab: &TokenVocab, out: &mut Vec<TokenId>) {
    if shape.h() == 0 {
        out.push(vocab.value(leaves[0]));
        return;
    }
    let d = shape.d();
    for (g, group) in leaves.chunks_exact(d).enumerate() {
        if g > 0 {
            out.push(vocab.punct(punct_level(g, d)));
        }
        out.extend(group.iter().map(|&s| vocab.value(s)));
    }
}

pub fn detokenize(tokens: &[TokenId], shape: &TreeShape, vocab: &TokenVocab) -> Result<LeafSequence> {
    let expected = document_length(shape);
    let mut leaves = Vec::with_capacity(shape.leaves());
    for (i, &t) in tokens.iter().enumerate().take(expected) {
        let kind = vocab.kind(t).ok_or_else(|| Error::Token { position: i, reason: format!("unknown token id {t}") })?;
        match (token_slot(i + 1, shape), kind) {
            (TokenKind::Value(_), TokenKind::Value(s)) => leaves.push(s),
            (TokenKind::Punct(want), TokenKind::Punct(got)) if want == got => {}
            (TokenKind::Value(_), other) => {
                return Err(Error::Token { position: i, reason: format!("expected a value token, found {other:?}") })
            }
            (want, other) => {
                return Err(Error::Token { position: i, reason: format!("expected {want:?}, found {other:?}") })
            }
        }
    }
    if tokens.len() != expected {
        return Err(Error::Token {
            position: tokens.len().min(expected),
            reason: format!("document needs {expected} tokens, got {}", tokens.len()),
        });
    }
    Ok(LeafSequence(leaves))
}

/// Serialized memory state: `s`, the `(symbol, index)` pairs, padding up to
/// `2h` slots, `e`. Always `2 + 2h` tokens.
pub fn serialize_memory(stack: &[(Symbol, u32)], h: u32, vocab: &TokenVocab, out: &mut Vec<TokenId>) {
    debug_assert!(stack.len() <= h as usize);
    out.push(vocab.mem_start());
    for &(s, r) in stack {
        out.push(vocab.mem_symbol(s));
        out.push(vocab.child_index(r));
    }
    for _ in stack.len()..h as usize {
        out.push(vocab.pad());
        out.push(vocab.pad());
    }
    out.push(vocab.mem_end());
}

/// Inverse of [`serialize_memory`].
pub fn parse_memory(tokens: &[TokenId], h: u32, vocab: &TokenVocab) -> Result<Vec<(Symbol, u32)>> {
    let width = 2 + 2 * h as usize;
    let bad = |reason: String| Error::MalformedMemory(reason);
    if tokens.len() != width {
        return Err(bad(format!("expected {width} tokens, got {}", tokens.len())));
    }
    if tokens[0] != vocab.mem_start() || tokens[width - 1] != vocab.mem_end() {
        return Err(bad("missing memory delimiters".into()));
    }
    let mut stack = Vec::new();
    let mut padding = false;
    for pair in tokens[1..width - 1].chunks_exact(2) {
        match (vocab.kind(pair[0]), vocab.kind(pair[1])) {
            (Some(TokenKind::MemSymbol(s)), Some(TokenKind::ChildIndex(r))) if !padding => stack.push((s, r)),
            (Some(TokenKind::Pad), Some(TokenKind::Pad)) => padding = true,
            other => return Err(bad(format!("unexpected slot {other:?}"))),
        }
    }
    Ok(stack)
}
