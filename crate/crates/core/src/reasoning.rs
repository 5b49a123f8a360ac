//! Exact sampling of the true language with `O(h)` working memory.
//!
//! The memory is the stack of `(symbol, child index)` pairs along the path
//! from the root to the current position of a depth-first traversal. Every
//! step emits one token: a leaf, a punctuation mark, or the refresh token at
//! the end of a document.

use crate::broadcast::LabeledTree;
use crate::channel::{Channel, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::rng::SplitMix64;
use crate::tokenizer::{serialize_memory, TokenId, TokenVocab};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emitted {
    Value(Symbol),
    Punct(u32),
    Refresh,
}

impl Emitted {
    pub fn token(self, vocab: &TokenVocab) -> TokenId {
        match self {
            Emitted::Value(s) => vocab.value(s),
            Emitted::Punct(i) => vocab.punct(i),
            Emitted::Refresh => vocab.refresh(),
        }
    }
}

/// `(σ_1, r_1), …, (σ_k, r_k)`: `σ_1` is the root, `σ_{i+1}` is child
/// `r_i` of `σ_i`, and `r_k` is the child of `σ_k` visited last.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MemoryState {
    pub stack: Vec<(Symbol, u32)>,
}

impl MemoryState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn validate(&self, shape: &TreeShape, channel: &Channel) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedMemory(m));
        if self.stack.len() > shape.h() as usize {
            return bad(format!("stack of {} pairs exceeds height {}", self.stack.len(), shape.h()));
        }
        for (i, &(s, r)) in self.stack.iter().enumerate() {
            if s as usize >= channel.alphabet_size() {
                return bad(format!("symbol {s} at depth {i} outside the alphabet"));
            }
            if r == 0 || r as usize > shape.d() {
                return bad(format!("child index {r} at depth {i} outside 1..={}", shape.d()));
            }
            if i > 0 && channel.transition(self.stack[i - 1].0, s) <= 0.0 {
                return bad(format!("symbol {s} at depth {i} unreachable from its parent"));
            }
        }
        let k = self.stack.len();
        if k > 0 && k < shape.h() as usize && self.stack[k - 1].1 as usize >= shape.d() {
            return bad("partial stack ends in a saturated index".into());
        }
        Ok(())
    }

    pub fn serialize(&self, h: u32, vocab: &TokenVocab, out: &mut Vec<TokenId>) {
        serialize_memory(&self.stack, h, vocab, out);
    }
}

/// Where node values come from: fresh samples or a fixed tree.
pub trait NodeSource {
    fn root(&mut self) -> Symbol;
    /// Node at the root-first 1-based `path`, whose parent holds `parent`.
    fn child(&mut self, parent: Symbol, path: &[u32]) -> Symbol;
}

pub struct Sampling<'a> {
    pub channel: &'a Channel,
    pub rng: &'a mut SplitMix64,
}

impl NodeSource for Sampling<'_> {
    fn root(&mut self) -> Symbol {
        self.channel.sample_root(self.rng)
    }

    fn child(&mut self, parent: Symbol, _path: &[u32]) -> Symbol {
        self.channel.sample_child(parent, self.rng)
    }
}

pub struct Lookup<'a>(pub &'a LabeledTree);

impl NodeSource for Lookup<'_> {
    fn root(&mut self) -> Symbol {
        self.0.root()
    }

    fn child(&mut self, _parent: Symbol, path: &[u32]) -> Symbol {
        self.0.at_path(path)
    }
}

/// Records every node drawn from the inner source.
pub struct Traced<S> {
    pub inner: S,
    pub nodes: Vec<(Vec<u32>, Symbol)>,
}

impl<S: NodeSource> NodeSource for Traced<S> {
    fn root(&mut self) -> Symbol {
        let s = self.inner.root();
        self.nodes.push((Vec::new(), s));
        s
    }

    fn child(&mut self, parent: Symbol, path: &[u32]) -> Symbol {
        let s = self.inner.child(parent, path);
        self.nodes.push((path.to_vec(), s));
        s
    }
}

/// One transition of the memory chain. The state must be valid for a tree
/// of height `h >= 1` with arity `d`.
pub fn transition<S: NodeSource>(stack: &mut Vec<(Symbol, u32)>, d: usize, h: u32, src: &mut S) -> Emitted {
    let h = h as usize;
    let k = stack.len();
    if k == h {
        let (parent, r) = stack[h - 1];
        if (r as usize) < d {
            stack[h - 1].1 = r + 1;
            let path: Vec<u32> = stack.iter().map(|p| p.1).collect();
            return Emitted::Value(src.child(parent, &path));
        }
        return match (0..h - 1).rev().find(|&j| (stack[j].1 as usize) < d) {
            None => {
                stack.clear();
                Emitted::Refresh
            }
            Some(j) => {
                // j is 0-based: keep j + 1 pairs.
                stack.truncate(j + 1);
                Emitted::Punct((h - j - 1) as u32)
            }
        };
    }
    let mut path: Vec<u32>;
    let mut parent;
    if k == 0 {
        parent = src.root();
        stack.push((parent, 1));
        path = vec![1];
    } else {
        stack[k - 1].1 += 1;
        parent = stack[k - 1].0;
        path = stack.iter().map(|p| p.1).collect();
    }
    while path.len() < h {
        let node = src.child(parent, &path);
        stack.push((node, 1));
        path.push(1);
        parent = node;
    }
    Emitted::Value(src.child(parent, &path))
}

fn check_height(shape: &TreeShape) -> Result<()> {
    if shape.h() == 0 {
        return Err(Error::InvalidShape { d: shape.d(), h: 0, reason: "the memory chain needs h >= 1".into() });
    }
    Ok(())
}

pub fn reason_step(
    state: &MemoryState,
    channel: &Channel,
    shape: &TreeShape,
    rng: &mut SplitMix64,
) -> Result<(Emitted, MemoryState)> {
    check_height(shape)?;
    state.validate(shape, channel)?;
    let mut stack = state.stack.clone();
    let out = transition(&mut stack, shape.d(), shape.h(), &mut Sampling { channel, rng });
    Ok((out, MemoryState { stack }))
}

/// One document, as emitted tokens plus (optionally) the memory state in
/// force before each token.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReasoningDocument {
    pub emitted: Vec<Emitted>,
    pub states: Vec<MemoryState>,
}

impl ReasoningDocument {
    pub fn leaves(&self) -> Vec<Symbol> {
        self.emitted
            .iter()
            .filter_map(|e| match e {
                Emitted::Value(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    /// Tokens without the trailing refresh token.
    pub fn tokens(&self, vocab: &TokenVocab) -> Vec<TokenId> {
        self.emitted.iter().filter(|e| **e != Emitted::Refresh).map(|e| e.token(vocab)).collect()
    }

    /// Tokens with each state serialized before every `lv`-th token,
    /// starting with the first.
    pub fn tokens_with_memory(&self, h: u32, lv: usize, vocab: &TokenVocab) -> Vec<TokenId> {
        assert_eq!(self.states.len(), self.emitted.len(), "document was generated without memory states");
        let mut out = Vec::new();
        for (i, (e, m)) in self.emitted.iter().zip(&self.states).enumerate() {
            if i % lv == 0 {
                m.serialize(h, vocab, &mut out);
            }
            out.push(e.token(vocab));
        }
        out
    }
}

fn run_document<S: NodeSource>(shape: &TreeShape, src: &mut S, keep_states: bool) -> ReasoningDocument {
    let mut stack = Vec::with_capacity(shape.h() as usize);
    let mut doc = ReasoningDocument::default();
    loop {
        if keep_states {
            doc.states.push(MemoryState { stack: stack.clone() });
        }
        let e = transition(&mut stack, shape.d(), shape.h(), src);
        doc.emitted.push(e);
        if e == Emitted::Refresh {
            return doc;
        }
    }
}

/// Runs the chain from the empty state through the refresh token.
pub fn reason_sample(
    shape: &TreeShape,
    channel: &Channel,
    rng: &mut SplitMix64,
    emit_memory: bool,
) -> Result<ReasoningDocument> {
    check_height(shape)?;
    Ok(run_document(shape, &mut Sampling { channel, rng }, emit_memory))
}

/// Like [`reason_sample`], also returning the full tree assembled from every
/// node the chain sampled.
pub fn reason_sample_traced(
    shape: &TreeShape,
    channel: &Channel,
    rng: &mut SplitMix64,
) -> Result<(ReasoningDocument, LabeledTree)> {
    check_height(shape)?;
    let mut src = Traced { inner: Sampling { channel, rng }, nodes: Vec::new() };
    let doc = run_document(shape, &mut src, true);
    let mut values: Vec<Option<Symbol>> = vec![None; shape.node_count()];
    let d = shape.d();
    for (path, s) in src.nodes {
        let idx = path.iter().fold(0usize, |acc, &r| acc * d + (r as usize - 1));
        let slot = &mut values[shape.level_offset(path.len() as u32) + idx];
        if slot.is_some() {
            return Err(Error::MalformedMemory(format!("node {path:?} sampled twice")));
        }
        *slot = Some(s);
    }
    let values = values
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::MalformedMemory("some node was never sampled".into()))?;
    Ok((doc, LabeledTree::from_values(*shape, values)?))
}

/// The deterministic state sequence `M_0, …, M_{L+1}` of a given tree.
pub fn memory_states(tree: &LabeledTree) -> Result<ReasoningDocument> {
    check_height(tree.shape())?;
    let mut doc = run_document(tree.shape(), &mut Lookup(tree), true);
    doc.states.push(MemoryState::empty());
    Ok(doc)
}
