//! The `(d, h, κ, ν)` broadcast process.
//!
//! Nodes are sampled level by level from the root; within a level, parents
//! are visited left to right and each parent draws its `d` children in order.
//! A given rng stream therefore always produces the same tree.

use std::ops::Deref;

use crate::channel::{Channel, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::rng::SplitMix64;

/// Symbols at the leaves of a (sub)tree, in leaf order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LeafSequence(pub Vec<Symbol>);

impl Deref for LeafSequence {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for LeafSequence {
    fn from(v: Vec<Symbol>) -> Self {
        Self(v)
    }
}

impl LeafSequence {
    pub fn validate(&self, alphabet: usize) -> Result<()> {
        validate_symbols(&self.0, alphabet)
    }
}

pub(crate) fn validate_symbols(symbols: &[Symbol], alphabet: usize) -> Result<()> {
    match symbols.iter().find(|&&s| s as usize >= alphabet) {
        Some(&s) => Err(Error::SymbolOutOfRange { symbol: s as usize, alphabet }),
        None => Ok(()),
    }
}

/// Sum of spins, with internal symbol `1` read as `+1` and `0` as `-1`.
pub fn spin_sum(symbols: &[Symbol]) -> i64 {
    let ups = symbols.iter().filter(|&&s| s == 1).count() as i64;
    2 * ups - symbols.len() as i64
}

/// Symbols of every node, stored level by level from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    shape: TreeShape,
    values: Vec<Symbol>,
}

impl LabeledTree {
    pub fn from_values(shape: TreeShape, values: Vec<Symbol>) -> Result<Self> {
        if values.len() != shape.node_count() {
            return Err(Error::LeafCount { expected: shape.node_count(), got: values.len() });
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn root(&self) -> Symbol {
        self.values[0]
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn level(&self, level: u32) -> &[Symbol] {
        let start = self.shape.level_offset(level);
        &self.values[start..start + self.shape.level_width(level)]
    }

    pub fn leaves(&self) -> &[Symbol] {
        self.level(self.shape.h())
    }

    pub fn leaf_sequence(&self) -> LeafSequence {
        LeafSequence(self.leaves().to_vec())
    }

    /// Value at the node reached by a root-first path of 1-based child indices.
    pub fn at_path(&self, path: &[u32]) -> Symbol {
        let d = self.shape.d();
        let idx = path.iter().fold(0usize, |acc, &r| acc * d + (r as usize - 1));
        self.values[self.shape.level_offset(path.len() as u32) + idx]
    }

    /// Every child has positive probability under `channel` given its parent.
    pub fn is_supported_by(&self, channel: &Channel) -> bool {
        let d = self.shape.d();
        (1..=self.shape.h()).all(|lvl| {
            let parents = self.level(lvl - 1);
            self.level(lvl)
                .iter()
                .enumerate()
                .all(|(i, &c)| channel.transition(parents[i / d], c) > 0.0)
        })
    }
}

pub fn sample_tree(shape: &TreeShape, channel: &Channel, root: Option<Symbol>, rng: &mut SplitMix64) -> LabeledTree {
    let mut values = Vec::with_capacity(shape.node_count());
    values.push(root.unwrap_or_else(|| channel.sample_root(rng)));
    let d = shape.d();
    for lvl in 1..=shape.h() {
        let start = shape.level_offset(lvl - 1);
        for p in start..start + shape.level_width(lvl - 1) {
            let parent = values[p];
            for _ in 0..d {
                values.push(channel.sample_child(parent, rng));
            }
        }
    }
    LabeledTree { shape: *shape, values }
}

/// Leaves of a tree of height `h` with the given root, written into `out`.
///
/// Consumes the rng exactly like [`sample_tree`] with a fixed root, so both
/// produce the same leaves from the same stream.
pub fn broadcast_leaves(
    d: usize,
    h: u32,
    channel: &Channel,
    root: Symbol,
    rng: &mut SplitMix64,
    scratch: &mut Vec<Symbol>,
    out: &mut Vec<Symbol>,
) {
    out.clear();
    out.push(root);
    for _ in 0..h {
        std::mem::swap(scratch, out);
        out.clear();
        for &parent in scratch.iter() {
            for _ in 0..d {
                out.push(channel.sample_child(parent, rng));
            }
        }
    }
}
