//! Bounded-context autoregressive broadcast: each new depth-`w` subtree is
//! generated from the previous one only.
//!
//! One step runs the chain `Y_i -> X'_i -> X_{i+1} -> Y_{i+1}`: sample the
//! previous subtree root from its posterior, walk up `h_r` levels and back
//! down (the kernel `kappa^(2 h_r)`), then broadcast a fresh subtree.

use crate::broadcast::{broadcast_leaves, sample_tree, validate_symbols, LeafSequence};
use crate::channel::{channel_power, Channel, Symbol};
use crate::error::{Error, Result};
use crate::geometry::{adjacent_subtree_height_dist, TreeShape};
use crate::posterior::PosteriorWorkspace;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct ArConfig {
    pub shape: TreeShape,
    pub w: u32,
    pub channel: Channel,
}

impl ArConfig {
    pub fn new(shape: TreeShape, w: u32, channel: Channel) -> Result<Self> {
        if w > shape.h() {
            return Err(Error::InvalidShape {
                d: shape.d(),
                h: shape.h(),
                reason: format!("context depth w = {w} must satisfy w <= h"),
            });
        }
        if !channel.is_reversible() {
            return Err(Error::InvalidChannel(
                "autoregressive sampling needs a kernel reversible with respect to its prior".into(),
            ));
        }
        Ok(Self { shape, w, channel })
    }

    /// Number of depth-`w` blocks in one sample.
    pub fn blocks(&self) -> usize {
        self.shape.d().pow(self.shape.h() - self.w)
    }
}

/// What happened in one autoregressive step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    /// Root of the previous block drawn from its posterior.
    pub posterior_root: Symbol,
    pub hop_height: u32,
    pub next_root: Symbol,
}

/// Precomputed hop kernels and height law for one configuration.
#[derive(Debug, Clone)]
pub struct ArSampler {
    config: ArConfig,
    block: TreeShape,
    height_cdf: Vec<f64>,
    // hop[s - 1] = kappa^(2s)
    hop: Vec<Channel>,
}

/// Per-thread buffers.
#[derive(Debug, Default, Clone)]
pub struct ArWorkspace {
    posterior: PosteriorWorkspace,
    post: Vec<f64>,
    scratch: Vec<Symbol>,
}

const NO_HOP: &str = "w = h leaves no room for a hop; sample the full tree directly";

impl ArSampler {
    pub fn new(config: ArConfig) -> Result<Self> {
        let block = config.shape.subtree(config.w)?;
        let m = config.shape.h() - config.w;
        let (height_cdf, hop) = if m == 0 {
            (Vec::new(), Vec::new())
        } else {
            let dist = adjacent_subtree_height_dist::<f64>(config.shape.d(), m)?;
            let hop = (1..=m).map(|s| channel_power(&config.channel, 2 * s)).collect();
            (dist.cdf_f64(), hop)
        };
        Ok(Self { config, block, height_cdf, hop })
    }

    pub fn config(&self) -> &ArConfig {
        &self.config
    }

    pub fn block_shape(&self) -> &TreeShape {
        &self.block
    }

    /// One block transition, writing the next block into `out`.
    pub fn step_into(
        &self,
        prev: &[Symbol],
        rng: &mut SplitMix64,
        ws: &mut ArWorkspace,
        out: &mut Vec<Symbol>,
    ) -> Result<StepTrace> {
        if self.hop.is_empty() {
            return Err(Error::InvalidParameter(NO_HOP.into()));
        }
        let ch = &self.config.channel;
        ws.post.resize(ch.alphabet_size(), 0.0);
        ws.posterior.compute(prev, self.config.shape.d(), ch, &mut ws.post)?;
        let posterior_root = rng.categorical(&ws.post) as Symbol;
        let hop_height = rng.categorical_cdf(&self.height_cdf) as u32 + 1;
        let next_root = self.hop[hop_height as usize - 1].sample_child(posterior_root, rng);
        broadcast_leaves(self.config.shape.d(), self.config.w, ch, next_root, rng, &mut ws.scratch, out);
        Ok(StepTrace { posterior_root, hop_height, next_root })
    }

    pub fn step(&self, prev: &LeafSequence, rng: &mut SplitMix64) -> Result<LeafSequence> {
        if prev.len() != self.block.leaves() {
            return Err(Error::LeafCount { expected: self.block.leaves(), got: prev.len() });
        }
        validate_symbols(prev, self.config.channel.alphabet_size())?;
        let mut out = Vec::with_capacity(prev.len());
        self.step_into(prev, rng, &mut ArWorkspace::default(), &mut out)?;
        Ok(LeafSequence(out))
    }

    /// Full sample of `d^h` leaves, with the root of each block.
    pub fn sample_with_roots(&self, rng: &mut SplitMix64, ws: &mut ArWorkspace) -> (Vec<Symbol>, Vec<Symbol>) {
        let first = sample_tree(&self.block, &self.config.channel, None, rng);
        let blocks = self.config.blocks();
        let width = self.block.leaves();
        let mut roots = Vec::with_capacity(blocks);
        roots.push(first.root());
        let mut leaves = Vec::with_capacity(blocks * width);
        leaves.extend_from_slice(first.leaves());
        let mut next = Vec::with_capacity(width);
        for i in 1..blocks {
            let prev = &leaves[(i - 1) * width..i * width];
            let trace = self
                .step_into(prev, rng, ws, &mut next)
                .expect("blocks produced by the sampler have positive likelihood");
            roots.push(trace.next_root);
            leaves.extend_from_slice(&next);
        }
        (leaves, roots)
    }

    /// One full sample. For `w = h` this is the exact broadcast process.
    pub fn sample(&self, rng: &mut SplitMix64, ws: &mut ArWorkspace) -> LeafSequence {
        LeafSequence(self.sample_with_roots(rng, ws).0)
    }
}

/// One autoregressive step from a block of `d^w` leaves.
pub fn ar_step(prev: &LeafSequence, config: &ArConfig, rng: &mut SplitMix64) -> Result<LeafSequence> {
    if config.w == config.shape.h() {
        return Err(Error::InvalidParameter(NO_HOP.into()));
    }
    ArSampler::new(config.clone())?.step(prev, rng)
}

pub fn ar_sample(config: &ArConfig, rng: &mut SplitMix64) -> Result<LeafSequence> {
    Ok(ArSampler::new(config.clone())?.sample(rng, &mut ArWorkspace::default()))
}
