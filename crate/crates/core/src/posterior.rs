//! Exact root posteriors by upward sum-product on the tree, and Monte Carlo
//! estimation of the reconstruction advantage `q_w = E[E[X | Y]^2]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::broadcast::{sample_tree, validate_symbols};
use crate::channel::{Channel, ChannelKind, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::rng::SplitMix64;
use crate::scalar::pairwise_sum;

/// Mass below which a color counts as excluded.
pub const POINT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDist {
    probabilities: Vec<f64>,
}

impl PosteriorDist {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `P(+1) - P(-1)` for a two-symbol alphabet.
    pub fn magnetization(&self) -> f64 {
        self.probabilities[1] - self.probabilities[0]
    }

    pub fn max_mass(&self) -> f64 {
        self.probabilities.iter().cloned().fold(0.0, f64::max)
    }

    /// Exactly one symbol carries mass above [`POINT_MASS_TOL`].
    pub fn is_point_mass(&self) -> bool {
        self.probabilities.iter().filter(|&&p| p > POINT_MASS_TOL).count() == 1
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> Symbol {
        rng.categorical(&self.probabilities) as Symbol
    }
}

/// Reusable buffers for repeated posterior evaluations.
#[derive(Debug, Default, Clone)]
pub struct PosteriorWorkspace {
    kernel: Vec<f64>,
    cur: Vec<f64>,
    next: Vec<f64>,
    msg: Vec<f64>,
}

impl PosteriorWorkspace {
    /// Posterior of the root of a height-`h` tree given its `d^h` leaves,
    /// written into `out` (length = alphabet size). No validation.
    pub(crate) fn compute(
        &mut self,
        leaves: &[Symbol],
        d: usize,
        channel: &Channel,
        out: &mut [f64],
    ) -> Result<()> {
        let n = channel.alphabet_size();
        if leaves.len() == 1 {
            out.iter_mut().for_each(|p| *p = 0.0);
            out[leaves[0] as usize] = 1.0;
            return Ok(());
        }
        self.kernel.clear();
        for a in 0..n {
            for b in 0..n {
                self.kernel.push(channel.transition(a as Symbol, b as Symbol));
            }
        }
        // Bottom level: a leaf message is the indicator of its symbol, so the
        // edge message to the parent is the kernel column of that symbol.
        let width = leaves.len() / d;
        self.cur.clear();
        self.cur.resize(width * n, 1.0);
        for (p, kids) in leaves.chunks_exact(d).enumerate() {
            let m = &mut self.cur[p * n..(p + 1) * n];
            for &y in kids {
                for (sigma, slot) in m.iter_mut().enumerate() {
                    *slot *= self.kernel[sigma * n + y as usize];
                }
            }
            normalize(m)?;
        }
        let mut width = width;
        self.msg.resize(n, 0.0);
        while width > 1 {
            let parents = width / d;
            self.next.clear();
            self.next.resize(parents * n, 1.0);
            for p in 0..parents {
                for c in 0..d {
                    let child = &self.cur[(p * d + c) * n..(p * d + c + 1) * n];
                    for sigma in 0..n {
                        let row = &self.kernel[sigma * n..(sigma + 1) * n];
                        self.msg[sigma] = row.iter().zip(child).map(|(k, m)| k * m).sum();
                    }
                    let m = &mut self.next[p * n..(p + 1) * n];
                    for sigma in 0..n {
                        m[sigma] *= self.msg[sigma];
                    }
                }
                normalize(&mut self.next[p * n..(p + 1) * n])?;
            }
            std::mem::swap(&mut self.cur, &mut self.next);
            width = parents;
        }
        for (sigma, slot) in out.iter_mut().enumerate() {
            *slot = channel.prior()[sigma] * self.cur[sigma];
        }
        normalize(out)
    }
}

fn normalize(m: &mut [f64]) -> Result<()> {
    let total: f64 = m.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroLikelihood);
    }
    m.iter_mut().for_each(|x| *x /= total);
    Ok(())
}

/// `P(root = σ | leaves)` for a tree of the given shape.
pub fn root_posterior(leaves: &[Symbol], shape: &TreeShape, channel: &Channel) -> Result<PosteriorDist> {
    if leaves.len() != shape.leaves() {
        return Err(Error::LeafCount { expected: shape.leaves(), got: leaves.len() });
    }
    validate_symbols(leaves, channel.alphabet_size())?;
    let mut probabilities = vec![0.0; channel.alphabet_size()];
    PosteriorWorkspace::default().compute(leaves, shape.d(), channel, &mut probabilities)?;
    Ok(PosteriorDist { probabilities })
}

pub fn sample_root_from_posterior(
    leaves: &[Symbol],
    shape: &TreeShape,
    channel: &Channel,
    rng: &mut SplitMix64,
) -> Result<Symbol> {
    Ok(root_posterior(leaves, shape, channel)?.sample(rng))
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let se = if n < 2 {
            f64::NAN
        } else {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / (n as f64 - 1.0) / n as f64).sqrt()
        };
        Self { mean, se, n }
    }
}

/// Monte Carlo `q_w` for the Ising channel: the average squared root
/// magnetization given the leaves of a height-`w` tree.
///
/// Sample `i` uses stream `i` of a base seed drawn from `rng`, so the result
/// does not depend on the number of worker threads.
pub fn estimate_q(w: u32, d: usize, channel: &Channel, n_samples: usize, rng: &mut SplitMix64) -> Result<Estimate> {
    if !matches!(channel.kind(), ChannelKind::Ising { .. }) {
        return Err(Error::InvalidChannel("q_w is defined for the Ising channel".into()));
    }
    if n_samples == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let shape = TreeShape::new(d, w)?;
    let base = rng.next_u64();
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map_init(
            || (PosteriorWorkspace::default(), [0.0f64; 2]),
            |(ws, post), i| {
                let mut r = SplitMix64::stream(base, i);
                let tree = sample_tree(&shape, channel, None, &mut r);
                ws.compute(tree.leaves(), d, channel, post).expect("sampled leaves have positive likelihood");
                let m = post[1] - post[0];
                m * m
            },
        )
        .collect();
    Ok(Estimate::from_samples(&values))
}
