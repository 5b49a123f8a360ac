//! Broadcast channels: the transition kernel applied along every tree edge,
//! together with its stationary prior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{coloring_matrix, ising_matrix, DenseMatrix};
use crate::rng::SplitMix64;

/// Internal symbol id in `0..alphabet_size`.
pub type Symbol = u8;

/// Row sums and stationarity are checked to this tolerance.
pub const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    /// Copy the parent spin with probability `rho`, else re-randomize.
    Ising { rho: f64 },
    /// Uniform color different from the parent.
    Coloring { q: usize },
    /// Arbitrary kernel, rows indexed by parent symbol.
    Dense { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    kind: ChannelKind,
    prior: Vec<f64>,
    // Cumulative rows and prior, used by the dense sampler.
    row_cdf: Vec<Vec<f64>>,
    prior_cdf: Vec<f64>,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

impl Channel {
    pub fn ising(rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidChannel(format!("ising correlation {rho} outside [0, 1]")));
        }
        Ok(Self::with_prior(ChannelKind::Ising { rho }, vec![0.5, 0.5]))
    }

    pub fn coloring(q: usize) -> Result<Self> {
        if !(2..=64).contains(&q) {
            return Err(Error::InvalidChannel(format!("coloring needs 2 <= q <= 64, got {q}")));
        }
        Ok(Self::with_prior(ChannelKind::Coloring { q }, vec![1.0 / q as f64; q]))
    }

    /// Arbitrary kernel; the prior is its unique stationary distribution.
    pub fn dense(matrix: DenseMatrix<f64>) -> Result<Self> {
        validate_rows(&matrix)?;
        let prior = stationary_of_matrix(&matrix)?;
        Ok(Self::with_prior(ChannelKind::Dense { rows: rows_of(&matrix) }, prior))
    }

    fn with_prior(kind: ChannelKind, prior: Vec<f64>) -> Self {
        let row_cdf = match &kind {
            ChannelKind::Dense { rows } => rows.iter().map(|r| cumulative(r)).collect(),
            _ => Vec::new(),
        };
        let prior_cdf = cumulative(&prior);
        Self { kind, prior, row_cdf, prior_cdf }
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn alphabet_size(&self) -> usize {
        match &self.kind {
            ChannelKind::Ising { .. } => 2,
            ChannelKind::Coloring { q } => *q,
            ChannelKind::Dense { rows } => rows.len(),
        }
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    #[inline]
    pub fn transition(&self, from: Symbol, to: Symbol) -> f64 {
        match &self.kind {
            ChannelKind::Ising { rho } => {
                if from == to {
                    (1.0 + rho) / 2.0
                } else {
                    (1.0 - rho) / 2.0
                }
            }
            ChannelKind::Coloring { q } => {
                if from == to {
                    0.0
                } else {
                    1.0 / (*q as f64 - 1.0)
                }
            }
            ChannelKind::Dense { rows } => rows[from as usize][to as usize],
        }
    }

    pub fn matrix(&self) -> DenseMatrix<f64> {
        match &self.kind {
            ChannelKind::Ising { rho } => ising_matrix(*rho),
            ChannelKind::Coloring { q } => coloring_matrix(*q),
            ChannelKind::Dense { rows } => DenseMatrix::from_rows(rows.clone()).expect("square by construction"),
        }
    }

    /// Draw from the prior.
    #[inline]
    pub fn sample_root(&self, rng: &mut SplitMix64) -> Symbol {
        match &self.kind {
            ChannelKind::Ising { .. } => rng.below(2) as Symbol,
            ChannelKind::Coloring { q } => rng.below(*q as u64) as Symbol,
            ChannelKind::Dense { .. } => rng.categorical_cdf(&self.prior_cdf) as Symbol,
        }
    }

    /// Draw a child symbol given its parent.
    #[inline]
    pub fn sample_child(&self, parent: Symbol, rng: &mut SplitMix64) -> Symbol {
        match &self.kind {
            ChannelKind::Ising { rho } => {
                if rng.bernoulli((1.0 + rho) / 2.0) {
                    parent
                } else {
                    1 - parent
                }
            }
            ChannelKind::Coloring { q } => {
                let c = rng.below(*q as u64 - 1) as Symbol;
                if c >= parent {
                    c + 1
                } else {
                    c
                }
            }
            ChannelKind::Dense { .. } => rng.categorical_cdf(&self.row_cdf[parent as usize]) as Symbol,
        }
    }

    /// Detailed balance with respect to the prior.
    pub fn is_reversible(&self) -> bool {
        let n = self.alphabet_size();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let fwd = self.prior[i] * self.transition(i as Symbol, j as Symbol);
                let bwd = self.prior[j] * self.transition(j as Symbol, i as Symbol);
                (fwd - bwd).abs() <= 1e-12
            })
        })
    }

    /// External rendering: Ising as -1/+1, colors as 1..=q, dense as 0..n.
    pub fn render(&self, s: Symbol) -> i64 {
        match &self.kind {
            ChannelKind::Ising { .. } => {
                if s == 1 {
                    1
                } else {
                    -1
                }
            }
            ChannelKind::Coloring { .. } => i64::from(s) + 1,
            ChannelKind::Dense { .. } => i64::from(s),
        }
    }

    /// Inverse of [`Channel::render`].
    pub fn parse(&self, value: i64) -> Result<Symbol> {
        let n = self.alphabet_size();
        let err = || Error::SymbolOutOfRange { symbol: value.unsigned_abs() as usize, alphabet: n };
        match &self.kind {
            ChannelKind::Ising { .. } => match value {
                -1 => Ok(0),
                1 => Ok(1),
                _ => Err(err()),
            },
            ChannelKind::Coloring { q } => {
                if value >= 1 && value <= *q as i64 {
                    Ok((value - 1) as Symbol)
                } else {
                    Err(err())
                }
            }
            ChannelKind::Dense { .. } => {
                if value >= 0 && (value as usize) < n {
                    Ok(value as Symbol)
                } else {
                    Err(err())
                }
            }
        }
    }

    /// Short label, `ising:<rho>` or `coloring:<q>`.
    pub fn label(&self) -> String {
        match &self.kind {
            ChannelKind::Ising { rho } => format!("ising:{rho}"),
            ChannelKind::Coloring { q } => format!("coloring:{q}"),
            ChannelKind::Dense { rows } => format!("dense:{}", rows.len()),
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidChannel(format!("expected ising:<rho> or coloring:<q>, got {s:?}")))?;
        match name {
            "ising" => {
                let rho: f64 = value.parse().map_err(|_| Error::InvalidChannel(format!("bad rho {value:?}")))?;
                Channel::ising(rho)
            }
            "coloring" => {
                let q: usize = value.parse().map_err(|_| Error::InvalidChannel(format!("bad q {value:?}")))?;
                Channel::coloring(q)
            }
            _ => Err(Error::InvalidChannel(format!("unknown channel {name:?}"))),
        }
    }
}

fn rows_of(m: &DenseMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.size()).map(|i| m.row(i).to_vec()).collect()
}

fn validate_rows(m: &DenseMatrix<f64>) -> Result<()> {
    if m.size() == 0 || m.size() > 256 {
        return Err(Error::InvalidChannel(format!("alphabet size {} outside 1..=256", m.size())));
    }
    for i in 0..m.size() {
        let row = m.row(i);
        if row.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidChannel(format!("row {i} has a negative or NaN entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > KERNEL_TOL {
            return Err(Error::InvalidChannel(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Stationary prior of a channel.
pub fn stationary(channel: &Channel) -> Result<Vec<f64>> {
    match channel.kind() {
        ChannelKind::Ising { .. } => Ok(vec![0.5, 0.5]),
        ChannelKind::Coloring { q } => Ok(vec![1.0 / *q as f64; *q]),
        ChannelKind::Dense { .. } => stationary_of_matrix(&channel.matrix()),
    }
}

/// Left fixed point of a stochastic matrix.
///
/// Runs the lazy chain `(K + I) / 2` (same fixed points, aperiodic) from every
/// point mass; distinct limits mean the fixed point is not unique.
pub fn stationary_of_matrix(m: &DenseMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.size();
    let lazy = DenseMatrix::from_fn(n, |i, j| 0.5 * m.get(i, j) + if i == j { 0.5 } else { 0.0 });
    // Squaring doubles the number of steps each time.
    let mut power = lazy;
    for _ in 0..64 {
        let squared = power.mul(&power);
        // Renormalize rows so rounding cannot drain mass over many squarings.
        let next = DenseMatrix::from_fn(n, |i, j| squared.get(i, j) / squared.row(i).iter().sum::<f64>());
        let delta = next.max_abs_diff(&power);
        power = next;
        if delta < 1e-14 {
            break;
        }
    }
    let first = power.row(0).to_vec();
    for i in 1..n {
        let diff = power.row(i).iter().zip(&first).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff > 1e-8 {
            return Err(Error::AmbiguousStationary);
        }
    }
    let fixed = m.left_apply(&first);
    let residual = fixed.iter().zip(&first).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::AmbiguousStationary);
    }
    Ok(first)
}

/// Exact `m`-step kernel, returned as a dense channel sharing the prior.
pub fn channel_power(channel: &Channel, m: u32) -> Channel {
    let n = channel.alphabet_size();
    let matrix = match channel.kind() {
        ChannelKind::Ising { rho } => ising_matrix(rho.powi(m as i32)),
        ChannelKind::Coloring { q } => {
            let qf = *q as f64;
            let lambda = (-1.0 / (qf - 1.0)).powi(m as i32);
            let same = 1.0 / qf + (qf - 1.0) / qf * lambda;
            let other = 1.0 / qf - lambda / qf;
            DenseMatrix::from_fn(n, |i, j| if i == j { same } else { other })
        }
        ChannelKind::Dense { .. } => channel.matrix().pow(m),
    };
    Channel::with_prior(ChannelKind::Dense { rows: rows_of(&matrix) }, channel.prior().to_vec())
}
