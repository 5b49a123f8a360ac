//! Estimators over replicated samples with bootstrap and Wilson intervals.
//!
//! Inputs are sorted before any reduction, so every estimate (and every
//! bootstrap interval for a given seed) is invariant under reordering of the
//! samples and independent of how they were produced.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix64, SplitMix64};
use crate::scalar::pairwise_sum;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LogNormalizedVariance,
    ExcessKurtosis,
    ValidRate,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::LogNormalizedVariance => "log_normalized_variance",
            Metric::ExcessKurtosis => "excess_kurtosis",
            Metric::ValidRate => "valid_rate",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" | "log_normalized_variance" => Ok(Metric::LogNormalizedVariance),
            "kurtosis" | "excess_kurtosis" => Ok(Metric::ExcessKurtosis),
            "valid-rate" | "valid_rate" => Ok(Metric::ValidRate),
            _ => Err(Error::InvalidParameter(format!("unknown metric {s:?}; use variance, kurtosis or valid-rate"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsReport {
    pub metric: Metric,
    pub n: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Moments of a sorted sample.
#[derive(Debug, Clone, Copy)]
struct Moments {
    variance: f64,
    excess_kurtosis: f64,
}

fn moments(sorted: &[f64], buf: &mut Vec<f64>) -> Moments {
    let n = sorted.len() as f64;
    let mean = pairwise_sum(sorted) / n;
    buf.clear();
    buf.extend(sorted.iter().map(|x| (x - mean) * (x - mean)));
    let m2 = pairwise_sum(buf) / n;
    for v in buf.iter_mut() {
        *v *= *v;
    }
    let m4 = pairwise_sum(buf) / n;
    Moments { variance: m2 * n / (n - 1.0), excess_kurtosis: m4 / (m2 * m2) - 3.0 }
}

fn log_normalized(variance: f64, leaves: f64) -> f64 {
    if variance == 0.0 {
        f64::NEG_INFINITY
    } else {
        (variance / leaves).ln()
    }
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `q`-quantile of sorted finite data by linear interpolation.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval, widened if needed to contain the point estimate.
fn percentile_ci(mut stats: Vec<f64>, estimate: f64) -> (f64, f64) {
    stats.retain(|x| !x.is_nan());
    stats.sort_by(f64::total_cmp);
    let (lo, hi) = (quantile(&stats, 0.025), quantile(&stats, 0.975));
    if estimate.is_nan() {
        return (lo, hi);
    }
    (lo.min(estimate), hi.max(estimate))
}

/// Leaf-sum statistics: log-normalized variance and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafSumStats {
    pub variance: f64,
    pub log_normalized_variance: StatsReport,
    pub excess_kurtosis: StatsReport,
}

/// `log(var / d^h)` and `m4 / m2^2 - 3` of the sums with percentile
/// bootstrap intervals (`resamples` draws from a stream keyed by `seed`).
pub fn leaf_sum_stats(sums: &[f64], d: usize, h: u32, resamples: usize, seed: u64) -> Result<LeafSumStats> {
    if sums.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: sums.len() });
    }
    let leaves = (d as f64).powi(h as i32);
    let sorted = sorted_copy(sums);
    let n = sorted.len();
    let point = moments(&sorted, &mut Vec::with_capacity(n));
    let boot: Vec<(f64, f64)> = (0..resamples as u64)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), Vec::with_capacity(n)),
            |(sample, buf), b| {
                let mut rng = SplitMix64::stream(seed, b);
                sample.clear();
                sample.extend((0..n).map(|_| sorted[rng.below(n as u64) as usize]));
                sample.sort_by(f64::total_cmp);
                let m = moments(sample, buf);
                (log_normalized(m.variance, leaves), m.excess_kurtosis)
            },
        )
        .collect();
    let lnv = log_normalized(point.variance, leaves);
    let (vl, vh) = percentile_ci(boot.iter().map(|b| b.0).collect(), lnv);
    let (kl, kh) = percentile_ci(boot.iter().map(|b| b.1).collect(), point.excess_kurtosis);
    Ok(LeafSumStats {
        variance: point.variance,
        log_normalized_variance: StatsReport {
            metric: Metric::LogNormalizedVariance,
            n,
            estimate: lnv,
            ci_low: vl,
            ci_high: vh,
        },
        excess_kurtosis: StatsReport {
            metric: Metric::ExcessKurtosis,
            n,
            estimate: point.excess_kurtosis,
            ci_low: kl,
            ci_high: kh,
        },
    })
}

/// Fraction of `true` values with a Wilson score 95% interval.
pub fn valid_rate(flags: &[bool]) -> Result<StatsReport> {
    if flags.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let n = flags.len() as f64;
    let p = flags.iter().filter(|&&f| f).count() as f64 / n;
    let (lo, hi) = wilson(p, n);
    Ok(StatsReport { metric: Metric::ValidRate, n: flags.len(), estimate: p, ci_low: lo, ci_high: hi })
}

pub fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, 1.0), (center + half).clamp(0.0, 1.0))
}

/// Bootstrap seed used for a sweep row.
pub fn bootstrap_seed(row_seed: u64) -> u64 {
    mix64(row_seed, u64::MAX)
}
