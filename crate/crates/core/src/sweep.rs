//! Context-size sweeps: replicate a sampler at each context depth, estimate
//! the requested metrics and attach theory predictions, one CSV row per
//! `(w, metric)`.
//!
//! Seeds: depth `w` uses `row_seed = mix64(seed, w)`, replica `i` draws from
//! `SplitMix64::stream(row_seed, i)`, the bootstrap from
//! `mix64(row_seed, u64::MAX)`, and the `q_w` estimate from
//! `mix64(row_seed, u64::MAX - 1)`. Results never depend on thread count.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ar::{ArConfig, ArSampler, ArWorkspace};
use crate::broadcast::{sample_tree, spin_sum};
use crate::channel::{Channel, ChannelKind, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::posterior::estimate_q;
use crate::reasoning::reason_sample;
use crate::rng::{mix64, SplitMix64};
use crate::stats::{bootstrap_seed, leaf_sum_stats, valid_rate, Metric, StatsReport};
use crate::theory::{ar_variance_prediction, constants, true_moments};
use crate::validity::is_consistent;

pub const CSV_HEADER: &str =
    "sampler,channel,d,h,q_or_rho,w,context_tokens,metric,n,estimate,ci_low,ci_high,theory_finite,theory_asymptote,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Bounded-context autoregression.
    Ar,
    /// Exact broadcast process.
    Truth,
    /// Memory-chain sampler.
    Reasoning,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Ar => "ar",
            SamplerKind::Truth => "truth",
            SamplerKind::Reasoning => "reasoning",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar" => Ok(SamplerKind::Ar),
            "truth" => Ok(SamplerKind::Truth),
            "reasoning" => Ok(SamplerKind::Reasoning),
            _ => Err(Error::InvalidParameter(format!("unknown sampler {s:?}; use ar, truth or reasoning"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub sampler: SamplerKind,
    pub channel: Channel,
    pub shape: TreeShape,
    pub ws: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Trees used to estimate `q_w` for the variance prediction.
    pub q_samples: usize,
    pub bootstrap: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ws.is_empty() {
            return Err(Error::InvalidParameter("empty w list".into()));
        }
        if let Some(&w) = self.ws.iter().find(|&&w| w > self.shape.h()) {
            return Err(Error::InvalidParameter(format!("w = {w} violates w <= h = {}", self.shape.h())));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidParameter("no metric selected".into()));
        }
        let ising = matches!(self.channel.kind(), ChannelKind::Ising { .. });
        let coloring = matches!(self.channel.kind(), ChannelKind::Coloring { .. });
        for m in &self.metrics {
            match m {
                Metric::ValidRate if !coloring => {
                    return Err(Error::InvalidParameter("valid-rate needs a coloring channel".into()))
                }
                Metric::LogNormalizedVariance | Metric::ExcessKurtosis if !ising => {
                    return Err(Error::InvalidParameter(format!("{} needs an ising channel", m.as_str())))
                }
                _ => {}
            }
        }
        let needed = if self.metrics.contains(&Metric::ExcessKurtosis) { 4 } else { 2 };
        if self.metrics.iter().any(|m| *m != Metric::ValidRate) && self.replicas < needed {
            return Err(Error::TooFewSamples { needed, got: self.replicas });
        }
        if self.replicas == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if self.sampler == SamplerKind::Reasoning && self.shape.h() == 0 {
            return Err(Error::InvalidParameter("the reasoning sampler needs h >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sampler: SamplerKind,
    pub channel: String,
    pub d: usize,
    pub h: u32,
    pub q_or_rho: String,
    pub w: u32,
    pub context_tokens: u64,
    pub metric: Metric,
    pub n: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theory_finite: Option<f64>,
    pub theory_asymptote: Option<f64>,
    pub seed: u64,
    /// Set when the row could not be computed; numeric fields are then NaN.
    pub error: Option<String>,
}

/// `d^(w-1) (d + 1)` tokens hold a depth-`w` block with its punctuation.
pub fn context_tokens(d: usize, w: u32) -> u64 {
    if w == 0 {
        1
    } else {
        (d as u64).pow(w - 1) * (d as u64 + 1)
    }
}

fn channel_columns(channel: &Channel) -> (String, String) {
    match channel.kind() {
        ChannelKind::Ising { rho } => ("ising".into(), format!("{rho}")),
        ChannelKind::Coloring { q } => ("coloring".into(), format!("{q}")),
        ChannelKind::Dense { rows } => ("dense".into(), format!("{}", rows.len())),
    }
}

/// Leaves of replica `i` of the given sampler.
fn replica_leaves(
    cfg: &SweepConfig,
    ar: Option<&ArSampler>,
    rng: &mut SplitMix64,
    ws: &mut ArWorkspace,
) -> Vec<Symbol> {
    match (cfg.sampler, ar) {
        (SamplerKind::Ar, Some(s)) => s.sample(rng, ws).0,
        (SamplerKind::Reasoning, _) => {
            reason_sample(&cfg.shape, &cfg.channel, rng, false).expect("height checked in validate").leaves()
        }
        _ => sample_tree(&cfg.shape, &cfg.channel, None, rng).leaves().to_vec(),
    }
}

fn nan_report(metric: Metric) -> StatsReport {
    StatsReport { metric, n: 0, estimate: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN }
}

/// Ground-truth or autoregressive predictions for one row.
fn theory_columns(cfg: &SweepConfig, w: u32, metric: Metric, row_seed: u64) -> (Option<f64>, Option<f64>) {
    let (d, h) = (cfg.shape.d(), cfg.shape.h());
    let full = cfg.sampler != SamplerKind::Ar || w == h;
    match (metric, cfg.channel.kind()) {
        (Metric::ValidRate, _) => {
            if full {
                (Some(1.0), Some(1.0))
            } else {
                (None, Some(0.0))
            }
        }
        (Metric::LogNormalizedVariance, ChannelKind::Ising { rho }) => {
            let rho = *rho;
            let c = constants(d, rho).ok();
            if full {
                let m2 = true_moments(d, rho, h).moment(2, h);
                let finite = (m2 / (d as f64).powi(h as i32)).ln();
                let line = c.map(|c| h as f64 * (d as f64 * rho * rho).ln() + c.c2.ln());
                (Some(finite), line)
            } else {
                if c.is_none() {
                    return (None, None);
                }
                let mut rng = SplitMix64::new(mix64(row_seed, u64::MAX - 1));
                let q = match estimate_q(w, d, &cfg.channel, cfg.q_samples.max(1), &mut rng) {
                    Ok(q) => q,
                    Err(_) => return (None, None),
                };
                let se = if q.se.is_finite() { q.se } else { 0.0 };
                match ar_variance_prediction(d, rho, h, w, q.mean.clamp(0.0, 1.0), se) {
                    Ok(p) => (Some(p.log_normalized_finite), Some(p.asymptote)),
                    Err(_) => (None, None),
                }
            }
        }
        (Metric::ExcessKurtosis, ChannelKind::Ising { rho }) => {
            if full {
                let table = true_moments(d, *rho, h);
                let limit = constants(d, *rho).ok().map(|c| c.c4 / (c.c2 * c.c2) - 3.0);
                (Some(table.excess_kurtosis(h)), limit)
            } else {
                (None, Some(0.0))
            }
        }
        _ => (None, None),
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let (channel, q_or_rho) = channel_columns(&cfg.channel);
    let (d, h) = (cfg.shape.d(), cfg.shape.h());
    let mut rows = Vec::new();
    for &w in &cfg.ws {
        let row_seed = mix64(cfg.seed, w as u64);
        let effective_w = if cfg.sampler == SamplerKind::Ar { w } else { h };
        let ar = if cfg.sampler == SamplerKind::Ar {
            Some(ArConfig::new(cfg.shape, w, cfg.channel.clone()).and_then(ArSampler::new))
        } else {
            None
        };
        let ar = match ar.transpose() {
            Ok(ar) => ar,
            Err(e) => {
                for &metric in &cfg.metrics {
                    rows.push(error_row(cfg, &channel, &q_or_rho, effective_w, metric, row_seed, e.to_string()));
                }
                continue;
            }
        };
        let leaves: Vec<Vec<Symbol>> = (0..cfg.replicas as u64)
            .into_par_iter()
            .map_init(ArWorkspace::default, |ws, i| {
                let mut rng = SplitMix64::stream(row_seed, i);
                replica_leaves(cfg, ar.as_ref(), &mut rng, ws)
            })
            .collect();
        let sums: Vec<f64> = leaves.iter().map(|l| spin_sum(l) as f64).collect();
        let mut sum_stats = None;
        for &metric in &cfg.metrics {
            let report = match metric {
                Metric::ValidRate => {
                    let flags: Result<Vec<bool>> = leaves
                        .par_iter()
                        .map(|l| is_consistent(l, &cfg.shape, cfg.channel.alphabet_size()))
                        .collect();
                    flags.and_then(|f| valid_rate(&f))
                }
                Metric::LogNormalizedVariance | Metric::ExcessKurtosis => {
                    if sum_stats.is_none() {
                        sum_stats = Some(leaf_sum_stats(&sums, d, h, cfg.bootstrap, bootstrap_seed(row_seed)));
                    }
                    match sum_stats.as_ref().expect("just set") {
                        Ok(s) if metric == Metric::ExcessKurtosis => Ok(s.excess_kurtosis),
                        Ok(s) => Ok(s.log_normalized_variance),
                        Err(e) => Err(e.clone()),
                    }
                }
            };
            match report {
                Ok(r) => {
                    let (finite, asym) = theory_columns(cfg, effective_w, metric, row_seed);
                    rows.push(SweepRow {
                        sampler: cfg.sampler,
                        channel: channel.clone(),
                        d,
                        h,
                        q_or_rho: q_or_rho.clone(),
                        w: effective_w,
                        context_tokens: context_tokens(d, effective_w),
                        metric,
                        n: r.n,
                        estimate: r.estimate,
                        ci_low: r.ci_low,
                        ci_high: r.ci_high,
                        theory_finite: finite,
                        theory_asymptote: asym,
                        seed: row_seed,
                        error: None,
                    });
                }
                Err(e) => rows.push(error_row(cfg, &channel, &q_or_rho, effective_w, metric, row_seed, e.to_string())),
            }
        }
    }
    Ok(rows)
}

fn error_row(
    cfg: &SweepConfig,
    channel: &str,
    q_or_rho: &str,
    w: u32,
    metric: Metric,
    seed: u64,
    error: String,
) -> SweepRow {
    let r = nan_report(metric);
    SweepRow {
        sampler: cfg.sampler,
        channel: channel.into(),
        d: cfg.shape.d(),
        h: cfg.shape.h(),
        q_or_rho: q_or_rho.into(),
        w,
        context_tokens: context_tokens(cfg.shape.d(), w),
        metric,
        n: r.n,
        estimate: r.estimate,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        theory_finite: None,
        theory_asymptote: None,
        seed,
        error: Some(error),
    }
}

/// 17 significant digits; infinities and NaN as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sampler.as_str(),
            self.channel,
            self.d,
            self.h,
            self.q_or_rho,
            self.w,
            self.context_tokens,
            self.metric.as_str(),
            self.n,
            format_float(self.estimate),
            format_float(self.ci_low),
            format_float(self.ci_high),
            format_opt(self.theory_finite),
            format_opt(self.theory_asymptote),
            self.seed
        )
        .expect("writing to a String cannot fail");
        s
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    Ok(())
}
