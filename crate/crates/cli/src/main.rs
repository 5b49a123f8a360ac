//! `treecast`: sample broadcast-process languages, run context-size sweeps,
//! check coloring validity, print theory constants and emit training corpora.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! Replica `i` of a run seeded with `s` draws from `SplitMix64::stream(s, i)`,
//! so output bytes do not depend on `--workers`.

mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use treecast::ar::{ArConfig, ArSampler, ArWorkspace};
use treecast::broadcast::sample_tree;
use treecast::channel::{Channel, ChannelKind};
use treecast::corpus::{write_corpus, write_vocab, CorpusConfig, CorpusFormat, CorpusMode};
use treecast::geometry::TreeShape;
use treecast::posterior::estimate_q;
use treecast::reasoning::reason_sample;
use treecast::rng::{mix64, SplitMix64};
use treecast::stats::{valid_rate, Metric, DEFAULT_BOOTSTRAP};
use treecast::sweep::{run_sweep, write_csv, SamplerKind, SweepConfig};
use treecast::theory::{ar_variance_prediction, asymptotic_prediction, constants, true_moments};
use treecast::tokenizer::{tokenize, TokenVocab};
use treecast::validity::is_consistent;
use treecast::Error;

use config::RunRecord;

#[derive(Parser)]
#[command(name = "treecast", version, about = "Broadcast-process languages on d-ary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// `ising:<rho>` or `coloring:<q>`.
    #[arg(long)]
    channel: Channel,
    /// Branching factor.
    #[arg(long)]
    d: usize,
    /// Tree height.
    #[arg(long)]
    h: Option<u32>,
    #[arg(long, env = "TREECAST_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (output does not depend on this).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output file; stdout when absent. A `<out>.meta` sidecar records the run.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` file supplying flags not given on the command line.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact samples from the broadcast process.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Print token ids instead of leaves.
        #[arg(long)]
        tokens: bool,
    },
    /// Samples from the depth-w autoregressive sampler.
    ArSample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: u32,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long)]
        tokens: bool,
    },
    /// Samples from the memory-chain sampler.
    ReasonSample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long)]
        tokens: bool,
        /// With `--tokens`, insert the memory state before every lv-th token.
        #[arg(long)]
        lv: Option<usize>,
    },
    /// CSV of metrics against context depth.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Context depths, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        w: Vec<u32>,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value = "ar")]
        sampler: SamplerKind,
        /// variance, kurtosis, valid-rate (comma separated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        metric: Vec<Metric>,
        /// Samples used to estimate q_w for the theory columns.
        #[arg(long, default_value_t = 100_000)]
        estimate_q: usize,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
    },
    /// JSON table of constants and predictions.
    Theory {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: Option<u32>,
        /// Estimate q_w from this many samples.
        #[arg(long)]
        estimate_q: Option<usize>,
        /// Use this q_w instead of estimating it.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Check leaf sequences for consistency with a proper coloring.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Training pairs over the concatenated token stream.
    Corpus {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "plain")]
        mode: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        lv: Option<usize>,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value = "jsonl")]
        format: String,
        /// Consecutive windows of one stream instead of a fresh start per pair.
        #[arg(long)]
        sequential: bool,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidShape { .. }
            | Error::InvalidChannel(_)
            | Error::AmbiguousStationary
            | Error::BelowThreshold { .. }
            | Error::Divergent { .. }
            | Error::InvalidParameter(_)
            | Error::TooFewSamples { .. }
            | Error::IndexOutOfRange { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        runtime(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

impl Common {
    fn height(&self) -> CliResult<u32> {
        self.h.ok_or_else(|| usage("missing --h"))
    }

    fn shape(&self) -> CliResult<TreeShape> {
        Ok(TreeShape::new(self.d, self.height()?)?)
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        if self.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(self.workers).build().map_err(|e| runtime(e.to_string()))
    }

    fn record(&self, command: &str) -> RunRecord {
        let mut r = RunRecord::new(command);
        r.set("channel", self.channel.label()).set("d", self.d).set("seed", self.seed);
        if let Some(h) = self.h {
            r.set("h", h);
        }
        r
    }

    /// Writes `body` to `--out` (plus sidecar) or stdout.
    fn emit(&self, record: &RunRecord, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
        match &self.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                body(&mut w).and_then(|_| w.flush()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
                write_sidecar(path, record)
            }
            None => {
                let stdout = io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                body(&mut w).and_then(|_| w.flush())?;
                Ok(())
            }
        }
    }
}

fn sidecar_path(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn write_sidecar(path: &Path, record: &RunRecord) -> CliResult {
    let meta = sidecar_path(path, ".meta");
    std::fs::write(&meta, record.to_text()).map_err(|e| runtime(format!("{}: {e}", meta.display())))
}

/// Generates `replicas` lines in parallel, written in replica order.
fn replica_lines<F>(common: &Common, replicas: usize, make: F) -> CliResult<Vec<String>>
where
    F: Fn(&mut SplitMix64) -> Result<String, Error> + Sync,
{
    let pool = common.pool()?;
    let seed = common.seed;
    let lines = pool.install(|| {
        (0..replicas as u64)
            .into_par_iter()
            .map(|i| make(&mut SplitMix64::stream(seed, i)))
            .collect::<Result<Vec<_>, Error>>()
    })?;
    Ok(lines)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn render_leaves(channel: &Channel, leaves: &[u8]) -> String {
    join(leaves.iter().map(|&s| channel.render(s)))
}

fn write_lines(common: &Common, record: &RunRecord, lines: &[String]) -> CliResult {
    common.emit(record, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn cmd_sample(common: &Common, replicas: usize, tokens: bool) -> CliResult {
    let shape = common.shape()?;
    let vocab = TokenVocab::new(&common.channel, &shape);
    let channel = &common.channel;
    let lines = replica_lines(common, replicas, |rng| {
        let tree = sample_tree(&shape, channel, None, rng);
        Ok(if tokens { join(tokenize(tree.leaves(), &shape, &vocab)?) } else { render_leaves(channel, tree.leaves()) })
    })?;
    let mut r = common.record("sample");
    r.set("replicas", replicas).set("tokens", tokens);
    write_lines(common, &r, &lines)
}

fn cmd_ar_sample(common: &Common, w: u32, replicas: usize, tokens: bool) -> CliResult {
    let shape = common.shape()?;
    let sampler = ArSampler::new(ArConfig::new(shape, w, common.channel.clone())?)?;
    let vocab = TokenVocab::new(&common.channel, &shape);
    let channel = &common.channel;
    let lines = replica_lines(common, replicas, |rng| {
        let leaves = sampler.sample(rng, &mut ArWorkspace::default());
        Ok(if tokens { join(tokenize(&leaves, &shape, &vocab)?) } else { render_leaves(channel, &leaves) })
    })?;
    let mut r = common.record("ar-sample");
    r.set("w", w).set("replicas", replicas).set("tokens", tokens);
    write_lines(common, &r, &lines)
}

fn cmd_reason_sample(common: &Common, replicas: usize, tokens: bool, lv: Option<usize>) -> CliResult {
    let shape = common.shape()?;
    if lv == Some(0) {
        return Err(usage("--lv must satisfy lv >= 1"));
    }
    let vocab = TokenVocab::new(&common.channel, &shape);
    let channel = &common.channel;
    let lines = replica_lines(common, replicas, |rng| {
        let doc = reason_sample(&shape, channel, rng, lv.is_some())?;
        Ok(match (tokens, lv) {
            (true, Some(lv)) => join(doc.tokens_with_memory(shape.h(), lv, &vocab)),
            (true, None) => join(doc.tokens(&vocab)),
            (false, _) => render_leaves(channel, &doc.leaves()),
        })
    })?;
    let mut r = common.record("reason-sample");
    r.set("replicas", replicas).set("tokens", tokens);
    if let Some(lv) = lv {
        r.set("lv", lv);
    }
    write_lines(common, &r, &lines)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &Common,
    ws: Vec<u32>,
    replicas: usize,
    sampler: SamplerKind,
    metrics: Vec<Metric>,
    q_samples: usize,
    bootstrap: usize,
) -> CliResult {
    if ws.is_empty() {
        return Err(usage("--w needs at least one context depth"));
    }
    let metrics = if metrics.is_empty() {
        match common.channel.kind() {
            ChannelKind::Coloring { .. } => vec![Metric::ValidRate],
            _ => vec![Metric::LogNormalizedVariance, Metric::ExcessKurtosis],
        }
    } else {
        metrics
    };
    let cfg = SweepConfig {
        sampler,
        channel: common.channel.clone(),
        shape: common.shape()?,
        ws,
        replicas,
        seed: common.seed,
        metrics,
        q_samples,
        bootstrap,
    };
    cfg.validate()?;
    let rows = common.pool()?.install(|| run_sweep(&cfg))?;
    let mut r = common.record("sweep");
    r.set("w", join(&cfg.ws).replace(' ', ","))
        .set("replicas", replicas)
        .set("sampler", sampler.as_str())
        .set("metric", cfg.metrics.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","))
        .set("estimate-q", q_samples)
        .set("bootstrap", bootstrap);
    common.emit(&r, |mut w| write_csv(&rows, &mut w))?;
    let failed: Vec<_> = rows.iter().filter_map(|row| row.error.as_ref().map(|e| (row.w, e))).collect();
    if let Some((w, e)) = failed.first() {
        return Err(runtime(format!("{} row(s) failed; first at w = {w}: {e}", failed.len())));
    }
    Ok(())
}

fn cmd_theory(common: &Common, w: Option<u32>, q_samples: Option<usize>, q: Option<f64>) -> CliResult {
    let rho = match common.channel.kind() {
        ChannelKind::Ising { rho } => *rho,
        _ => return Err(usage("theory needs an ising channel")),
    };
    let d = common.d;
    let c = constants(d, rho)?;
    let mut r = common.record("theory");
    let mut out = json!({
        "d": d,
        "rho": rho,
        "c2": c.c2,
        "c3": c.c3,
        "c4": c.c4,
        "alpha_star": c.alpha_star,
        "slope": (d as f64 * rho * rho).ln(),
        "intercept_true": c.c2.ln(),
        "kurtosis_limit_true": c.c4 / (c.c2 * c.c2) - 3.0,
    });
    if let Some(h) = common.h {
        let table = true_moments(d, rho, h);
        out["true_log_normalized_variance"] = json!((table.moment(2, h) / (d as f64).powi(h as i32)).ln());
        out["true_excess_kurtosis"] = json!(table.excess_kurtosis(h));
    }
    if q_samples.is_some() && q.is_some() {
        return Err(usage("--estimate-q and --q are mutually exclusive"));
    }
    let q_est = match (q_samples, q, w) {
        (Some(_), _, None) => return Err(usage("--estimate-q needs --w")),
        (Some(n), _, Some(w)) => {
            if n < 2 {
                return Err(usage("--estimate-q needs at least 2 samples"));
            }
            r.set("w", w).set("estimate-q", n);
            let mut rng = SplitMix64::new(mix64(common.seed, u64::from(w)));
            let est = common.pool()?.install(|| estimate_q(w, d, &common.channel, n, &mut rng))?;
            Some((est.mean, est.se))
        }
        (None, Some(q), _) => {
            r.set("q", q);
            if let Some(w) = w {
                r.set("w", w);
            }
            Some((q, 0.0))
        }
        (None, None, _) => None,
    };
    if let Some((q_hat, q_se)) = q_est {
        let p = asymptotic_prediction(d, rho, q_hat, q_se)?;
        out["w"] = json!(w);
        out["q_hat"] = json!(q_hat);
        out["q_se"] = json!(q_se);
        out["a2"] = json!(p.a2);
        out["a2_se"] = json!(p.a2_se);
        out["a4"] = json!(p.a4);
        out["intercept_ar"] = json!(p.intercept_ar);
        if let (Some(h), Some(w)) = (common.h, w) {
            if w < h {
                let f = ar_variance_prediction(d, rho, h, w, q_hat, q_se)?;
                out["ar_variance"] = json!(f.finite);
                out["ar_variance_se"] = json!(f.finite_se);
                out["ar_log_normalized_variance"] = json!(f.log_normalized_finite);
                out["ar_log_normalized_variance_se"] = json!(f.log_normalized_finite_se);
                out["ar_log_normalized_asymptote"] = json!(f.asymptote);
            }
        }
    }
    out["config"] = r.to_json();
    let text = serde_json::to_string_pretty(&out).map_err(|e| runtime(e.to_string()))?;
    common.emit(&r, |w| writeln!(w, "{text}"))
}

fn parse_leaves(line: &str, channel: &Channel, expected: usize) -> Result<Vec<u8>, String> {
    let leaves = line
        .split_whitespace()
        .map(|t| {
            let v: i64 = t.parse().map_err(|_| format!("not an integer: {t:?}"))?;
            channel.parse(v).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    if leaves.len() != expected {
        return Err(Error::LeafCount { expected, got: leaves.len() }.to_string());
    }
    Ok(leaves)
}

fn cmd_validate(common: &Common, input: &Path) -> CliResult {
    let q = match common.channel.kind() {
        ChannelKind::Coloring { q } => *q,
        _ => return Err(usage("validate needs a coloring channel")),
    };
    let shape = common.shape()?;
    let file = File::open(input).map_err(|e| runtime(format!("{}: {e}", input.display())))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<io::Result<_>>()
        .map_err(|e| runtime(format!("{}: {e}", input.display())))?;
    let pool = common.pool()?;
    let verdicts: Vec<Result<bool, String>> = pool.install(|| {
        lines
            .par_iter()
            .map(|l| {
                let leaves = parse_leaves(l, &common.channel, shape.leaves())?;
                is_consistent(&leaves, &shape, q).map_err(|e| e.to_string())
            })
            .collect()
    });
    let flags: Vec<bool> = verdicts.iter().filter_map(|v| v.as_ref().ok().copied()).collect();
    let errors = verdicts.len() - flags.len();
    let mut r = common.record("validate");
    r.set("input", input.display());
    common.emit(&r, |w| {
        for (i, v) in verdicts.iter().enumerate() {
            match v {
                Ok(true) => writeln!(w, "{}\tvalid", i + 1)?,
                Ok(false) => writeln!(w, "{}\tinvalid", i + 1)?,
                Err(e) => writeln!(w, "{}\terror\t{e}", i + 1)?,
            }
        }
        let valid = flags.iter().filter(|&&f| f).count();
        match valid_rate(&flags) {
            Ok(s) => writeln!(
                w,
                "summary\tchecked={}\tvalid={valid}\tinvalid={}\terror={errors}\trate={}\tci_low={}\tci_high={}",
                s.n,
                s.n - valid,
                s.estimate,
                s.ci_low,
                s.ci_high
            ),
            Err(_) => writeln!(w, "summary\tchecked=0\tvalid=0\tinvalid=0\terror={errors}\trate=nan\tci_low=nan\tci_high=nan"),
        }
    })?;
    if errors > 0 {
        return Err(runtime(format!("{errors} malformed line(s) in {}", input.display())));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_corpus(
    common: &Common,
    mode: &str,
    k: usize,
    lv: Option<usize>,
    count: usize,
    format: &str,
    sequential: bool,
) -> CliResult {
    let mode = match mode {
        "plain" => CorpusMode::Plain,
        "reasoning" => CorpusMode::Reasoning,
        _ => return Err(usage(format!("unknown mode {mode:?}; use plain or reasoning"))),
    };
    let format = match format {
        "jsonl" => CorpusFormat::Jsonl,
        "binary" => CorpusFormat::Binary,
        _ => return Err(usage(format!("unknown format {format:?}; use jsonl or binary"))),
    };
    let lv = match (mode, lv) {
        (CorpusMode::Reasoning, None) => return Err(usage("reasoning mode needs --lv")),
        (_, lv) => lv.unwrap_or(1),
    };
    let cfg = CorpusConfig {
        mode,
        k,
        lv,
        shape: common.shape()?,
        channel: common.channel.clone(),
        seed: common.seed,
        sequential,
    };
    cfg.validate()?;
    let out = common.out.as_ref().ok_or_else(|| usage("corpus needs --out"))?;
    write_corpus(&cfg, count, out, format)?;
    write_vocab(&cfg.vocab(), &sidecar_path(out, ".vocab"))?;
    let mut r = common.record("corpus");
    r.set("mode", if mode == CorpusMode::Plain { "plain" } else { "reasoning" })
        .set("k", k)
        .set("count", count)
        .set("format", if format == CorpusFormat::Jsonl { "jsonl" } else { "binary" })
        .set("sequential", sequential);
    if mode == CorpusMode::Reasoning {
        r.set("lv", lv);
    }
    write_sidecar(out, &r)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Sample { common, replicas, tokens } => cmd_sample(&common, replicas, tokens),
        Command::ArSample { common, w, replicas, tokens } => cmd_ar_sample(&common, w, replicas, tokens),
        Command::ReasonSample { common, replicas, tokens, lv } => cmd_reason_sample(&common, replicas, tokens, lv),
        Command::Sweep { common, w, replicas, sampler, metric, estimate_q, bootstrap } => {
            cmd_sweep(&common, w, replicas, sampler, metric, estimate_q, bootstrap)
        }
        Command::Theory { common, w, estimate_q, q } => cmd_theory(&common, w, estimate_q, q),
        Command::Validate { common, input } => cmd_validate(&common, &input),
        Command::Corpus { common, mode, k, lv, count, format, sequential } => {
            cmd_corpus(&common, &mode, k, lv, count, &format, sequential)
        }
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
