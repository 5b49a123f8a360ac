//! Training-pair generators over the concatenated token stream of i.i.d.
//! documents, and the JSONL / binary corpus formats.
//!
//! Binary layout: `b"TCST"`, `u16` version, `u16` reserved (zero), then each
//! pair as `k` little-endian `u32` ids of `x` followed by `k` of `y`, then a
//! JSON metadata block and its byte length as a little-endian `u64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::broadcast::sample_tree;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::reasoning::memory_states;
use crate::rng::SplitMix64;
use crate::tokenizer::{document_length, tokenize_into, TokenId, TokenVocab};

pub const MAGIC: &[u8; 4] = b"TCST";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub x: Vec<TokenId>,
    pub y: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    Plain,
    Reasoning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Jsonl,
    Binary,
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub mode: CorpusMode,
    pub k: usize,
    /// Value tokens between memory segments (reasoning mode).
    pub lv: usize,
    pub shape: TreeShape,
    pub channel: Channel,
    pub seed: u64,
    /// Consecutive windows of one stream instead of a fresh start per pair.
    pub sequential: bool,
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("context size k must be at least 1".into()));
        }
        if self.mode == CorpusMode::Reasoning {
            let h = self.shape.h() as usize;
            if h == 0 {
                return Err(Error::InvalidParameter("reasoning corpora need h >= 1".into()));
            }
            if self.lv < 1 || self.lv + 2 * h + 1 > self.k {
                return Err(Error::InvalidParameter(format!(
                    "lv must satisfy 1 <= lv <= k - 2h - 1 = {} (k = {}, h = {h}), got lv = {}",
                    self.k as i64 - 2 * h as i64 - 1,
                    self.k,
                    self.lv
                )));
            }
        }
        Ok(())
    }

    pub fn vocab(&self) -> TokenVocab {
        TokenVocab::new(&self.channel, &self.shape)
    }
}

/// The infinite stream of documents, each followed by the refresh token,
/// generated one document at a time.
struct DocumentStream<'a> {
    cfg: &'a CorpusConfig,
    vocab: &'a TokenVocab,
    rng: SplitMix64,
    tokens: Vec<TokenId>,
    /// Serialized `M_j` for every position `j` of the current document.
    memory: Vec<Vec<TokenId>>,
    pos: usize,
}

impl<'a> DocumentStream<'a> {
    fn new(cfg: &'a CorpusConfig, vocab: &'a TokenVocab, rng: SplitMix64) -> Self {
        let mut s = Self { cfg, vocab, rng, tokens: Vec::new(), memory: Vec::new(), pos: 0 };
        s.refill();
        s
    }

    fn refill(&mut self) {
        let shape = &self.cfg.shape;
        let tree = sample_tree(shape, &self.cfg.channel, None, &mut self.rng);
        self.tokens.clear();
        tokenize_into(tree.leaves(), shape, self.vocab, &mut self.tokens);
        self.tokens.push(self.vocab.refresh());
        self.memory.clear();
        if self.cfg.mode == CorpusMode::Reasoning {
            let doc = memory_states(&tree).expect("height checked in validate");
            for m in &doc.states[..self.tokens.len()] {
                let mut buf = Vec::with_capacity(2 + 2 * shape.h() as usize);
                m.serialize(shape.h(), self.vocab, &mut buf);
                self.memory.push(buf);
            }
        }
        self.pos = 0;
    }

    /// Skips to 1-based position `iota` of the current document.
    fn seek(&mut self, iota: usize) {
        self.pos = iota - 1;
    }

    /// Next token with the memory state in force before it.
    fn next(&mut self) -> (TokenId, Option<&[TokenId]>) {
        if self.pos == self.tokens.len() {
            self.refill();
        }
        let i = self.pos;
        self.pos += 1;
        (self.tokens[i], self.memory.get(i).map(Vec::as_slice))
    }
}

/// Builds the token sequence seen by a model: plain tokens, or memory
/// segments inserted before every `lv`-th token.
struct Interleaver {
    pending: std::collections::VecDeque<TokenId>,
    emitted_values: usize,
}

impl Interleaver {
    fn new() -> Self {
        Self { pending: Default::default(), emitted_values: 0 }
    }

    fn next(&mut self, docs: &mut DocumentStream<'_>, lv: usize) -> TokenId {
        if let Some(t) = self.pending.pop_front() {
            return t;
        }
        let reasoning = docs.cfg.mode == CorpusMode::Reasoning;
        let (tok, mem) = docs.next();
        let insert = reasoning && self.emitted_values.is_multiple_of(lv);
        self.emitted_values += 1;
        match (insert, mem) {
            (true, Some(m)) => {
                self.pending.extend(m[1..].iter().copied());
                self.pending.push_back(tok);
                m[0]
            }
            _ => tok,
        }
    }
}

/// Lazily generated training pairs.
pub struct PairStream<'a> {
    cfg: &'a CorpusConfig,
    vocab: TokenVocab,
    index: u64,
    carry: Option<Carry>,
}

/// Stream state kept alive across pairs in sequential mode.
struct Carry {
    rng: SplitMix64,
    pos: usize,
    tokens: Vec<TokenId>,
    memory: Vec<Vec<TokenId>>,
    interleaver: Interleaver,
    first: TokenId,
}

impl<'a> PairStream<'a> {
    pub fn new(cfg: &'a CorpusConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, vocab: cfg.vocab(), index: 0, carry: None })
    }

    pub fn vocab(&self) -> &TokenVocab {
        &self.vocab
    }

    fn fresh_pair(&self, i: u64) -> TrainingPair {
        let mut rng = SplitMix64::stream(self.cfg.seed, i);
        let l1 = document_length(&self.cfg.shape) + 1;
        let iota = rng.below(l1 as u64) as usize + 1;
        let mut docs = DocumentStream::new(self.cfg, &self.vocab, rng);
        docs.seek(iota);
        let mut il = Interleaver::new();
        let window: Vec<TokenId> = (0..=self.cfg.k).map(|_| il.next(&mut docs, self.cfg.lv)).collect();
        split_window(window)
    }

    fn sequential_pair(&mut self) -> TrainingPair {
        let Carry { rng, pos, tokens, memory, interleaver: mut il, first: last } = match self.carry.take() {
            Some(c) => c,
            None => {
                let mut rng = SplitMix64::new(self.cfg.seed);
                let l1 = document_length(&self.cfg.shape) + 1;
                let iota = rng.below(l1 as u64) as usize + 1;
                let mut docs = DocumentStream::new(self.cfg, &self.vocab, rng);
                docs.seek(iota);
                let mut il = Interleaver::new();
                let first = il.next(&mut docs, self.cfg.lv);
                Carry { rng: docs.rng, pos: docs.pos, tokens: docs.tokens, memory: docs.memory, interleaver: il, first }
            }
        };
        let mut docs = DocumentStream { cfg: self.cfg, vocab: &self.vocab, rng, tokens, memory, pos };
        let mut window = Vec::with_capacity(self.cfg.k + 1);
        window.push(last);
        for _ in 0..self.cfg.k {
            window.push(il.next(&mut docs, self.cfg.lv));
        }
        let next_first = *window.last().expect("k >= 1");
        self.carry = Some(Carry {
            rng: docs.rng,
            pos: docs.pos,
            tokens: docs.tokens,
            memory: docs.memory,
            interleaver: il,
            first: next_first,
        });
        split_window(window)
    }
}

fn split_window(window: Vec<TokenId>) -> TrainingPair {
    let k = window.len() - 1;
    TrainingPair { x: window[..k].to_vec(), y: window[1..].to_vec() }
}

impl Iterator for PairStream<'_> {
    type Item = TrainingPair;

    fn next(&mut self) -> Option<TrainingPair> {
        let pair = if self.cfg.sequential { self.sequential_pair() } else { self.fresh_pair(self.index) };
        self.index += 1;
        Some(pair)
    }
}

pub fn plain_pairs(cfg: &CorpusConfig, count: usize) -> Result<Vec<TrainingPair>> {
    let cfg = CorpusConfig { mode: CorpusMode::Plain, ..cfg.clone() };
    Ok(PairStream::new(&cfg)?.take(count).collect())
}

pub fn reasoning_pairs(cfg: &CorpusConfig, count: usize) -> Result<Vec<TrainingPair>> {
    let cfg = CorpusConfig { mode: CorpusMode::Reasoning, ..cfg.clone() };
    Ok(PairStream::new(&cfg)?.take(count).collect())
}

/// Everything needed to regenerate a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub format: String,
    pub version: u16,
    pub mode: CorpusMode,
    pub k: usize,
    pub lv: Option<usize>,
    pub d: usize,
    pub h: u32,
    pub channel: String,
    pub seed: u64,
    pub count: usize,
    pub sequential: bool,
    pub vocab: Vec<String>,
}

impl CorpusMeta {
    pub fn new(cfg: &CorpusConfig, count: usize) -> Self {
        Self {
            format: "treecast-corpus".into(),
            version: VERSION,
            mode: cfg.mode,
            k: cfg.k,
            lv: (cfg.mode == CorpusMode::Reasoning).then_some(cfg.lv),
            d: cfg.shape.d(),
            h: cfg.shape.h(),
            channel: cfg.channel.label(),
            seed: cfg.seed,
            count,
            sequential: cfg.sequential,
            vocab: cfg.vocab().names().to_vec(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Generates `count` pairs and writes them with a metadata header.
pub fn write_corpus(cfg: &CorpusConfig, count: usize, path: &Path, format: CorpusFormat) -> Result<CorpusMeta> {
    let meta = CorpusMeta::new(cfg, count);
    let pairs = PairStream::new(cfg)?.take(count);
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        match format {
            CorpusFormat::Jsonl => {
                serde_json::to_writer(&mut out, &meta)?;
                out.write_all(b"\n")?;
                for p in pairs {
                    serde_json::to_writer(&mut out, &p)?;
                    out.write_all(b"\n")?;
                }
            }
            CorpusFormat::Binary => {
                out.write_all(MAGIC)?;
                out.write_all(&VERSION.to_le_bytes())?;
                out.write_all(&0u16.to_le_bytes())?;
                for p in pairs {
                    for t in p.x.iter().chain(&p.y) {
                        out.write_all(&t.to_le_bytes())?;
                    }
                }
                let json = serde_json::to_vec(&meta)?;
                out.write_all(&json)?;
                out.write_all(&(json.len() as u64).to_le_bytes())?;
            }
        }
        out.flush()
    })();
    res.map_err(|e| io_err(path, e))?;
    Ok(meta)
}

pub fn read_jsonl(path: &Path) -> Result<(CorpusMeta, Vec<TrainingPair>)> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| io_err(path, "empty corpus file"))?.map_err(|e| io_err(path, e))?;
    let meta: CorpusMeta = serde_json::from_str(&header).map_err(|e| io_err(path, e))?;
    let pairs = lines
        .map(|l| {
            let l = l.map_err(|e| io_err(path, e))?;
            serde_json::from_str(&l).map_err(|e| io_err(path, e))
        })
        .collect::<Result<Vec<TrainingPair>>>()?;
    Ok((meta, pairs))
}

pub fn read_binary(path: &Path) -> Result<(CorpusMeta, Vec<TrainingPair>)> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| io_err(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(io_err(path, "not a TCST corpus"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(io_err(path, format!("unsupported version {version}")));
    }
    let n = bytes.len();
    let meta_len = u64::from_le_bytes(bytes[n - 8..].try_into().expect("8 bytes")) as usize;
    if meta_len + 16 > n {
        return Err(io_err(path, "metadata length exceeds file size"));
    }
    let meta_start = n - 8 - meta_len;
    let meta: CorpusMeta = serde_json::from_slice(&bytes[meta_start..n - 8]).map_err(|e| io_err(path, e))?;
    let body = &bytes[8..meta_start];
    let pair_bytes = 8 * meta.k;
    if pair_bytes == 0 || body.len() != pair_bytes * meta.count {
        return Err(io_err(path, "pair block size does not match the metadata"));
    }
    let pairs = body
        .chunks_exact(pair_bytes)
        .map(|chunk| {
            let ids: Vec<TokenId> =
                chunk.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
            TrainingPair { x: ids[..meta.k].to_vec(), y: ids[meta.k..].to_vec() }
        })
        .collect();
    Ok((meta, pairs))
}

pub fn write_vocab(vocab: &TokenVocab, path: &Path) -> Result<()> {
    std::fs::write(path, vocab.to_text()).map_err(|e| io_err(path, e))
}
