//! Feed-forward neural language models.
//!
//! A plain model predicts a clean word from the previous `context` clean
//! words. The joint model additionally sees `source_window` noisy tokens
//! around the noisy position the predicted word is affiliated with. Both
//! concatenate input embeddings, apply one rectified hidden layer and a full
//! softmax over the vocabulary.

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::num::Scalar;

pub const MODEL_FORMAT: &str = "asr-repair-nnlm";
pub const MODEL_VERSION: u32 = 1;

/// Marks a history slot before the sentence start; filled with the
/// frequency-weighted average input embedding.
const PAD: u32 = u32::MAX;
const CACHE_LIMIT: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuralConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    /// Previous clean words seen by the model.
    pub context: usize,
    /// Noisy tokens seen around the affiliated position; 0 for a plain LM.
    pub source_window: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weights start uniform in ±`init_range`; biases start at 0.
    pub init_range: f64,
    pub seed: u64,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        NeuralConfig {
            embedding_dim: 150,
            hidden_dim: 750,
            context: 4,
            source_window: 0,
            learning_rate: 0.05,
            batch_size: 64,
            epochs: 10,
            init_range: 0.05,
            seed: 1,
        }
    }
}

impl NeuralConfig {
    /// Defaults for the joint model: 4 noisy tokens.
    pub fn nnjm() -> Self {
        NeuralConfig { source_window: 4, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("neural LM: {what}")));
        if self.context == 0 {
            return bad("context must be at least 1");
        }
        if self.embedding_dim == 0 || self.hidden_dim == 0 {
            return bad("layer sizes must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return bad("init range must be non-negative");
        }
        Ok(())
    }
}

/// Noisy position a clean word at `target_pos` (of `target_len`) is tied
/// to: round(target_pos · source_len / target_len), clamped to the source.
pub fn affiliation(target_pos: usize, target_len: usize, source_len: usize) -> usize {
    if source_len == 0 || target_len == 0 {
        return 0;
    }
    let p = ((target_pos * source_len) as f64 / target_len as f64).round() as usize;
    p.min(source_len - 1)
}

/// Input slots (embedding rows) and the predicted row.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Example {
    slots: Vec<u32>,
    target: u32,
}

/// Parameter groups, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamBlock {
    TargetEmbedding,
    SourceEmbedding,
    HiddenWeights,
    HiddenBias,
    OutputWeights,
    OutputBias,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 6] = [
        ParamBlock::TargetEmbedding,
        ParamBlock::SourceEmbedding,
        ParamBlock::HiddenWeights,
        ParamBlock::HiddenBias,
        ParamBlock::OutputWeights,
        ParamBlock::OutputBias,
    ];
}

#[derive(Clone, Debug, PartialEq)]
struct Params<S> {
    target_embed: Array2<S>,
    source_embed: Array2<S>,
    w1: Array2<S>,
    b1: Array1<S>,
    w2: Array2<S>,
    b2: Array1<S>,
}

impl<S: Scalar> Params<S> {
    fn zeros_like(p: &Params<S>) -> Self {
        Params {
            target_embed: Array2::zeros(p.target_embed.raw_dim()),
            source_embed: Array2::zeros(p.source_embed.raw_dim()),
            w1: Array2::zeros(p.w1.raw_dim()),
            b1: Array1::zeros(p.b1.raw_dim()),
            w2: Array2::zeros(p.w2.raw_dim()),
            b2: Array1::zeros(p.b2.raw_dim()),
        }
    }

    fn block(&self, b: ParamBlock) -> &[S] {
        match b {
            ParamBlock::TargetEmbedding => self.target_embed.as_slice(),
            ParamBlock::SourceEmbedding => self.source_embed.as_slice(),
            ParamBlock::HiddenWeights => self.w1.as_slice(),
            ParamBlock::HiddenBias => self.b1.as_slice(),
            ParamBlock::OutputWeights => self.w2.as_slice(),
            ParamBlock::OutputBias => self.b2.as_slice(),
        }
        .expect("parameters are contiguous")
    }

    fn block_mut(&mut self, b: ParamBlock) -> &mut [S] {
        match b {
            ParamBlock::TargetEmbedding => self.target_embed.as_slice_mut(),
            ParamBlock::SourceEmbedding => self.source_embed.as_slice_mut(),
            ParamBlock::HiddenWeights => self.w1.as_slice_mut(),
            ParamBlock::HiddenBias => self.b1.as_slice_mut(),
            ParamBlock::OutputWeights => self.w2.as_slice_mut(),
            ParamBlock::OutputBias => self.b2.as_slice_mut(),
        }
        .expect("parameters are contiguous")
    }

    fn step(&mut self, grad: &Params<S>, lr: S) {
        for b in ParamBlock::ALL {
            for (p, g) in self.block_mut(b).iter_mut().zip(grad.block(b)) {
                *p -= lr * *g;
            }
        }
    }

    fn is_finite(&self) -> bool {
        ParamBlock::ALL.iter().all(|&b| self.block(b).iter().all(|x| x.is_finite()))
    }
}

/// Result of comparing analytic and finite-difference gradients on one
/// parameter block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub block: ParamBlock,
    pub checked: usize,
    /// max |analytic − numeric| / max(|analytic|, |numeric|, 1e-8)
    pub max_relative_error: f64,
}

/// Feed-forward LM, optionally conditioned on noisy tokens.
pub struct FeedForwardLm<S = f64> {
    context: usize,
    source_window: usize,
    embedding_dim: usize,
    hidden_dim: usize,
    /// Surface form of each output row.
    words: Vec<String>,
    /// Row of each vocabulary id; unknown ids use the `<unk>` row.
    lookup: Vec<u32>,
    /// Unigram distribution over rows used to build the padding embedding.
    unigram: Array1<S>,
    params: Params<S>,
    epoch_losses: Vec<f64>,
    cache: Mutex<FxHashMap<Vec<u32>, Arc<[S]>>>,
}

impl<S: Scalar> std::fmt::Debug for FeedForwardLm<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeedForwardLm")
            .field("context", &self.context)
            .field("source_window", &self.source_window)
            .field("embedding_dim", &self.embedding_dim)
            .field("hidden_dim", &self.hidden_dim)
            .field("rows", &self.words.len())
            .finish()
    }
}

impl<S: Scalar> Clone for FeedForwardLm<S> {
    fn clone(&self) -> Self {
        FeedForwardLm {
            context: self.context,
            source_window: self.source_window,
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            words: self.words.clone(),
            lookup: self.lookup.clone(),
            unigram: self.unigram.clone(),
            params: self.params.clone(),
            epoch_losses: self.epoch_losses.clone(),
            cache: Mutex::new(FxHashMap::default()),
        }
    }
}

impl<S: Scalar> PartialEq for FeedForwardLm<S> {
    fn eq(&self, o: &Self) -> bool {
        self.context == o.context
            && self.source_window == o.source_window
            && self.words == o.words
            && self.unigram == o.unigram
            && self.params == o.params
    }
}

/// Trains a plain feed-forward LM on clean sentences.
pub fn train_fflm<S: Scalar>(text: &[Vec<TokenId>], vocab: &Vocabulary, config: &NeuralConfig) -> Result<FeedForwardLm<S>> {
    let config = NeuralConfig { source_window: 0, ..*config };
    train(text, None, vocab, &config)
}

/// Trains the joint model on (noisy, clean) sentence pairs.
pub fn train_nnjm<S: Scalar>(
    noisy: &[Vec<TokenId>],
    clean: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: &NeuralConfig,
) -> Result<FeedForwardLm<S>> {
    if noisy.len() != clean.len() {
        return Err(Error::LineCount { found: noisy.len(), expected: clean.len() });
    }
    if config.source_window == 0 {
        return Err(Error::Config("joint model needs a source window of at least 1".into()));
    }
    train(clean, Some(noisy), vocab, config)
}

fn train<S: Scalar>(
    clean: &[Vec<TokenId>],
    noisy: Option<&[Vec<TokenId>]>,
    vocab: &Vocabulary,
    config: &NeuralConfig,
) -> Result<FeedForwardLm<S>> {
    config.validate()?;
    if clean.iter().all(|s| s.is_empty()) {
        return Err(Error::Estimation("neural LM needs nonempty training text".into()));
    }
    let rows = vocab.len();
    let mut counts = vec![0usize; rows];
    for s in clean {
        for &w in s.iter().chain(std::iter::once(&TokenId::EOS)) {
            if w.index() < rows {
                counts[w.index()] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    let unigram = counts.iter().map(|&c| S::from_count(c) / S::from_count(total)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.init_range;
    let mut uniform = |shape: (usize, usize)| {
        Array2::from_shape_simple_fn(shape, || S::lit(if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 }))
    };
    let (e, h) = (config.embedding_dim, config.hidden_dim);
    let input = (config.context + config.source_window) * e;
    let source_rows = if config.source_window > 0 { rows } else { 0 };
    let params = Params {
        target_embed: uniform((rows, e)),
        source_embed: uniform((source_rows, e)),
        w1: uniform((h, input)),
        b1: Array1::zeros(h),
        w2: uniform((rows, h)),
        b2: Array1::zeros(rows),
    };
    let mut model = FeedForwardLm {
        context: config.context,
        source_window: config.source_window,
        embedding_dim: e,
        hidden_dim: h,
        words: vocab.iter().map(|(_, w)| w.to_owned()).collect(),
        lookup: (0..rows as u32).collect(),
        unigram,
        params,
        epoch_losses: Vec::new(),
        cache: Mutex::new(FxHashMap::default()),
    };

    let examples = model.examples(clean, noisy);
    let lr = S::lit(config.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let (_, grad) = model.loss_and_grad(&batch);
            model.params.step(&grad, lr);
        }
        if !model.params.is_finite() {
            return Err(Error::Estimation("neural LM training diverged".into()));
        }
        let loss = model.mean_loss(&examples);
        model.epoch_losses.push(loss);
    }
    Ok(model)
}

impl<S: Scalar> FeedForwardLm<S> {
    pub fn context(&self) -> usize {
        self.context
    }

    pub fn source_window(&self) -> usize {
        self.source_window
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Mean training cross-entropy (nats per token) after each epoch.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// Number of output rows (the training vocabulary size).
    pub fn num_rows(&self) -> usize {
        self.words.len()
    }

    fn row(&self, id: TokenId) -> u32 {
        self.lookup.get(id.index()).copied().unwrap_or(TokenId::UNK.0)
    }

    fn target_slots(&self, history: &[TokenId], slots: &mut Vec<u32>) {
        let tail = &history[history.len().saturating_sub(self.context)..];
        slots.extend(std::iter::repeat_n(PAD, self.context - tail.len()));
        slots.extend(tail.iter().map(|&w| self.row(w)));
    }

    /// Window offsets −(w/2 − 1) ..= w/2 around `position`; positions
    /// outside the sentence read as `<s>` (before) or `</s>` (after).
    fn source_slots(&self, source: &[TokenId], position: usize, slots: &mut Vec<u32>) {
        let first = 1 - (self.source_window / 2) as isize;
        for k in 0..self.source_window as isize {
            let p = position as isize + first + k;
            slots.push(if p < 0 {
                self.row(TokenId::BOS)
            } else if p as usize >= source.len() {
                self.row(TokenId::EOS)
            } else {
                self.row(source[p as usize])
            });
        }
    }

    fn slots(&self, history: &[TokenId], source: &[TokenId], position: usize) -> Vec<u32> {
        let mut slots = Vec::with_capacity(self.context + self.source_window);
        self.target_slots(history, &mut slots);
        if self.source_window > 0 {
            self.source_slots(source, position, &mut slots);
        }
        slots
    }

    fn examples(&self, clean: &[Vec<TokenId>], noisy: Option<&[Vec<TokenId>]>) -> Vec<Example> {
        let mut out = Vec::new();
        for (i, sentence) in clean.iter().enumerate() {
            if sentence.is_empty() {
                continue;
            }
            let source: &[TokenId] = noisy.map_or(&[], |n| &n[i]);
            let mut history = vec![TokenId::BOS];
            for (pos, &w) in sentence.iter().chain(std::iter::once(&TokenId::EOS)).enumerate() {
                let position = affiliation(pos, sentence.len(), source.len());
                out.push(Example { slots: self.slots(&history, source, position), target: self.row(w) });
                history.push(w);
            }
        }
        out
    }

    fn padding(&self) -> Array1<S> {
        self.unigram.dot(&self.params.target_embed)
    }

    fn inputs(&self, batch: &[&Example]) -> Array2<S> {
        let e = self.embedding_dim;
        let pad = self.padding();
        let mut x = Array2::zeros((batch.len(), (self.context + self.source_window) * e));
        for (b, ex) in batch.iter().enumerate() {
            for (j, &slot) in ex.slots.iter().enumerate() {
                let mut dst = x.slice_mut(s![b, j * e..(j + 1) * e]);
                if j < self.context {
                    if slot == PAD {
                        dst.assign(&pad);
                    } else {
                        dst.assign(&self.params.target_embed.row(slot as usize));
                    }
                } else {
                    dst.assign(&self.params.source_embed.row(slot as usize));
                }
            }
        }
        x
    }

    /// Pre-activations, hidden layer and natural-log softmax.
    fn forward(&self, x: &Array2<S>) -> (Array2<S>, Array2<S>, Array2<S>) {
        let pre = x.dot(&self.params.w1.t()) + &self.params.b1;
        let hidden = pre.mapv(|v| v.max(S::zero()));
        let mut logits = hidden.dot(&self.params.w2.t()) + &self.params.b2;
        for mut row in logits.rows_mut() {
            let max = row.fold(S::neg_infinity(), |m, &v| m.max(v));
            let log_z = max + row.iter().map(|&v| (v - max).exp()).sum::<S>().ln();
            row.mapv_inplace(|v| v - log_z);
        }
        (pre, hidden, logits)
    }

    fn mean_loss(&self, examples: &[Example]) -> f64 {
        let mut total = 0.0;
        for chunk in examples.chunks(256) {
            let batch: Vec<&Example> = chunk.iter().collect();
            let (_, _, logp) = self.forward(&self.inputs(&batch));
            for (b, ex) in batch.iter().enumerate() {
                total -= logp[[b, ex.target as usize]].as_f64();
            }
        }
        total / examples.len().max(1) as f64
    }

    /// Mean cross-entropy of the batch and its gradient.
    fn loss_and_grad(&self, batch: &[&Example]) -> (S, Params<S>) {
        let n = S::from_count(batch.len());
        let x = self.inputs(batch);
        let (pre, hidden, logp) = self.forward(&x);
        let mut loss = S::zero();
        let mut dlogits = logp.mapv(|v| v.exp());
        for (b, ex) in batch.iter().enumerate() {
            let t = ex.target as usize;
            loss -= logp[[b, t]];
            dlogits[[b, t]] -= S::one();
        }
        dlogits.mapv_inplace(|v| v / n);

        let mut g = Params::zeros_like(&self.params);
        g.w2 = dlogits.t().dot(&hidden);
        g.b2 = dlogits.sum_axis(Axis(0));
        let mut dpre = dlogits.dot(&self.params.w2);
        dpre.zip_mut_with(&pre, |d, &p| {
            if p <= S::zero() {
                *d = S::zero();
            }
        });
        g.w1 = dpre.t().dot(&x);
        g.b1 = dpre.sum_axis(Axis(0));
        let dx = dpre.dot(&self.params.w1);

        let e = self.embedding_dim;
        let mut dpad = Array1::<S>::zeros(e);
        for (b, ex) in batch.iter().enumerate() {
            for (j, &slot) in ex.slots.iter().enumerate() {
                let seg = dx.slice(s![b, j * e..(j + 1) * e]);
                if j < self.context {
                    if slot == PAD {
                        dpad += &seg;
                    } else {
                        let mut row = g.target_embed.row_mut(slot as usize);
                        row += &seg;
                    }
                } else {
                    let mut row = g.source_embed.row_mut(slot as usize);
                    row += &seg;
                }
            }
        }
        // the padding vector is Σ_r unigram[r] · embed[r]
        for (r, &u) in self.unigram.iter().enumerate() {
            if u != S::zero() {
                g.target_embed.row_mut(r).scaled_add(u, &dpad);
            }
        }
        (loss / n, g)
    }

    /// log10 distribution over rows for one input context.
    fn distribution(&self, slots: Vec<u32>) -> Arc<[S]> {
        if let Some(d) = self.cache.lock().expect("cache lock").get(&slots) {
            return d.clone();
        }
        let ex = Example { slots, target: 0 };
        let (_, _, logp) = self.forward(&self.inputs(&[&ex]));
        let ln10 = S::LN_10();
        let dist: Arc<[S]> = logp.row(0).iter().map(|&v| v / ln10).collect();
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(ex.slots, dist.clone());
        dist
    }

    /// log10 p(word | history); missing history is padded.
    pub fn fflm_logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        self.nnjm_logprob(word, history, &[], 0)
    }

    /// log10 p(word | history, noisy window around `position`).
    pub fn nnjm_logprob(&self, word: TokenId, history: &[TokenId], source: &[TokenId], position: usize) -> S {
        let dist = self.distribution(self.slots(history, source, position));
        dist[self.row(word) as usize]
    }

    /// Total natural-log likelihood of clean sentences (with their noisy
    /// sides for the joint model), end markers included.
    pub fn log_likelihood(&self, clean: &[Vec<TokenId>], noisy: Option<&[Vec<TokenId>]>) -> f64 {
        let examples = self.examples(clean, noisy);
        -self.mean_loss(&examples) * examples.len() as f64
    }

    /// Compares analytic gradients with central differences at `samples`
    /// random coordinates of every parameter block.
    pub fn gradient_check(
        &mut self,
        clean: &[Vec<TokenId>],
        noisy: Option<&[Vec<TokenId>]>,
        samples: usize,
        step: f64,
        seed: u64,
    ) -> Vec<GradientCheck> {
        let examples = self.examples(clean, noisy);
        let batch: Vec<&Example> = examples.iter().collect();
        let (_, grad) = self.loss_and_grad(&batch);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = S::lit(step);
        let mut out = Vec::new();
        for block in ParamBlock::ALL {
            let len = self.params.block(block).len();
            let mut worst = 0.0f64;
            let checked = samples.min(len);
            for _ in 0..checked {
                let k = rng.gen_range(0..len);
                let orig = self.params.block(block)[k];
                self.params.block_mut(block)[k] = orig + step;
                let (up, _) = self.loss_and_grad(&batch);
                self.params.block_mut(block)[k] = orig - step;
                let (down, _) = self.loss_and_grad(&batch);
                self.params.block_mut(block)[k] = orig;
                let numeric = ((up - down) / (step + step)).as_f64();
                let analytic = grad.block(block)[k].as_f64();
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
            out.push(GradientCheck { block, checked, max_relative_error: worst });
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let flat = |b: ParamBlock| self.params.block(b).iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            context: self.context,
            source_window: self.source_window,
            words: self.words.clone(),
            unigram: self.unigram.iter().map(|v| v.as_f64()).collect(),
            target_embedding: flat(ParamBlock::TargetEmbedding),
            source_embedding: flat(ParamBlock::SourceEmbedding),
            hidden_weights: flat(ParamBlock::HiddenWeights),
            hidden_bias: flat(ParamBlock::HiddenBias),
            output_weights: flat(ParamBlock::OutputWeights),
            output_bias: flat(ParamBlock::OutputBias),
            epoch_losses: self.epoch_losses.clone(),
        };
        let mut out = BufWriter::new(std::fs::File::create(path).map_err(|e| Error::file(path, e))?);
        serde_json::to_writer(&mut out, &file).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        out.flush()?;
        Ok(())
    }

    /// Loads a model, registering its words in `vocab`.
    pub fn read(path: &Path, vocab: &mut Vocabulary) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path).map_err(|e| Error::file(path, e))?);
        let f: ModelFile = serde_json::from_reader(reader).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let bad = |msg: String| Error::parse(path, 0, msg);
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(bad(format!("unsupported model `{}` version {}", f.format, f.version)));
        }
        let rows = f.words.len();
        let (e, h) = (f.embedding_dim, f.hidden_dim);
        let input = (f.context + f.source_window) * e;
        let source_rows = if f.source_window > 0 { rows } else { 0 };
        let matrix = |v: Vec<f64>, shape: (usize, usize), name: &str| {
            Array2::from_shape_vec(shape, v.into_iter().map(S::lit).collect())
                .map_err(|_| bad(format!("{name} has the wrong size")))
        };
        let vector = |v: Vec<f64>, len: usize, name: &str| {
            if v.len() == len {
                Ok(Array1::from_vec(v.into_iter().map(S::lit).collect()))
            } else {
                Err(bad(format!("{name} has the wrong size")))
            }
        };
        if f.context == 0 || rows <= TokenId::UNK.index() {
            return Err(bad("model has no context or no vocabulary".into()));
        }
        let params = Params {
            target_embed: matrix(f.target_embedding, (rows, e), "target embedding")?,
            source_embed: matrix(f.source_embedding, (source_rows, e), "source embedding")?,
            w1: matrix(f.hidden_weights, (h, input), "hidden weights")?,
            b1: vector(f.hidden_bias, h, "hidden bias")?,
            w2: matrix(f.output_weights, (rows, h), "output weights")?,
            b2: vector(f.output_bias, rows, "output bias")?,
        };
        let unigram = vector(f.unigram, rows, "unigram weights")?;
        let ids: Vec<TokenId> = f.words.iter().map(|w| vocab.intern(w)).collect();
        let mut lookup = vec![TokenId::UNK.0; vocab.len()];
        for (row, id) in ids.iter().enumerate() {
            lookup[id.index()] = row as u32;
        }
        Ok(FeedForwardLm {
            context: f.context,
            source_window: f.source_window,
            embedding_dim: e,
            hidden_dim: h,
            words: f.words,
            lookup,
            unigram,
            params,
            epoch_losses: f.epoch_losses,
            cache: Mutex::new(FxHashMap::default()),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    embedding_dim: usize,
    hidden_dim: usize,
    context: usize,
    source_window: usize,
    words: Vec<String>,
    unigram: Vec<f64>,
    target_embedding: Vec<f64>,
    source_embedding: Vec<f64>,
    hidden_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: Vec<f64>,
    epoch_losses: Vec<f64>,
}

impl<S: Scalar> LanguageModel<S> for FeedForwardLm<S> {
    fn context_len(&self) -> usize {
        self.context
    }

    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        self.fflm_logprob(word, history)
    }

    fn logprob_with_source(&self, word: TokenId, history: &[TokenId], source: &[TokenId], position: usize) -> S {
        self.nnjm_logprob(word, history, source, position)
    }

    fn uses_source(&self) -> bool {
        self.source_window > 0
    }
}
