//! End-to-end training and evaluation driven by an INI configuration.
//!
//! ```ini
//! [data]
//! train_noisy = train.noisy
//! train_clean = train.clean
//! dev_noisy = dev.noisy
//! dev_clean = dev.clean
//! test_noisy = test.noisy
//! test_clean = test.clean
//!
//! [output]
//! dir = work
//!
//! [model]
//! lm_type = witten-bell
//! lm_order = 3
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.
//! Every key is optional except the six data paths and the output dir.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::align::{align_corpus, AlignedCorpus, Heuristic};
use crate::corpus::{load_text, CleaningPolicy, ParallelCorpus, TokenId, Vocabulary};
use crate::decoder::{decode_batch, DecoderParams, ModelWeights, F_WORD_PENALTY, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::eval::{bleu, corpus_wer, split_analysis, SplitAnalysis, BLEU_ORDER, DEFAULT_MIN_BIN_POPULATION};
use crate::lm::LanguageModel;
use crate::mert::{mert_optimize, MertConfig, MertOutcome};
use crate::neural::{train_fflm, train_nnjm, FeedForwardLm, NeuralConfig};
use crate::ngram::{train_ngram, NGramModel, Smoothing};
use crate::num::Scalar;
use crate::phrase::{build_phrase_table, PhraseTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmType {
    Mle,
    WittenBell,
    Fflm,
    Nnjm,
}

impl FromStr for LmType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(LmType::Mle),
            "witten-bell" | "wb" => Ok(LmType::WittenBell),
            "fflm" => Ok(LmType::Fflm),
            "nnjm" => Ok(LmType::Nnjm),
            other => Err(Error::Config(format!("unknown LM type '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Single-word phrases, bigram LM, monotone, no word penalty.
    WordBaseline,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-baseline" => Ok(Preset::WordBaseline),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Everything except file locations.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub max_phrase_len: usize,
    pub align_iterations: usize,
    pub heuristic: Heuristic,
    pub lm_type: LmType,
    pub lm_order: usize,
    pub neural: NeuralConfig,
    pub decoder: DecoderParams,
    /// When false the word penalty weight is fixed at 0.
    pub word_penalty: bool,
    pub mert_enabled: bool,
    pub mert: MertConfig,
    /// Hypotheses per noisy line in the training files.
    pub nbest: usize,
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_phrase_len: crate::phrase::DEFAULT_MAX_PHRASE_LEN,
            align_iterations: 5,
            heuristic: Heuristic::GrowDiagFinal,
            lm_type: LmType::WittenBell,
            lm_order: 3,
            neural: NeuralConfig::default(),
            decoder: DecoderParams::default(),
            word_penalty: true,
            mert_enabled: true,
            mert: MertConfig::default(),
            nbest: 1,
            seed: 1,
            threads: 0,
        }
    }
}

impl Settings {
    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::WordBaseline => {
                self.max_phrase_len = 1;
                self.decoder.max_phrase_len = 1;
                self.lm_order = 2;
                self.decoder.monotone = true;
                self.word_penalty = false;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.max_phrase_len == 0 {
            return bad("max phrase length must be at least 1");
        }
        self.decoder.validate()?;
        if self.lm_order == 0 {
            return bad("LM order must be at least 1");
        }
        if self.mert.nbest_size == 0 {
            return bad("MERT n-best size must be at least 1");
        }
        if self.nbest == 0 {
            return bad("nbest must be at least 1");
        }
        if matches!(self.lm_type, LmType::Fflm | LmType::Nnjm) {
            self.neural_config().validate()?;
        }
        Ok(())
    }

    /// Neural settings for the configured LM type. An NNJM with no source
    /// window gets the default window of 4.
    pub fn neural_config(&self) -> NeuralConfig {
        let window = match (self.lm_type, self.neural.source_window) {
            (LmType::Nnjm, 0) => NeuralConfig::nnjm().source_window,
            (LmType::Nnjm, w) => w,
            _ => 0,
        };
        NeuralConfig {
            source_window: window,
            seed: self.seed,
            ..self.neural
        }
    }

    pub fn mert_config(&self) -> MertConfig {
        let mut frozen = [false; NUM_FEATURES];
        frozen[F_WORD_PENALTY] = !self.word_penalty;
        MertConfig { seed: self.seed, frozen, ..self.mert }
    }

    /// Uniform weights, with the word penalty off when disabled.
    pub fn initial_weights<S: Scalar>(&self) -> ModelWeights<S> {
        let mut w = ModelWeights::uniform();
        if !self.word_penalty {
            w.0[F_WORD_PENALTY] = S::zero();
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataPaths {
    pub train_noisy: PathBuf,
    pub train_clean: PathBuf,
    pub dev_noisy: PathBuf,
    pub dev_clean: PathBuf,
    pub test_noisy: PathBuf,
    pub test_clean: PathBuf,
}

impl DataPaths {
    fn all(&self) -> [&PathBuf; 6] {
        [
            &self.train_noisy,
            &self.train_clean,
            &self.dev_noisy,
            &self.dev_clean,
            &self.test_noisy,
            &self.test_clean,
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub data: DataPaths,
    pub output_dir: PathBuf,
    pub settings: Settings,
}

fn value<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{raw}'")))
}

impl PipelineConfig {
    /// Parses the INI text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("configuration: {e}")))?;
        let mut s = Settings::default();
        let mut paths: [Option<PathBuf>; 7] = Default::default();
        let mut preset = None;
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, raw) in props.iter() {
                let path = || Some(base.join(raw.trim()));
                match (section, key) {
                    ("data", "train_noisy") => paths[0] = path(),
                    ("data", "train_clean") => paths[1] = path(),
                    ("data", "dev_noisy") => paths[2] = path(),
                    ("data", "dev_clean") => paths[3] = path(),
                    ("data", "test_noisy") => paths[4] = path(),
                    ("data", "test_clean") => paths[5] = path(),
                    ("data", "nbest") => s.nbest = value(section, key, raw)?,
                    ("output", "dir") => paths[6] = path(),
                    ("model", "max_phrase_len") => {
                        s.max_phrase_len = value(section, key, raw)?;
                        s.decoder.max_phrase_len = s.max_phrase_len;
                    }
                    ("model", "align_iterations") => s.align_iterations = value(section, key, raw)?,
                    ("model", "heuristic") => s.heuristic = raw.trim().parse()?,
                    ("model", "lm_type") => s.lm_type = raw.trim().parse()?,
                    ("model", "lm_order") => s.lm_order = value(section, key, raw)?,
                    ("neural", "context") => s.neural.context = value(section, key, raw)?,
                    ("neural", "embedding_dim") => s.neural.embedding_dim = value(section, key, raw)?,
                    ("neural", "hidden_dim") => s.neural.hidden_dim = value(section, key, raw)?,
                    ("neural", "source_window") => s.neural.source_window = value(section, key, raw)?,
                    ("neural", "epochs") => s.neural.epochs = value(section, key, raw)?,
                    ("neural", "learning_rate") => s.neural.learning_rate = value(section, key, raw)?,
                    ("neural", "batch_size") => s.neural.batch_size = value(section, key, raw)?,
                    ("neural", "init_range") => s.neural.init_range = value(section, key, raw)?,
                    ("decoder", "beam_size") => s.decoder.beam_size = value(section, key, raw)?,
                    ("decoder", "nbest_size") => s.decoder.nbest_size = value(section, key, raw)?,
                    ("decoder", "distortion_limit") => s.decoder.distortion_limit = value(section, key, raw)?,
                    ("decoder", "monotone") => s.decoder.monotone = value(section, key, raw)?,
                    ("decoder", "max_candidates") => s.decoder.max_candidates = value(section, key, raw)?,
                    ("decoder", "word_penalty") => s.word_penalty = value(section, key, raw)?,
                    ("mert", "enabled") => s.mert_enabled = value(section, key, raw)?,
                    ("mert", "criterion") => s.mert.criterion = raw.trim().parse()?,
                    ("mert", "nbest_size") => s.mert.nbest_size = value(section, key, raw)?,
                    ("mert", "max_iterations") => s.mert.max_iterations = value(section, key, raw)?,
                    ("mert", "random_directions") => s.mert.random_directions = value(section, key, raw)?,
                    ("mert", "random_restarts") => s.mert.random_restarts = value(section, key, raw)?,
                    ("run", "seed") => s.seed = value(section, key, raw)?,
                    ("run", "threads") => s.threads = value(section, key, raw)?,
                    ("run", "preset") => preset = Some(raw.trim().parse::<Preset>()?),
                    _ => return Err(Error::Config(format!("unknown configuration key [{section}] {key}"))),
                }
            }
        }
        if let Some(p) = preset {
            s.apply_preset(p);
        }
        const NAMES: [&str; 7] =
            ["train_noisy", "train_clean", "dev_noisy", "dev_clean", "test_noisy", "test_clean", "output dir"];
        let [a, b, c, d, e, f, out] = paths;
        let take = |p: Option<PathBuf>, k: usize| {
            p.ok_or_else(|| Error::Config(format!("configuration is missing {}", NAMES[k])))
        };
        Ok(PipelineConfig {
            data: DataPaths {
                train_noisy: take(a, 0)?,
                train_clean: take(b, 1)?,
                dev_noisy: take(c, 2)?,
                dev_clean: take(d, 3)?,
                test_noisy: take(e, 4)?,
                test_clean: take(f, 5)?,
            },
            output_dir: take(out, 6)?,
            settings: s,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Checks ranges and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        for p in self.data.all() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// An n-gram or neural LM behind one type.
#[derive(Debug)]
pub enum TrainedLm<S: Scalar = f64> {
    NGram(NGramModel<S>),
    Neural(Box<FeedForwardLm<S>>),
}

impl<S: Scalar> TrainedLm<S> {
    /// Writes `lm.arpa` or `lm.json` into `dir`; returns the path.
    pub fn write(&self, dir: &Path, vocab: &Vocabulary) -> Result<PathBuf> {
        match self {
            TrainedLm::NGram(m) => {
                let p = dir.join("lm.arpa");
                m.write_arpa(&p, vocab)?;
                Ok(p)
            }
            TrainedLm::Neural(m) => {
                let p = dir.join("lm.json");
                m.write(&p)?;
                Ok(p)
            }
        }
    }

    /// Loads either format, telling them apart by the first byte.
    pub fn read(path: &Path, vocab: &mut Vocabulary) -> Result<Self> {
        let head = fs::read(path).map_err(|e| Error::file(path, e))?;
        match head.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') => Ok(TrainedLm::Neural(Box::new(FeedForwardLm::read(path, vocab)?))),
            _ => Ok(TrainedLm::NGram(NGramModel::read_arpa(path, vocab)?)),
        }
    }
}

impl<S: Scalar> LanguageModel<S> for TrainedLm<S> {
    fn context_len(&self) -> usize {
        match self {
            TrainedLm::NGram(m) => m.context_len(),
            TrainedLm::Neural(m) => LanguageModel::<S>::context_len(&**m),
        }
    }

    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        match self {
            TrainedLm::NGram(m) => m.logprob(word, history),
            TrainedLm::Neural(m) => m.logprob(word, history),
        }
    }

    fn logprob_with_source(&self, word: TokenId, history: &[TokenId], source: &[TokenId], position: usize) -> S {
        match self {
            TrainedLm::NGram(m) => m.logprob_with_source(word, history, source, position),
            TrainedLm::Neural(m) => m.logprob_with_source(word, history, source, position),
        }
    }

    fn uses_source(&self) -> bool {
        match self {
            TrainedLm::NGram(m) => LanguageModel::<S>::uses_source(m),
            TrainedLm::Neural(m) => LanguageModel::<S>::uses_source(&**m),
        }
    }
}

pub fn train_lm<S: Scalar>(train: &ParallelCorpus, settings: &Settings) -> Result<TrainedLm<S>> {
    let clean = train.clean_sentences();
    Ok(match settings.lm_type {
        LmType::Mle => TrainedLm::NGram(train_ngram(&clean, settings.lm_order, Smoothing::Mle)?),
        LmType::WittenBell => TrainedLm::NGram(train_ngram(&clean, settings.lm_order, Smoothing::WittenBell)?),
        LmType::Fflm => TrainedLm::Neural(Box::new(train_fflm(&clean, &train.vocab, &settings.neural_config())?)),
        LmType::Nnjm => TrainedLm::Neural(Box::new(train_nnjm(
            &train.noisy_sentences(),
            &clean,
            &train.vocab,
            &settings.neural_config(),
        )?)),
    })
}

/// Phrase table and language model.
#[derive(Debug)]
pub struct Models<S: Scalar = f64> {
    pub table: PhraseTable<S>,
    pub lm: TrainedLm<S>,
}

/// Aligns the training corpus, extracts the phrase table and trains the LM.
pub fn train_models<S: Scalar>(train: &ParallelCorpus, settings: &Settings) -> Result<(AlignedCorpus<S>, Models<S>)> {
    settings.validate()?;
    let aligned = align_corpus::<S>(train, settings.align_iterations, settings.heuristic)?;
    let table = build_phrase_table(
        train,
        &aligned.alignments,
        &aligned.clean_to_noisy,
        &aligned.noisy_to_clean,
        settings.max_phrase_len,
    )?;
    let lm = train_lm(train, settings)?;
    Ok((aligned, Models { table, lm }))
}

/// 1-best corrections of `sentences`.
pub fn correct<S: Scalar>(
    models: &Models<S>,
    weights: &ModelWeights<S>,
    params: &DecoderParams,
    sentences: &[Vec<TokenId>],
) -> Vec<Vec<TokenId>> {
    let params = DecoderParams { nbest_size: 1, ..*params };
    decode_batch(sentences, &models.table, &models.lm, weights, &params)
        .into_iter()
        .map(|r| r.best)
        .collect()
}

/// Runs MERT on the dev corpus from the configured initial weights.
pub fn tune<S: Scalar>(models: &Models<S>, dev: &ParallelCorpus, settings: &Settings) -> Result<MertOutcome<S>> {
    mert_optimize(
        &dev.noisy_sentences(),
        &dev.clean_sentences(),
        &models.table,
        &models.lm,
        &settings.initial_weights(),
        &settings.decoder,
        &settings.mert_config(),
    )
}

/// WER (fraction) and BLEU (0–100) of the raw input and two corrections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetScores {
    pub sentences: usize,
    pub noisy_wer: f64,
    pub untuned_wer: f64,
    pub tuned_wer: f64,
    pub noisy_bleu: f64,
    pub untuned_bleu: f64,
    pub tuned_bleu: f64,
}

pub fn score_set(
    noisy: &[Vec<TokenId>],
    untuned: &[Vec<TokenId>],
    tuned: &[Vec<TokenId>],
    refs: &[Vec<TokenId>],
) -> Result<SetScores> {
    let w = |h: &[Vec<TokenId>]| corpus_wer(h, refs).map(|r| r.wer());
    let b = |h: &[Vec<TokenId>]| bleu(h, refs, BLEU_ORDER).map(|r| r.bleu);
    Ok(SetScores {
        sentences: refs.len(),
        noisy_wer: w(noisy)?,
        untuned_wer: w(untuned)?,
        tuned_wer: w(tuned)?,
        noisy_bleu: b(noisy)?,
        untuned_bleu: b(untuned)?,
        tuned_bleu: b(tuned)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub dev: SetScores,
    pub test: SetScores,
    pub weights: ModelWeights<f64>,
    pub split: SplitAnalysis,
}

impl Summary {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "set,sentences,noisy_wer,untuned_wer,tuned_wer,noisy_bleu,untuned_bleu,tuned_bleu")?;
        for (name, s) in [("dev", &self.dev), ("test", &self.test)] {
            writeln!(
                out,
                "{name},{},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4}",
                s.sentences, s.noisy_wer, s.untuned_wer, s.tuned_wer, s.noisy_bleu, s.untuned_bleu, s.tuned_bleu
            )?;
        }
        Ok(())
    }
}

fn load_into(noisy: &Path, clean: &Path, nbest: usize, vocab: Vocabulary) -> Result<ParallelCorpus> {
    let policy = CleaningPolicy::default();
    let n = load_text(noisy, &policy)?;
    let c = load_text(clean, &policy)?;
    if n.len() != c.len() * nbest {
        return Err(Error::LineCount { found: n.len(), expected: c.len() * nbest });
    }
    let mut corpus = ParallelCorpus::new(vocab);
    for (k, tokens) in n.iter().enumerate() {
        corpus.push_tokens(tokens, &c[k / nbest]);
    }
    Ok(corpus)
}

/// Loads train, dev and test into one vocabulary id space.
pub fn load_data(paths: &DataPaths, nbest: usize) -> Result<(ParallelCorpus, ParallelCorpus, ParallelCorpus)> {
    let mut train = load_into(&paths.train_noisy, &paths.train_clean, nbest, Vocabulary::new())?;
    let mut dev = load_into(&paths.dev_noisy, &paths.dev_clean, 1, train.vocab.clone())?;
    let test = load_into(&paths.test_noisy, &paths.test_clean, 1, dev.vocab.clone())?;
    // ids are append-only, so the last vocabulary covers all three sets
    train.vocab = test.vocab.clone();
    dev.vocab = test.vocab.clone();
    if train.is_empty() || dev.is_empty() || test.is_empty() {
        return Err(Error::Ingestion("train, dev and test must each keep at least one pair".into()));
    }
    Ok((train, dev, test))
}

fn write_text(path: &Path, vocab: &Vocabulary, sentences: &[Vec<TokenId>]) -> Result<()> {
    crate::corpus::write_sentences(path, vocab, sentences.iter().map(|s| &s[..]))
}

/// Runs every stage and writes its artifacts under the output dir:
/// `alignments.txt`, `phrase-table.txt`, `lm.arpa`/`lm.json`,
/// `weights.txt`, `mert.csv`, `dev.corrected`, `test.corrected`,
/// `split.csv` and `summary.csv`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Summary> {
    config.validate()?;
    let threads = config.settings.threads;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_stages(config))
}

fn run_stages(config: &PipelineConfig) -> Result<Summary> {
    let s = &config.settings;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let (train, dev, test) = load_data(&config.data, s.nbest)?;
    let vocab = &train.vocab;

    let (aligned, models) = train_models::<f64>(&train, s)?;
    let align_path = dir.join("alignments.txt");
    let mut out = std::io::BufWriter::new(fs::File::create(&align_path).map_err(|e| Error::file(&align_path, e))?);
    for a in &aligned.alignments {
        writeln!(out, "{}", a.to_pharaoh())?;
    }
    out.flush()?;
    models.table.write(&dir.join("phrase-table.txt"), vocab)?;
    models.lm.write(dir, vocab)?;

    let initial: ModelWeights = s.initial_weights();
    let weights = if s.mert_enabled {
        let outcome = tune(&models, &dev, s)?;
        outcome.write_log(&dir.join("mert.csv"))?;
        outcome.weights
    } else {
        initial
    };
    weights.save(&dir.join("weights.txt"))?;

    let mut scores = Vec::new();
    for (name, set) in [("dev", &dev), ("test", &test)] {
        let noisy = set.noisy_sentences();
        let refs = set.clean_sentences();
        let untuned = correct(&models, &initial, &s.decoder, &noisy);
        let tuned = if weights == initial { untuned.clone() } else { correct(&models, &weights, &s.decoder, &noisy) };
        write_text(&dir.join(format!("{name}.corrected")), vocab, &tuned)?;
        scores.push((score_set(&noisy, &untuned, &tuned, &refs)?, noisy, tuned, refs));
    }
    let (test_scores, test_noisy, test_tuned, test_refs) = scores.pop().expect("test scores");
    let (dev_scores, ..) = scores.pop().expect("dev scores");
    let split = split_analysis(&test_noisy, &test_tuned, &test_refs, DEFAULT_MIN_BIN_POPULATION)?;
    let split_path = dir.join("split.csv");
    let mut out = std::io::BufWriter::new(fs::File::create(&split_path).map_err(|e| Error::file(&split_path, e))?);
    split.write_csv(&mut out)?;
    out.flush()?;

    let summary = Summary { dev: dev_scores, test: test_scores, weights, split };
    let summary_path = dir.join("summary.csv");
    let mut out = std::io::BufWriter::new(fs::File::create(&summary_path).map_err(|e| Error::file(&summary_path, e))?);
    summary.write_csv(&mut out)?;
    out.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mert::Criterion;

    const MINIMAL: &str = "[data]\ntrain_noisy = a\ntrain_clean = b\ndev_noisy = c\ndev_clean = d\n\
                           test_noisy = e\ntest_clean = f\n[output]\ndir = out\n";

    #[test]
    fn parses_defaults_and_resolves_paths() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.data.train_noisy, Path::new("/base/a"));
        assert_eq!(c.output_dir, Path::new("/base/out"));
        assert_eq!(c.settings, Settings::default());
        assert_eq!(c.settings.max_phrase_len, 7);
        assert_eq!(c.settings.lm_order, 3);
    }

    #[test]
    fn parses_every_section() {
        let text = format!(
            "{MINIMAL}[model]\nlm_type = nnjm\nlm_order = 5\nmax_phrase_len = 3\n[decoder]\nbeam_size = 7\nmonotone = true\n\
             [mert]\ncriterion = B\nenabled = false\n[neural]\nhidden_dim = 20\n[run]\nseed = 9\nthreads = 2\n"
        );
        let s = PipelineConfig::parse(&text, Path::new(".")).unwrap().settings;
        assert_eq!(s.lm_type, LmType::Nnjm);
        assert_eq!(s.decoder.max_phrase_len, 3);
        assert_eq!(s.decoder.beam_size, 7);
        assert!(s.decoder.monotone);
        assert_eq!(s.mert.criterion, Criterion::Bleu);
        assert!(!s.mert_enabled);
        assert_eq!(s.neural_config().context, 4);
        assert_eq!(s.neural_config().source_window, 4);
        assert_eq!(s.neural_config().hidden_dim, 20);
        assert_eq!((s.seed, s.threads), (9, 2));
    }

    #[test]
    fn rejects_bad_configs() {
        let err = |text: &str| PipelineConfig::parse(text, Path::new(".")).unwrap_err();
        assert!(matches!(err("[data]\ntrain_noisy = a\n"), Error::Config(_)));
        assert!(matches!(err(&format!("{MINIMAL}[model]\nlm_order = x\n")), Error::Config(_)));
        assert!(matches!(err(&format!("{MINIMAL}[model]\ncolour = red\n")), Error::Config(_)));
        let c = PipelineConfig::parse(&format!("{MINIMAL}[model]\nlm_order = 0\n"), Path::new(".")).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = PipelineConfig::parse(MINIMAL, Path::new("/nonexistent")).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn word_baseline_preset() {
        let c = PipelineConfig::parse(&format!("{MINIMAL}[run]\npreset = word-baseline\n"), Path::new(".")).unwrap();
        let s = c.settings;
        assert_eq!((s.max_phrase_len, s.decoder.max_phrase_len, s.lm_order), (1, 1, 2));
        assert!(s.decoder.monotone && !s.word_penalty);
        assert_eq!(s.initial_weights::<f64>().0[F_WORD_PENALTY], 0.0);
        assert!(s.mert_config().frozen[F_WORD_PENALTY]);
    }
}
