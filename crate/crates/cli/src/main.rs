//! Command-line front end for asr-repair.
//!
//! Every subcommand reads and writes only the files named on its command
//! line. Failures print one `error[CODE]: message` line to stderr and exit
//! with the status of the error category.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asr_repair::align::{align_corpus, em_ibm1, AlignmentMatrix, Direction, Heuristic};
use asr_repair::corpus::{
    corrupt, load_parallel, load_text, write_sentences, CleaningPolicy, ConfusionChannel, TokenId, Vocabulary,
};
use asr_repair::decoder::{decode_batch, DecoderParams, ModelWeights, FEATURE_NAMES, NUM_FEATURES};
use asr_repair::eval::{bleu, corpus_wer, split_analysis, BLEU_ORDER};
use asr_repair::mert::{mert_optimize, Criterion, MertConfig};
use asr_repair::neural::{train_fflm, train_nnjm, FeedForwardLm, NeuralConfig};
use asr_repair::ngram::{train_ngram, NGramModel, Smoothing};
use asr_repair::phrase::{build_phrase_table, PhraseTable};
use asr_repair::pipeline::{run_pipeline, PipelineConfig, Preset, TrainedLm};
use asr_repair::synthetic::{generate_sentences, synthetic_channel};
use asr_repair::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asr-repair", version, about = "Phrase-based correction of speech recognizer output")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParallelInput {
    /// Noisy (recognizer) side, one sentence per line.
    #[arg(long)]
    noisy: PathBuf,
    /// Clean (reference) side, one sentence per line.
    #[arg(long)]
    clean: PathBuf,
    /// Noisy lines per clean line.
    #[arg(long, default_value_t = 1)]
    nbest: usize,
}

#[derive(Args)]
struct DecodeOptions {
    #[arg(long, default_value_t = 100)]
    beam: usize,
    #[arg(long, default_value_t = 6)]
    distortion_limit: usize,
    #[arg(long, default_value_t = 7)]
    max_phrase_len: usize,
    /// Disable reordering.
    #[arg(long)]
    monotone: bool,
    /// Candidates kept per noisy phrase.
    #[arg(long, default_value_t = 20)]
    max_candidates: usize,
}

impl DecodeOptions {
    fn params(&self, nbest: usize) -> DecoderParams {
        DecoderParams {
            beam_size: self.beam,
            nbest_size: nbest,
            distortion_limit: self.distortion_limit,
            max_phrase_len: self.max_phrase_len,
            monotone: self.monotone,
            max_candidates: self.max_candidates,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Word-align a parallel corpus and write Pharaoh-format links.
    Align {
        #[command(flatten)]
        input: ParallelInput,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        /// intersection, grow-diag or grow-diag-final
        #[arg(long, default_value = "grow-diag-final")]
        heuristic: String,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Extract and score a phrase table from aligned text.
    Phrases {
        #[command(flatten)]
        input: ParallelInput,
        /// Pharaoh alignments, one line per sentence pair.
        #[arg(long)]
        alignments: PathBuf,
        /// EM iterations for the lexical weights.
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 7)]
        max_phrase_len: usize,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train an n-gram LM and write it in ARPA format.
    Lm {
        #[arg(long)]
        text: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// mle or witten-bell
        #[arg(long, default_value = "witten-bell")]
        smoothing: String,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train a feed-forward neural LM; with --source, a joint model.
    Nnlm {
        /// Clean text.
        #[arg(long)]
        text: PathBuf,
        /// Noisy text line-aligned with --text.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        context: usize,
        #[arg(long, default_value_t = 4)]
        source_window: usize,
        #[arg(long, default_value_t = 150)]
        embedding_dim: usize,
        #[arg(long, default_value_t = 750)]
        hidden_dim: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Correct noisy text.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phrase_table: PathBuf,
        /// ARPA or neural model file.
        #[arg(long)]
        lm: PathBuf,
        /// Weights file; uniform weights when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        options: DecodeOptions,
        /// Hypotheses per sentence written to --nbest-output.
        #[arg(long, default_value_t = 1)]
        nbest: usize,
        #[arg(long)]
        nbest_output: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Tune log-linear weights on a dev set.
    Mert {
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        phrase_table: PathBuf,
        #[arg(long)]
        lm: PathBuf,
        /// Starting weights; uniform when absent.
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        options: DecodeOptions,
        /// W (word error rate) or B (BLEU)
        #[arg(long, default_value = "W")]
        criterion: String,
        #[arg(long, default_value_t = 100)]
        nbest: usize,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 8)]
        random_directions: usize,
        #[arg(long, default_value_t = 1)]
        random_restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Feature names whose weight stays fixed.
        #[arg(long, value_delimiter = ',')]
        freeze: Vec<String>,
        /// Per-step CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Corpus WER and BLEU of hypotheses against references.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Per-sentence WER CSV.
        #[arg(long)]
        details: Option<PathBuf>,
    },
    /// Length-binned split analysis of a system against a baseline.
    Analyze {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Smallest length bin reported.
        #[arg(long, default_value_t = 5)]
        min_population: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Corrupt clean text through a confusion channel.
    Corrupt {
        /// Clean text to corrupt.
        #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
        clean: Option<PathBuf>,
        /// Generate this many clean sentences from the built-in grammar.
        #[arg(long)]
        generate: Option<usize>,
        /// `clean TAB noisy TAB probability` rules; the built-in channel when absent.
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output_noisy: PathBuf,
        /// Where to write the clean side of kept pairs.
        #[arg(long)]
        output_clean: PathBuf,
    },
    /// Run every stage from a configuration file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Named preset applied over the file, e.g. word-baseline.
        #[arg(long)]
        preset: Option<String>,
    },
}

/// Rejects missing input files as configuration errors.
fn input(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Config(format!("input file {} does not exist", path.display())))
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::File { path: path.to_owned(), source: e })
}

fn load_parallel_input(p: &ParallelInput) -> Result<asr_repair::corpus::ParallelCorpus> {
    load_parallel(input(&p.noisy)?, input(&p.clean)?, p.nbest, &CleaningPolicy::default())
}

fn encode_file(path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Vec<TokenId>>> {
    Ok(load_text(input(path)?, &CleaningPolicy::default())?
        .iter()
        .map(|s| vocab.encode(s))
        .collect())
}

fn load_models(table: &Path, lm: &Path, vocab: &mut Vocabulary) -> Result<(PhraseTable, TrainedLm)> {
    let table = PhraseTable::read(input(table)?, vocab)?;
    let lm = TrainedLm::read(input(lm)?, vocab)?;
    Ok((table, lm))
}

fn load_weights(path: Option<&PathBuf>) -> Result<ModelWeights> {
    match path {
        Some(p) => ModelWeights::load(input(p)?),
        None => Ok(ModelWeights::uniform()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Align { input: data, iterations, heuristic, output } => {
            let heuristic: Heuristic = heuristic.parse()?;
            let corpus = load_parallel_input(&data)?;
            let aligned = align_corpus::<f64>(&corpus, iterations, heuristic)?;
            let mut out = create(&output)?;
            for a in &aligned.alignments {
                writeln!(out, "{}", a.to_pharaoh())?;
            }
            out.flush()?;
        }
        Command::Phrases { input: data, alignments, iterations, max_phrase_len, output } => {
            let corpus = load_parallel_input(&data)?;
            let lines = fs::read_to_string(input(&alignments)?)
                .map_err(|e| Error::File { path: alignments.clone(), source: e })?;
            let lines: Vec<&str> = lines.lines().collect();
            if lines.len() != corpus.len() {
                return Err(Error::LineCount { found: lines.len(), expected: corpus.len() });
            }
            let matrices = corpus
                .pairs
                .iter()
                .zip(&lines)
                .enumerate()
                .map(|(k, (pair, line))| {
                    AlignmentMatrix::parse_pharaoh(line, pair.noisy.len(), pair.clean.len()).map_err(|e| Error::Parse {
                        path: alignments.clone(),
                        line: k + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let c2n = em_ibm1::<f64>(&corpus, Direction::CleanToNoisy, iterations)?;
            let n2c = em_ibm1::<f64>(&corpus, Direction::NoisyToClean, iterations)?;
            let table = build_phrase_table(&corpus, &matrices, &c2n, &n2c, max_phrase_len)?;
            table.write(&output, &corpus.vocab)?;
        }
        Command::Lm { text, order, smoothing, output } => {
            let smoothing: Smoothing = smoothing.parse()?;
            let mut vocab = Vocabulary::new();
            let text = encode_file(&text, &mut vocab)?;
            let text: Vec<Vec<TokenId>> = text.into_iter().filter(|s| !s.is_empty()).collect();
            let model: NGramModel = train_ngram(&text, order, smoothing)?;
            model.write_arpa(&output, &vocab)?;
        }
        Command::Nnlm {
            text,
            source,
            context,
            source_window,
            embedding_dim,
            hidden_dim,
            epochs,
            learning_rate,
            batch_size,
            seed,
            output,
        } => {
            let mut config = NeuralConfig {
                embedding_dim,
                hidden_dim,
                context,
                source_window: 0,
                learning_rate,
                batch_size,
                epochs,
                seed,
                ..Default::default()
            };
            let model: FeedForwardLm = match source {
                None => {
                    let mut vocab = Vocabulary::new();
                    let clean = encode_file(&text, &mut vocab)?;
                    let clean: Vec<_> = clean.into_iter().filter(|s| !s.is_empty()).collect();
                    train_fflm(&clean, &vocab, &config)?
                }
                Some(src) => {
                    config.source_window = source_window;
                    let corpus = load_parallel(input(&src)?, input(&text)?, 1, &CleaningPolicy::default())?;
                    train_nnjm(&corpus.noisy_sentences(), &corpus.clean_sentences(), &corpus.vocab, &config)?
                }
            };
            model.write(&output)?;
        }
        Command::Decode { input: file, phrase_table, lm, weights, options, nbest, nbest_output, output } => {
            let mut vocab = Vocabulary::new();
            let (table, lm) = load_models(&phrase_table, &lm, &mut vocab)?;
            let weights = load_weights(weights.as_ref())?;
            let sentences = encode_file(&file, &mut vocab)?;
            let params = options.params(nbest);
            params.validate()?;
            let results = decode_batch(&sentences, &table, &lm, &weights, &params);
            write_sentences(&output, &vocab, results.iter().map(|r| &r.best[..]))?;
            if let Some(path) = nbest_output {
                let mut out = create(&path)?;
                for (k, r) in results.iter().enumerate() {
                    r.write_nbest(&mut out, k, &vocab)?;
                }
                out.flush()?;
            }
        }
        Command::Mert {
            noisy,
            clean,
            phrase_table,
            lm,
            init,
            options,
            criterion,
            nbest,
            iterations,
            random_directions,
            random_restarts,
            seed,
            freeze,
            log,
            output,
        } => {
            let criterion: Criterion = criterion.parse()?;
            let mut frozen = [false; NUM_FEATURES];
            for name in &freeze {
                let k = FEATURE_NAMES
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| Error::Config(format!("unknown feature '{name}'")))?;
                frozen[k] = true;
            }
            let mut vocab = Vocabulary::new();
            let (table, lm) = load_models(&phrase_table, &lm, &mut vocab)?;
            let init = load_weights(init.as_ref())?;
            let dev = load_parallel(input(&noisy)?, input(&clean)?, 1, &CleaningPolicy::default())?;
            // re-encode into the model vocabulary
            let encode = |side: Vec<Vec<TokenId>>, vocab: &mut Vocabulary| -> Vec<Vec<TokenId>> {
                side.iter().map(|s| vocab.encode(&dev.vocab.decode(s))).collect()
            };
            let dev_noisy = encode(dev.noisy_sentences(), &mut vocab);
            let dev_clean = encode(dev.clean_sentences(), &mut vocab);
            let params = options.params(1);
            params.validate()?;
            let config = MertConfig {
                nbest_size: nbest,
                max_iterations: iterations,
                random_directions,
                random_restarts,
                seed,
                criterion,
                frozen,
                ..Default::default()
            };
            let outcome = mert_optimize(&dev_noisy, &dev_clean, &table, &lm, &init, &params, &config)?;
            outcome.weights.save(&output)?;
            if let Some(path) = log {
                outcome.write_log(&path)?;
            }
            println!("dev error {:.6} -> {:.6}", outcome.initial_error, outcome.final_error);
        }
        Command::Score { hyp, reference, details } => {
            let mut vocab = Vocabulary::new();
            let hyps = encode_file(&hyp, &mut vocab)?;
            let refs = encode_file(&reference, &mut vocab)?;
            let w = corpus_wer(&hyps, &refs)?;
            let b = bleu(&hyps, &refs, BLEU_ORDER)?;
            println!("sentences {}", refs.len());
            println!("WER {:.2}", 100.0 * w.wer());
            println!("BLEU {:.2}", b.bleu);
            if let Some(path) = details {
                let mut out = create(&path)?;
                w.write_csv(&mut out)?;
                out.flush()?;
            }
        }
        Command::Analyze { baseline, system, reference, min_population, output } => {
            let mut vocab = Vocabulary::new();
            let base = encode_file(&baseline, &mut vocab)?;
            let sys = encode_file(&system, &mut vocab)?;
            let refs = encode_file(&reference, &mut vocab)?;
            let split = split_analysis(&base, &sys, &refs, min_population)?;
            match output {
                Some(path) => {
                    let mut out = create(&path)?;
                    split.write_csv(&mut out)?;
                    out.flush()?;
                }
                None => split.write_csv(&mut std::io::stdout().lock())?,
            }
            println!("top-good mean delta {:.6}", split.top_delta);
            println!("bottom-bad mean delta {:.6}", split.bottom_delta);
        }
        Command::Corrupt { clean, generate, channel, seed, output_noisy, output_clean } => {
            let channel = match channel {
                Some(p) => ConfusionChannel::load(input(&p)?)?,
                None => synthetic_channel(),
            };
            let sentences = match (clean, generate) {
                (Some(p), _) => load_text(input(&p)?, &CleaningPolicy::default())?,
                (None, Some(n)) => generate_sentences(n, seed),
                (None, None) => return Err(Error::Config("give --clean or --generate".into())),
            };
            let corpus = corrupt(&sentences, &channel, seed);
            corpus.write(&output_noisy, &output_clean)?;
        }
        Command::Pipeline { config, preset } => {
            let mut config = PipelineConfig::load(input(&config)?)?;
            if let Some(p) = preset {
                config.settings.apply_preset(p.parse::<Preset>()?);
            }
            if cli.threads != 0 {
                config.settings.threads = cli.threads;
            }
            let summary = run_pipeline(&config)?;
            summary.write_csv(&mut std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads != 0 {
        // a second initialization only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e);
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
