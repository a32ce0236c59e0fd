//! Phrase-based noisy-channel correction of speech recognizer output.
//!
//! The recognizer is treated as a channel that corrupts clean transcripts.
//! From parallel (hypothesis, reference) text the crate learns word
//! alignments, a phrase translation table and language models, combines
//! them in a log-linear decoder whose weights are tuned by minimum error
//! rate training, and scores the result with WER and BLEU.
//!
//! Numeric components are generic over [`Scalar`]; the aliases at the crate
//! root fix the scalar to `f64`.

pub mod align;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod lm;
pub mod mert;
pub mod neural;
pub mod ngram;
pub mod num;
pub mod phrase;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
pub use num::Scalar;

/// Double-precision instantiations of the generic model types.
pub type LexicalTable = align::LexicalTable<f64>;
pub type AlignedCorpus = align::AlignedCorpus<f64>;
pub type PhraseTable = phrase::PhraseTable<f64>;
pub type NGramModel = ngram::NGramModel<f64>;
pub type FeedForwardLm = neural::FeedForwardLm<f64>;
pub type ModelWeights = decoder::ModelWeights<f64>;
pub type DecodeResult = decoder::DecodeResult<f64>;
pub type MertOutcome = mert::MertOutcome<f64>;
pub type Models = pipeline::Models<f64>;
pub type TrainedLm = pipeline::TrainedLm<f64>;
