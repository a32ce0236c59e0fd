//! Log-linear phrase decoder.
//!
//! A noisy sentence is segmented into phrases, each phrase is replaced by a
//! clean candidate from the phrase table, and derivations are scored with
//! the weighted sum of seven features: the four phrase table log
//! probabilities, the language model log probability, a word penalty
//! (−output length) and a linear distortion cost (−|jump|).

mod exhaustive;
mod search;
mod weights;

use std::io::Write;

use rayon::prelude::*;

pub use exhaustive::{exhaustive_decode, EXHAUSTIVE_MAX_LEN};
pub use search::decode;
pub use weights::{
    dot, FeatureVector, ModelWeights, FEATURE_NAMES, F_DISTORTION, F_LM, F_WORD_PENALTY,
    NUM_FEATURES,
};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::Result;
use crate::lm::LanguageModel;
use crate::num::Scalar;
use crate::phrase::{PhraseTable, NUM_PHRASE_FEATURES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderParams {
    /// Hypotheses kept per stack (histogram pruning).
    pub beam_size: usize,
    /// Distinct outputs returned.
    pub nbest_size: usize,
    /// Largest allowed |jump| between consecutive noisy phrases.
    pub distortion_limit: usize,
    pub max_phrase_len: usize,
    /// Only left-to-right phrase order.
    pub monotone: bool,
    /// Candidates considered per noisy phrase, best φ(clean|noisy) first.
    pub max_candidates: usize,
}

impl Default for DecoderParams {
    fn default() -> Self {
        DecoderParams {
            beam_size: 100,
            nbest_size: 1,
            distortion_limit: 6,
            max_phrase_len: crate::phrase::DEFAULT_MAX_PHRASE_LEN,
            monotone: false,
            max_candidates: 20,
        }
    }
}

impl DecoderParams {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.nbest_size == 0 || self.max_phrase_len == 0 || self.max_candidates == 0 {
            return Err(crate::Error::Config(
                "beam size, n-best size, phrase length and candidate limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One output with the features of its best derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis<S = f64> {
    pub clean: Vec<TokenId>,
    pub features: FeatureVector<S>,
    /// λ · features.
    pub score: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<S = f64> {
    pub best: Vec<TokenId>,
    /// Distinct outputs sorted by descending score.
    pub nbest: Vec<Hypothesis<S>>,
}

impl<S: Scalar> DecodeResult<S> {
    pub fn best_score(&self) -> S {
        self.nbest.first().map_or(S::neg_infinity(), |h| h.score)
    }

    /// Writes `id ||| clean tokens ||| f1 … f7 ||| score` lines.
    pub fn write_nbest<W: Write>(&self, out: &mut W, sentence_id: usize, vocab: &Vocabulary) -> Result<()> {
        for h in &self.nbest {
            let feats: Vec<String> = h.features.iter().map(|f| format!("{:.6}", f.as_f64())).collect();
            writeln!(
                out,
                "{sentence_id} ||| {} ||| {} ||| {:.6}",
                vocab.render(&h.clean),
                feats.join(" "),
                h.score.as_f64()
            )?;
        }
        Ok(())
    }
}

/// A scored replacement for the noisy span `start..end`.
#[derive(Clone, Debug)]
pub(crate) struct TranslationOption<'a, S> {
    pub start: usize,
    pub end: usize,
    pub clean: &'a [TokenId],
    pub channel: [S; NUM_PHRASE_FEATURES],
}

/// Options for every span, indexed by start position. Unknown single
/// tokens are copied through with zero channel features.
pub(crate) fn collect_options<'a, S: Scalar>(
    noisy: &'a [TokenId],
    table: &'a PhraseTable<S>,
    params: &DecoderParams,
) -> Vec<Vec<TranslationOption<'a, S>>> {
    let max_len = params.max_phrase_len.max(1);
    let mut options = vec![Vec::new(); noisy.len()];
    for start in 0..noisy.len() {
        for end in start + 1..=noisy.len().min(start + max_len) {
            let span = &noisy[start..end];
            let cands = table.get(span);
            for entry in cands.iter().take(params.max_candidates.max(1)) {
                options[start].push(TranslationOption {
                    start,
                    end,
                    clean: &entry.clean,
                    channel: entry.features,
                });
            }
            if end == start + 1 && cands.is_empty() {
                options[start].push(TranslationOption {
                    start,
                    end,
                    clean: &noisy[start..end],
                    channel: [S::zero(); NUM_PHRASE_FEATURES],
                });
            }
        }
    }
    options
}

/// Which positions are translated; bit k set when noisy token k is covered.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Coverage(Vec<u64>);

impl Coverage {
    pub fn new(len: usize) -> Self {
        Coverage(vec![0; len.div_ceil(64).max(1)])
    }

    pub fn is_set(&self, k: usize) -> bool {
        self.0[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn span_free(&self, start: usize, end: usize) -> bool {
        (start..end).all(|k| !self.is_set(k))
    }

    pub fn with_span(&self, start: usize, end: usize) -> Self {
        let mut c = self.clone();
        for k in start..end {
            c.0[k / 64] |= 1 << (k % 64);
        }
        c
    }

    pub fn first_gap(&self, len: usize) -> Option<usize> {
        (0..len).find(|&k| !self.is_set(k))
    }
}

/// Shared extension rules: the span must be free, the jump from the end of
/// the previous phrase must respect the monotone flag and the distortion
/// limit, and any gap left behind must stay reachable.
pub(crate) fn can_extend(
    coverage: &Coverage,
    next_start: usize,
    start: usize,
    end: usize,
    len: usize,
    params: &DecoderParams,
) -> bool {
    if !coverage.span_free(start, end) {
        return false;
    }
    if params.monotone {
        return start == next_start;
    }
    if start.abs_diff(next_start) > params.distortion_limit {
        return false;
    }
    match coverage.with_span(start, end).first_gap(len) {
        Some(gap) if gap < end => end.abs_diff(gap) <= params.distortion_limit,
        _ => true,
    }
}

/// Feature delta of applying `option` after a phrase ending at `next_start`
/// with LM history `history`; `history` is updated to the new LM state.
pub(crate) fn extension_features<S: Scalar, L: LanguageModel<S> + ?Sized>(
    option: &TranslationOption<'_, S>,
    next_start: usize,
    history: &mut Vec<TokenId>,
    noisy: &[TokenId],
    lm: &L,
) -> FeatureVector<S> {
    let mut f = [S::zero(); NUM_FEATURES];
    f[..NUM_PHRASE_FEATURES].copy_from_slice(&option.channel);
    let src_len = option.end - option.start;
    let tgt_len = option.clean.len();
    let mut lm_score = S::zero();
    for (k, &w) in option.clean.iter().enumerate() {
        lm_score += if lm.uses_source() {
            let position = option.start + crate::neural::affiliation(k, tgt_len, src_len);
            lm.logprob_with_source(w, history, noisy, position)
        } else {
            lm.logprob(w, history)
        };
        push_state(history, w, lm.context_len());
    }
    f[F_LM] = lm_score;
    f[F_WORD_PENALTY] = -S::from_count(tgt_len);
    f[F_DISTORTION] = -S::from_count(option.start.abs_diff(next_start));
    f
}

pub(crate) fn push_state(history: &mut Vec<TokenId>, w: TokenId, keep: usize) {
    history.push(w);
    if history.len() > keep {
        history.drain(..history.len() - keep);
    }
}

pub(crate) fn initial_state(keep: usize) -> Vec<TokenId> {
    if keep == 0 {
        Vec::new()
    } else {
        vec![TokenId::BOS]
    }
}

pub(crate) fn end_features<S: Scalar, L: LanguageModel<S> + ?Sized>(
    history: &[TokenId],
    noisy: &[TokenId],
    lm: &L,
) -> FeatureVector<S> {
    let mut f = [S::zero(); NUM_FEATURES];
    f[F_LM] = if lm.uses_source() {
        lm.logprob_with_source(TokenId::EOS, history, noisy, noisy.len().saturating_sub(1))
    } else {
        lm.logprob(TokenId::EOS, history)
    };
    f
}

pub(crate) fn add<S: Scalar>(a: &mut FeatureVector<S>, b: &FeatureVector<S>) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Decodes every sentence independently (in parallel), preserving order.
pub fn decode_batch<S: Scalar, L: LanguageModel<S> + ?Sized>(
    sentences: &[Vec<TokenId>],
    table: &PhraseTable<S>,
    lm: &L,
    weights: &ModelWeights<S>,
    params: &DecoderParams,
) -> Vec<DecodeResult<S>> {
    sentences
        .par_iter()
        .map(|s| decode(s, table, lm, weights, params))
        .collect()
}
