//! Brute-force decoding used to check the stack decoder.

use rustc_hash::FxHashMap;

use super::search::sort_hypotheses;
use super::{
    add, can_extend, collect_options, end_features, extension_features, initial_state, Coverage,
    DecodeResult, DecoderParams, FeatureVector, Hypothesis, ModelWeights, TranslationOption,
    NUM_FEATURES,
};
use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::num::Scalar;
use crate::phrase::PhraseTable;

/// Longest input accepted by [`exhaustive_decode`].
pub const EXHAUSTIVE_MAX_LEN: usize = 10;

/// Enumerates every derivation allowed by `params` (no beam) and returns all
/// distinct outputs ranked by their best derivation.
pub fn exhaustive_decode<S: Scalar, L: LanguageModel<S> + ?Sized>(
    noisy: &[TokenId],
    table: &PhraseTable<S>,
    lm: &L,
    weights: &ModelWeights<S>,
    params: &DecoderParams,
) -> Result<DecodeResult<S>> {
    if noisy.len() > EXHAUSTIVE_MAX_LEN {
        return Err(Error::Contract(format!(
            "exhaustive decoding takes at most {EXHAUSTIVE_MAX_LEN} tokens, got {}",
            noisy.len()
        )));
    }
    let options = collect_options(noisy, table, params);
    let mut walk = Walk {
        noisy,
        options: &options,
        lm,
        weights,
        params,
        best: FxHashMap::default(),
        clean: Vec::new(),
    };
    walk.visit(
        &Coverage::new(noisy.len()),
        0,
        0,
        &initial_state(lm.context_len()),
        [S::zero(); NUM_FEATURES],
    );
    let mut hyps: Vec<Hypothesis<S>> = walk
        .best
        .into_iter()
        .map(|(clean, features)| Hypothesis { score: weights.score(&features), clean, features })
        .collect();
    sort_hypotheses(&mut hyps);
    Ok(DecodeResult { best: hyps.first().map(|h| h.clean.clone()).unwrap_or_default(), nbest: hyps })
}

struct Walk<'a, 'o, S, L: ?Sized> {
    noisy: &'a [TokenId],
    options: &'o [Vec<TranslationOption<'a, S>>],
    lm: &'o L,
    weights: &'o ModelWeights<S>,
    params: &'o DecoderParams,
    best: FxHashMap<Vec<TokenId>, FeatureVector<S>>,
    clean: Vec<TokenId>,
}

impl<S: Scalar, L: LanguageModel<S> + ?Sized> Walk<'_, '_, S, L> {
    fn visit(
        &mut self,
        coverage: &Coverage,
        covered: usize,
        next_start: usize,
        state: &[TokenId],
        features: FeatureVector<S>,
    ) {
        let len = self.noisy.len();
        if covered == len {
            let mut total = features;
            add(&mut total, &end_features(state, self.noisy, self.lm));
            let score = self.weights.score(&total);
            let slot = self.best.entry(self.clean.clone()).or_insert(total);
            if score > self.weights.score(slot) {
                *slot = total;
            }
            return;
        }
        let options = self.options;
        for start in 0..len {
            for opt in &options[start] {
                if !can_extend(coverage, next_start, opt.start, opt.end, len, self.params) {
                    continue;
                }
                let mut history = state.to_vec();
                let delta = extension_features(opt, next_start, &mut history, self.noisy, self.lm);
                let mut next = features;
                add(&mut next, &delta);
                let mark = self.clean.len();
                self.clean.extend_from_slice(opt.clean);
                self.visit(
                    &coverage.with_span(opt.start, opt.end),
                    covered + opt.end - opt.start,
                    opt.end,
                    &history,
                    next,
                );
                self.clean.truncate(mark);
            }
        }
    }
}
