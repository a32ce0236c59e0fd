//! The language model interface consumed by the decoder.

use crate::corpus::TokenId;
use crate::num::Scalar;

/// A left-to-right model of clean text returning log10 probabilities.
pub trait LanguageModel<S: Scalar>: Sync {
    /// Number of preceding tokens the model conditions on; the decoder keeps
    /// this many tokens as recombination state.
    fn context_len(&self) -> usize;

    /// log10 p(word | history). Only the last [`context_len`] tokens of
    /// `history` matter; a history starting with `<s>` marks the sentence
    /// beginning.
    ///
    /// [`context_len`]: LanguageModel::context_len
    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S;

    /// log10 p(word | history, source) for models that also look at the noisy
    /// sentence around `position`. Plain language models ignore the source.
    fn logprob_with_source(
        &self,
        word: TokenId,
        history: &[TokenId],
        _source: &[TokenId],
        _position: usize,
    ) -> S {
        self.logprob(word, history)
    }

    /// True when [`logprob_with_source`](LanguageModel::logprob_with_source)
    /// depends on the source arguments.
    fn uses_source(&self) -> bool {
        false
    }
}

impl<S: Scalar, L: LanguageModel<S> + ?Sized> LanguageModel<S> for &L {
    fn context_len(&self) -> usize {
        (**self).context_len()
    }
    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        (**self).logprob(word, history)
    }
    fn logprob_with_source(&self, word: TokenId, history: &[TokenId], source: &[TokenId], position: usize) -> S {
        (**self).logprob_with_source(word, history, source, position)
    }
    fn uses_source(&self) -> bool {
        (**self).uses_source()
    }
}

impl<S: Scalar> LanguageModel<S> for Box<dyn LanguageModel<S> + Send> {
    fn context_len(&self) -> usize {
        (**self).context_len()
    }
    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        (**self).logprob(word, history)
    }
    fn logprob_with_source(&self, word: TokenId, history: &[TokenId], source: &[TokenId], position: usize) -> S {
        (**self).logprob_with_source(word, history, source, position)
    }
    fn uses_source(&self) -> bool {
        (**self).uses_source()
    }
}

/// Assigns every word the same probability 1 / `vocab_size`.
#[derive(Clone, Copy, Debug)]
pub struct UniformLm {
    pub vocab_size: usize,
}

impl<S: Scalar> LanguageModel<S> for UniformLm {
    fn context_len(&self) -> usize {
        0
    }

    fn logprob(&self, _word: TokenId, _history: &[TokenId]) -> S {
        -S::from_count(self.vocab_size).log10()
    }
}

/// Total log10 probability of a sentence including the end marker.
pub fn sentence_logprob<S: Scalar, L: LanguageModel<S> + ?Sized>(lm: &L, sentence: &[TokenId]) -> S {
    let mut history = Vec::with_capacity(sentence.len() + 1);
    history.push(TokenId::BOS);
    let mut total = S::zero();
    for &w in sentence.iter().chain(std::iter::once(&TokenId::EOS)) {
        total += lm.logprob(w, &history);
        history.push(w);
    }
    total
}

/// 10^(−total log10 prob / token count), counting one end marker per
/// sentence.
pub fn perplexity<S: Scalar, L: LanguageModel<S> + ?Sized>(lm: &L, text: &[Vec<TokenId>]) -> S {
    let mut total = S::zero();
    let mut tokens = 0usize;
    for sentence in text {
        total += sentence_logprob(lm, sentence);
        tokens += sentence.len() + 1;
    }
    S::lit(10.0).powf(-total / S::from_count(tokens.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_perplexity_is_vocab_size() {
        let lm = UniformLm { vocab_size: 7 };
        let text = vec![vec![TokenId(5), TokenId(6)], vec![TokenId(9)]];
        let ppl: f64 = perplexity(&lm, &text);
        assert!((ppl - 7.0).abs() < 1e-9);
    }
}
