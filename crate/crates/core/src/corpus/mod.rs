//! Parallel (noisy, clean) corpora: ingestion, cleaning, vocabulary and
//! synthetic corruption.

mod channel;
mod tokenize;
mod vocab;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rustc_hash::FxHashSet;

pub use channel::{corrupt, ConfusionChannel, ChannelRule, EPSILON};
pub use tokenize::{tokenize_and_clean, CleaningPolicy, DEFAULT_EVENT_TAGS};
pub use vocab::{TokenId, Vocabulary, BOS_WORD, EOS_WORD, UNK_WORD};

use crate::error::{Error, Result};

/// Longest sentence (in tokens) kept on either side of a pair.
pub const MAX_SENTENCE_LEN: usize = 100;

/// One aligned training example: an ASR hypothesis and its reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub noisy: Vec<TokenId>,
    pub clean: Vec<TokenId>,
    pub weight: u32,
}

impl SentencePair {
    pub fn new(noisy: Vec<TokenId>, clean: Vec<TokenId>) -> Self {
        SentencePair {
            noisy,
            clean,
            weight: 1,
        }
    }

    fn is_admissible(noisy: &[TokenId], clean: &[TokenId]) -> bool {
        let side_ok = |s: &[TokenId]| {
            !s.is_empty() && s.len() <= MAX_SENTENCE_LEN && !s.iter().any(|t| t.is_boundary())
        };
        side_ok(noisy) && side_ok(clean)
    }
}

/// Sentence pairs over one shared id space.
///
/// Both sides intern into a single [`Vocabulary`] so that a noisy token can be
/// copied to the clean side without translation; the per-side vocabularies
/// are available as id sets.
#[derive(Clone, Debug, Default)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub vocab: Vocabulary,
    /// Pairs rejected at construction (empty or over-long side).
    pub dropped: usize,
}

impl ParallelCorpus {
    pub fn new(vocab: Vocabulary) -> Self {
        ParallelCorpus {
            pairs: Vec::new(),
            vocab,
            dropped: 0,
        }
    }

    /// Builds a corpus from already-tokenized string pairs, dropping pairs
    /// with an empty or over-long side.
    pub fn from_token_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Vec<S>, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut corpus = ParallelCorpus::default();
        for (noisy, clean) in pairs {
            corpus.push_tokens(&noisy, &clean);
        }
        corpus
    }

    /// Adds one pair; returns false (and counts a drop) when inadmissible.
    pub fn push_tokens<S: AsRef<str>>(&mut self, noisy: &[S], clean: &[S]) -> bool {
        let ok = |s: &[S]| !s.is_empty() && s.len() <= MAX_SENTENCE_LEN;
        if !ok(noisy) || !ok(clean) {
            self.dropped += 1;
            return false;
        }
        let noisy = self.vocab.encode(noisy);
        let clean = self.vocab.encode(clean);
        if !SentencePair::is_admissible(&noisy, &clean) {
            self.dropped += 1;
            return false;
        }
        self.pairs.push(SentencePair::new(noisy, clean));
        true
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Ids occurring on the noisy side.
    pub fn source_words(&self) -> FxHashSet<TokenId> {
        self.pairs.iter().flat_map(|p| p.noisy.iter().copied()).collect()
    }

    /// Ids occurring on the clean side.
    pub fn target_words(&self) -> FxHashSet<TokenId> {
        self.pairs.iter().flat_map(|p| p.clean.iter().copied()).collect()
    }

    pub fn clean_sentences(&self) -> Vec<Vec<TokenId>> {
        self.pairs.iter().map(|p| p.clean.clone()).collect()
    }

    pub fn noisy_sentences(&self) -> Vec<Vec<TokenId>> {
        self.pairs.iter().map(|p| p.noisy.clone()).collect()
    }

    /// Writes the pairs as two line-aligned plain-text files.
    pub fn write(&self, noisy_file: &Path, clean_file: &Path) -> Result<()> {
        write_sentences(noisy_file, &self.vocab, self.pairs.iter().map(|p| &p.noisy[..]))?;
        write_sentences(clean_file, &self.vocab, self.pairs.iter().map(|p| &p.clean[..]))
    }
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Writes one space-joined sentence per line.
pub fn write_sentences<'a, I>(path: &Path, vocab: &Vocabulary, sentences: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [TokenId]>,
{
    let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
    let mut out = BufWriter::new(file);
    for s in sentences {
        writeln!(out, "{}", vocab.render(s))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and cleans a monolingual text file, keeping empty lines as empty
/// token sequences so line numbering is preserved.
pub fn load_text(path: &Path, policy: &CleaningPolicy) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| tokenize_and_clean(l, policy))
        .collect())
}

/// Loads line-aligned noisy/clean files. With `nbest = k` the noisy file
/// holds `k` consecutive hypotheses per clean line, each becoming its own
/// unit-weight pair.
pub fn load_parallel(
    noisy_file: &Path,
    clean_file: &Path,
    nbest: usize,
    policy: &CleaningPolicy,
) -> Result<ParallelCorpus> {
    if nbest == 0 {
        return Err(Error::Config("nbest must be positive".into()));
    }
    let noisy = read_lines(noisy_file)?;
    let clean = read_lines(clean_file)?;
    if noisy.len() != clean.len() * nbest {
        return Err(Error::LineCount {
            found: noisy.len(),
            expected: clean.len() * nbest,
        });
    }
    let mut corpus = ParallelCorpus::default();
    for (k, noisy_line) in noisy.iter().enumerate() {
        let n = tokenize_and_clean(noisy_line, policy);
        let c = tokenize_and_clean(&clean[k / nbest], policy);
        corpus.push_tokens(&n, &c);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_one_best() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n", "born in eye rack\nhello [noise] there\n");
        let c = write(dir.path(), "c", "born in iraq\nhello there\n");
        let corpus = load_parallel(&n, &c, 1, &CleaningPolicy::default()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.dropped, 0);
        assert_eq!(corpus.vocab.render(&corpus.pairs[1].noisy), "hello there");
    }

    #[test]
    fn loads_ten_best_as_separate_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let noisy: String = (0..20).map(|i| format!("hyp {i}\n")).collect();
        let n = write(dir.path(), "n", &noisy);
        let c = write(dir.path(), "c", "ref one\nref two\n");
        let corpus = load_parallel(&n, &c, 10, &CleaningPolicy::default()).unwrap();
        assert_eq!(corpus.len(), 20);
        assert!(corpus.pairs.iter().all(|p| p.weight == 1));
        assert_eq!(corpus.vocab.render(&corpus.pairs[9].clean), "ref one");
        assert_eq!(corpus.vocab.render(&corpus.pairs[10].clean), "ref two");
    }

    #[test]
    fn line_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n", "a\nb\nc\n");
        let c = write(dir.path(), "c", "a\nb\n");
        let err = load_parallel(&n, &c, 1, &CleaningPolicy::default()).unwrap_err();
        assert_eq!(err.to_string(), "line count 3 vs 2");
        assert_eq!(err.code(), "E_INGEST");
    }

    #[test]
    fn drops_empty_and_long_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let long = vec!["w"; MAX_SENTENCE_LEN + 1].join(" ");
        let n = write(dir.path(), "n", &format!("[noise]\n{long}\nok\nfine\n"));
        let c = write(dir.path(), "c", "x\ny\nok\n[laughter]\n");
        let corpus = load_parallel(&n, &c, 1, &CleaningPolicy::default()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.dropped, 3);
        assert_eq!(corpus.len() + corpus.dropped, 4);
    }

    #[test]
    fn exactly_max_length_is_kept() {
        let toks: Vec<String> = vec!["w".into(); MAX_SENTENCE_LEN];
        let corpus = ParallelCorpus::from_token_pairs([(toks.clone(), toks)]);
        assert_eq!(corpus.len(), 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_parallel(
            Path::new("/nonexistent/n"),
            Path::new("/nonexistent/c"),
            1,
            &CleaningPolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err.code(), "E_IO");
    }
}
