//! Alignment-consistent phrase extraction and phrase table estimation.

use std::fs;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::align::{AlignmentMatrix, LexicalTable, NULL_WORD};
use crate::corpus::{read_lines, ParallelCorpus, SentencePair, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::num::Scalar;

pub const DEFAULT_MAX_PHRASE_LEN: usize = 7;

/// Smallest probability stored for a lexical weight or read back from text.
pub const PROB_FLOOR: f64 = 1e-6;

/// Feature slots of a phrase table entry.
pub const PHI_FWD: usize = 0;
pub const PHI_BWD: usize = 1;
pub const LEX_FWD: usize = 2;
pub const LEX_BWD: usize = 3;
pub const NUM_PHRASE_FEATURES: usize = 4;

/// A rectangle of the alignment grid: noisy positions × clean positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhraseSpan {
    pub noisy: Range<usize>,
    pub clean: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhrasePair {
    pub noisy: Vec<TokenId>,
    pub clean: Vec<TokenId>,
    pub count: u32,
}

/// Every consistent span rectangle with both sides at most `max_len` long.
///
/// A rectangle is consistent when it holds at least one link and no link
/// joins a position inside either span to a position outside the other.
/// Unaligned clean words next to the tight clean span are absorbed
/// (all combinations), and unaligned noisy words fall out of enumerating
/// every noisy span.
pub fn extract_spans(alignment: &AlignmentMatrix, max_len: usize) -> Vec<PhraseSpan> {
    let (m, n) = alignment.dims();
    let mut clean_aligned = vec![false; n];
    let mut by_noisy: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut by_clean: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in alignment.links() {
        clean_aligned[j] = true;
        by_noisy[i].push(j);
        by_clean[j].push(i);
    }

    let mut spans = Vec::new();
    for i1 in 0..m {
        let mut jmin = usize::MAX;
        let mut jmax = 0;
        for i2 in i1..m.min(i1 + max_len) {
            for &j in &by_noisy[i2] {
                jmin = jmin.min(j);
                jmax = jmax.max(j);
            }
            if jmin == usize::MAX || jmax - jmin + 1 > max_len {
                continue;
            }
            let consistent = (jmin..=jmax).all(|j| by_clean[j].iter().all(|&i| i >= i1 && i <= i2));
            if !consistent {
                continue;
            }
            let mut j1 = jmin;
            loop {
                let mut j2 = jmax;
                while j2 + 1 - j1 <= max_len {
                    spans.push(PhraseSpan {
                        noisy: i1..i2 + 1,
                        clean: j1..j2 + 1,
                    });
                    j2 += 1;
                    if j2 >= n || clean_aligned[j2] {
                        break;
                    }
                }
                if j1 == 0 || clean_aligned[j1 - 1] {
                    break;
                }
                j1 -= 1;
                if jmax + 1 - j1 > max_len {
                    break;
                }
            }
        }
    }
    spans
}

/// Phrase pairs of one sentence pair, with per-sentence occurrence counts.
pub fn extract_phrases(
    pair: &SentencePair,
    alignment: &AlignmentMatrix,
    max_len: usize,
) -> Result<Vec<PhrasePair>> {
    check_dims(pair, alignment)?;
    let mut counts: FxHashMap<(Vec<TokenId>, Vec<TokenId>), u32> = FxHashMap::default();
    for span in extract_spans(alignment, max_len) {
        let key = (
            pair.noisy[span.noisy.clone()].to_vec(),
            pair.clean[span.clean.clone()].to_vec(),
        );
        *counts.entry(key).or_default() += 1;
    }
    let mut out: Vec<PhrasePair> = counts
        .into_iter()
        .map(|((noisy, clean), count)| PhrasePair { noisy, clean, count })
        .collect();
    out.sort();
    Ok(out)
}

fn check_dims(pair: &SentencePair, alignment: &AlignmentMatrix) -> Result<()> {
    if alignment.dims() != (pair.noisy.len(), pair.clean.len()) {
        return Err(Error::Contract(format!(
            "alignment {:?} does not match pair lengths ({}, {})",
            alignment.dims(),
            pair.noisy.len(),
            pair.clean.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhraseEntry<S = f64> {
    pub clean: Vec<TokenId>,
    /// log10 of [φ(noisy|clean), φ(clean|noisy), lex(noisy|clean), lex(clean|noisy)].
    pub features: [S; NUM_PHRASE_FEATURES],
}

impl<S: Scalar> PhraseEntry<S> {
    pub fn probs(&self) -> [f64; NUM_PHRASE_FEATURES] {
        self.features.map(|f| 10f64.powf(f.as_f64()))
    }
}

/// The phrase channel model: noisy phrase → candidate clean phrases.
///
/// Candidates are ordered by φ(clean|noisy) descending, then φ(noisy|clean)
/// descending, then clean ids.
#[derive(Clone, Debug, Default)]
pub struct PhraseTable<S = f64> {
    entries: FxHashMap<Vec<TokenId>, Vec<PhraseEntry<S>>>,
    longest: usize,
}

impl<S: Scalar> PhraseTable<S> {
    pub fn new() -> Self {
        PhraseTable {
            entries: FxHashMap::default(),
            longest: 0,
        }
    }

    /// Builds a table from probabilities in the order
    /// [φ(noisy|clean), φ(clean|noisy), lex(noisy|clean), lex(clean|noisy)].
    pub fn from_probs<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<TokenId>, Vec<TokenId>, [f64; NUM_PHRASE_FEATURES])>,
    {
        let mut table = Self::new();
        for (noisy, clean, probs) in rows {
            if noisy.is_empty() || clean.is_empty() {
                return Err(Error::Contract("phrase sides must be nonempty".into()));
            }
            if probs.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
                return Err(Error::Contract(format!("phrase probabilities {probs:?} outside (0, 1]")));
            }
            table.insert(noisy, clean, probs.map(|p| S::lit(p.log10())));
        }
        table.sort();
        Ok(table)
    }

    fn insert(&mut self, noisy: Vec<TokenId>, clean: Vec<TokenId>, features: [S; NUM_PHRASE_FEATURES]) {
        self.longest = self.longest.max(noisy.len());
        let row = self.entries.entry(noisy).or_default();
        match row.iter_mut().find(|e| e.clean == clean) {
            Some(e) => e.features = features,
            None => row.push(PhraseEntry { clean, features }),
        }
    }

    fn sort(&mut self) {
        for row in self.entries.values_mut() {
            row.sort_by(|a, b| {
                b.features[PHI_BWD]
                    .partial_cmp(&a.features[PHI_BWD])
                    .unwrap()
                    .then(b.features[PHI_FWD].partial_cmp(&a.features[PHI_FWD]).unwrap())
                    .then_with(|| a.clean.cmp(&b.clean))
            });
        }
    }

    /// Candidates for a noisy phrase (empty when unknown).
    pub fn get(&self, noisy: &[TokenId]) -> &[PhraseEntry<S>] {
        self.entries.get(noisy).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, noisy: &[TokenId]) -> bool {
        self.entries.contains_key(noisy)
    }

    /// Longest noisy phrase in the table.
    pub fn max_noisy_len(&self) -> usize {
        self.longest
    }

    /// Number of distinct noisy phrases.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_entries(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[TokenId], &PhraseEntry<S>)> {
        self.entries
            .iter()
            .flat_map(|(n, row)| row.iter().map(move |e| (n.as_slice(), e)))
    }

    /// Every token produced on the clean side by some entry.
    pub fn clean_vocabulary(&self) -> FxHashSet<TokenId> {
        self.iter().flat_map(|(_, e)| e.clean.iter().copied()).collect()
    }

    /// Σ over clean candidates of φ(clean|noisy), per noisy phrase.
    pub fn noisy_row_sums(&self) -> Vec<f64> {
        self.entries
            .values()
            .map(|row| row.iter().map(|e| e.probs()[PHI_BWD]).sum())
            .collect()
    }

    /// Σ over noisy phrases of φ(noisy|clean), per clean phrase.
    pub fn clean_row_sums(&self) -> Vec<f64> {
        let mut sums: FxHashMap<&[TokenId], f64> = FxHashMap::default();
        for (_, e) in self.iter() {
            *sums.entry(&e.clean).or_default() += e.probs()[PHI_FWD];
        }
        sums.into_values().collect()
    }

    /// Writes `noisy ||| clean ||| phi_fwd phi_bwd lex_fwd lex_bwd` lines
    /// with probabilities at six decimals, sorted by surface form.
    pub fn write(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        let mut lines: Vec<(String, String, String)> = self
            .iter()
            .map(|(noisy, e)| {
                let probs = e.probs();
                (
                    vocab.render(noisy),
                    vocab.render(&e.clean),
                    format!("{:.6} {:.6} {:.6} {:.6}", probs[0], probs[1], probs[2], probs[3]),
                )
            })
            .collect();
        lines.sort();
        let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        for (n, c, f) in lines {
            writeln!(out, "{n} ||| {c} ||| {f}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the text format, interning tokens into `vocab`. Probabilities
    /// printed as zero are floored at [`PROB_FLOOR`].
    pub fn read(path: &Path, vocab: &mut Vocabulary) -> Result<Self> {
        let mut table = Self::new();
        for (n, line) in read_lines(path)?.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, n + 1, "expected 'noisy ||| clean ||| features'"));
            }
            let noisy: Vec<&str> = fields[0].split_whitespace().collect();
            let clean: Vec<&str> = fields[1].split_whitespace().collect();
            if noisy.is_empty() || clean.is_empty() {
                return Err(Error::parse(path, n + 1, "empty phrase"));
            }
            let probs: Vec<f64> = fields[2]
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, n + 1, "bad feature value"))?;
            let probs: [f64; NUM_PHRASE_FEATURES] = probs
                .try_into()
                .map_err(|_| Error::parse(path, n + 1, "expected 4 feature values"))?;
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::parse(path, n + 1, "probability outside [0, 1]"));
            }
            let features = probs.map(|p| S::lit(p.max(PROB_FLOOR).log10()));
            table.insert(vocab.encode(&noisy), vocab.encode(&clean), features);
        }
        table.sort();
        Ok(table)
    }
}

/// Geometric mean over the words of one side of the best link probability
/// of each word (NULL for unaligned words).
fn lexical_weight<S: Scalar>(
    emit: &[TokenId],
    cond: &[TokenId],
    links: &[(usize, usize)],
    table: &LexicalTable<S>,
) -> f64 {
    let mut log_sum = 0.0;
    for (k, &e) in emit.iter().enumerate() {
        let best = links
            .iter()
            .filter(|&&(ek, _)| ek == k)
            .map(|&(_, ck)| table.prob(cond[ck], e).as_f64())
            .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
            .unwrap_or_else(|| table.prob(NULL_WORD, e).as_f64());
        log_sum += best.max(PROB_FLOOR).log10();
    }
    10f64.powf(log_sum / emit.len() as f64).max(PROB_FLOOR)
}

#[derive(Default)]
struct PairStats {
    count: u64,
    lex_fwd: f64,
    lex_bwd: f64,
}

/// Relative-frequency phrase table with lexical weights computed from the
/// word-level tables `clean_to_noisy` (t(noisy|clean)) and `noisy_to_clean`.
///
/// When a phrase pair occurs with different internal alignments, the
/// largest lexical weight is kept.
pub fn build_phrase_table<S: Scalar>(
    corpus: &ParallelCorpus,
    alignments: &[AlignmentMatrix],
    clean_to_noisy: &LexicalTable<S>,
    noisy_to_clean: &LexicalTable<S>,
    max_len: usize,
) -> Result<PhraseTable<S>> {
    if alignments.len() != corpus.len() {
        return Err(Error::Contract(format!(
            "{} alignments for {} sentence pairs",
            alignments.len(),
            corpus.len()
        )));
    }
    type Occurrence = (Vec<TokenId>, Vec<TokenId>, u64, f64, f64);
    let per_pair: Vec<Vec<Occurrence>> = corpus
        .pairs
        .par_iter()
        .zip(alignments.par_iter())
        .map(|(pair, alignment)| -> Result<Vec<Occurrence>> {
            check_dims(pair, alignment)?;
            let mut out = Vec::new();
            for span in extract_spans(alignment, max_len) {
                let noisy = &pair.noisy[span.noisy.clone()];
                let clean = &pair.clean[span.clean.clone()];
                let links: Vec<(usize, usize)> = alignment
                    .links()
                    .filter(|(i, j)| span.noisy.contains(i) && span.clean.contains(j))
                    .map(|(i, j)| (i - span.noisy.start, j - span.clean.start))
                    .collect();
                let swapped: Vec<(usize, usize)> = links.iter().map(|&(i, j)| (j, i)).collect();
                let lex_fwd = lexical_weight(noisy, clean, &links, clean_to_noisy);
                let lex_bwd = lexical_weight(clean, noisy, &swapped, noisy_to_clean);
                out.push((noisy.to_vec(), clean.to_vec(), pair.weight as u64, lex_fwd, lex_bwd));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut stats: FxHashMap<(Vec<TokenId>, Vec<TokenId>), PairStats> = FxHashMap::default();
    let mut noisy_totals: FxHashMap<Vec<TokenId>, u64> = FxHashMap::default();
    let mut clean_totals: FxHashMap<Vec<TokenId>, u64> = FxHashMap::default();
    for (noisy, clean, w, lf, lb) in per_pair.into_iter().flatten() {
        *noisy_totals.entry(noisy.clone()).or_default() += w;
        *clean_totals.entry(clean.clone()).or_default() += w;
        let s = stats.entry((noisy, clean)).or_default();
        s.count += w;
        s.lex_fwd = s.lex_fwd.max(lf);
        s.lex_bwd = s.lex_bwd.max(lb);
    }
    if stats.is_empty() {
        return Err(Error::Estimation("no consistent phrase pairs extracted".into()));
    }

    let mut table = PhraseTable::new();
    for ((noisy, clean), s) in stats {
        let count = s.count as f64;
        let phi_fwd = count / clean_totals[&clean] as f64;
        let phi_bwd = count / noisy_totals[&noisy] as f64;
        let features = [phi_fwd, phi_bwd, s.lex_fwd, s.lex_bwd].map(|p| S::lit(p.log10()));
        table.insert(noisy, clean, features);
    }
    table.sort();
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{em_ibm1, Direction};
    use proptest::prelude::*;

    fn ids(v: &mut Vocabulary, s: &str) -> Vec<TokenId> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        v.encode(&toks)
    }

    /// Brute force: every rectangle filtered by the consistency predicate.
    fn brute_force(a: &AlignmentMatrix, max_len: usize) -> Vec<PhraseSpan> {
        let (m, n) = a.dims();
        let mut out = Vec::new();
        for i1 in 0..m {
            for i2 in i1 + 1..=m {
                for j1 in 0..n {
                    for j2 in j1 + 1..=n {
                        if i2 - i1 > max_len || j2 - j1 > max_len {
                            continue;
                        }
                        let mut inside = 0;
                        let mut ok = true;
                        for (i, j) in a.links() {
                            let ii = (i1..i2).contains(&i);
                            let jj = (j1..j2).contains(&j);
                            if ii && jj {
                                inside += 1;
                            } else if ii || jj {
                                ok = false;
                            }
                        }
                        if ok && inside > 0 {
                            out.push(PhraseSpan { noisy: i1..i2, clean: j1..j2 });
                        }
                    }
                }
            }
        }
        out.sort_by_key(span_key);
        out
    }

    fn span_key(s: &PhraseSpan) -> (usize, usize, usize, usize) {
        (s.noisy.start, s.noisy.end, s.clean.start, s.clean.end)
    }

    fn spans_sorted(a: &AlignmentMatrix, max_len: usize) -> Vec<PhraseSpan> {
        let mut s = extract_spans(a, max_len);
        s.sort_by_key(span_key);
        s
    }

    #[test]
    fn diagonal_pair() {
        let mut v = Vocabulary::new();
        let pair = SentencePair::new(ids(&mut v, "x y"), ids(&mut v, "a b"));
        let al = AlignmentMatrix::from_links(2, 2, [(0, 0), (1, 1)]).unwrap();
        let got: Vec<(String, String)> = extract_phrases(&pair, &al, 2)
            .unwrap()
            .into_iter()
            .map(|p| (v.render(&p.noisy), v.render(&p.clean)))
            .collect();
        let mut want = vec![
            ("x".to_string(), "a".to_string()),
            ("y".into(), "b".into()),
            ("x y".into(), "a b".into()),
        ];
        want.sort();
        let mut got = got;
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_alignment_extracts_nothing() {
        let mut v = Vocabulary::new();
        let pair = SentencePair::new(ids(&mut v, "x y"), ids(&mut v, "a b"));
        let al = AlignmentMatrix::new(2, 2);
        assert!(extract_phrases(&pair, &al, 7).unwrap().is_empty());
    }

    #[test]
    fn one_to_many_blocks_sub_spans() {
        let mut v = Vocabulary::new();
        let pair = SentencePair::new(ids(&mut v, "eye rack"), ids(&mut v, "iraq"));
        let al = AlignmentMatrix::from_links(2, 1, [(0, 0), (1, 0)]).unwrap();
        let got = extract_phrases(&pair, &al, 7).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(v.render(&got[0].noisy), "eye rack");
        assert_eq!(v.render(&got[0].clean), "iraq");
    }

    #[test]
    fn unaligned_clean_word_is_absorbed() {
        // "a c" against "a b c": b is a deletion on the noisy side.
        let al = AlignmentMatrix::from_links(2, 3, [(0, 0), (1, 2)]).unwrap();
        let spans = spans_sorted(&al, 7);
        assert_eq!(spans, brute_force(&al, 7));
        assert!(spans.contains(&PhraseSpan { noisy: 0..2, clean: 0..3 }));
        assert!(spans.contains(&PhraseSpan { noisy: 0..1, clean: 0..2 }));
    }

    #[test]
    fn dimension_mismatch() {
        let mut v = Vocabulary::new();
        let pair = SentencePair::new(ids(&mut v, "x"), ids(&mut v, "a"));
        let al = AlignmentMatrix::new(2, 1);
        assert_eq!(extract_phrases(&pair, &al, 7).unwrap_err().code(), "E_CONTRACT");
    }

    fn table_for(pairs: &[(&str, &str)], max_len: usize) -> (PhraseTable, ParallelCorpus) {
        let corpus = ParallelCorpus::from_token_pairs(pairs.iter().map(|(n, c)| {
            (
                n.split_whitespace().collect::<Vec<_>>(),
                c.split_whitespace().collect::<Vec<_>>(),
            )
        }));
        let diag: Vec<AlignmentMatrix> = corpus
            .pairs
            .iter()
            .map(|p| {
                let k = p.noisy.len().min(p.clean.len());
                AlignmentMatrix::from_links(p.noisy.len(), p.clean.len(), (0..k).map(|i| (i, i)))
                    .unwrap()
            })
            .collect();
        let c2n = em_ibm1(&corpus, Direction::CleanToNoisy, 3).unwrap();
        let n2c = em_ibm1(&corpus, Direction::NoisyToClean, 3).unwrap();
        let table = build_phrase_table(&corpus, &diag, &c2n, &n2c, max_len).unwrap();
        (table, corpus)
    }

    #[test]
    fn single_event_mle() {
        let (t, c) = table_for(&[("x", "a")], 7);
        let row = t.get(&[c.vocab.get("x").unwrap()]);
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].features[PHI_FWD], 0.0);
        assert_eq!(row[0].features[PHI_BWD], 0.0);
    }

    #[test]
    fn count_ratios() {
        let (t, c) = table_for(&[("x", "a"), ("x", "a"), ("x", "a"), ("x", "b")], 7);
        let row = t.get(&[c.vocab.get("x").unwrap()]);
        assert_eq!(c.vocab.render(&row[0].clean), "a");
        assert!((row[0].probs()[PHI_BWD] - 0.75).abs() < 1e-12);
        assert!((row[1].probs()[PHI_BWD] - 0.25).abs() < 1e-12);
        for s in t.noisy_row_sums().into_iter().chain(t.clean_row_sums()) {
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_corpus_prefers_itself() {
        let (t, _) = table_for(&[("a b c", "a b c"), ("b c d", "b c d"), ("a d", "a d")], 7);
        for (noisy, e) in t.iter() {
            let top = &t.get(noisy)[0];
            assert_eq!(top.clean, noisy);
            assert!((top.probs()[PHI_BWD] - 1.0).abs() < 1e-12);
            assert!(e.features.iter().all(|f| f.is_finite()));
        }
    }

    #[test]
    fn empty_extraction_is_an_error() {
        let corpus = ParallelCorpus::from_token_pairs([(vec!["x"], vec!["a"])]);
        let c2n = em_ibm1::<f64>(&corpus, Direction::CleanToNoisy, 1).unwrap();
        let n2c = em_ibm1::<f64>(&corpus, Direction::NoisyToClean, 1).unwrap();
        let err = build_phrase_table(&corpus, &[AlignmentMatrix::new(1, 1)], &c2n, &n2c, 7).unwrap_err();
        assert_eq!(err.code(), "E_ESTIMATE");
    }

    #[test]
    fn text_round_trip() {
        let (t, c) = table_for(&[("x y", "a b"), ("x", "a"), ("x", "b"), ("eye rack", "iraq")], 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phrase-table");
        t.write(&path, &c.vocab).unwrap();
        let mut vocab = Vocabulary::new();
        let back: PhraseTable = PhraseTable::read(&path, &mut vocab).unwrap();
        assert_eq!(back.num_entries(), t.num_entries());
        let path2 = dir.path().join("again");
        back.write(&path2, &vocab).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), fs::read_to_string(&path2).unwrap());
        for (noisy, e) in t.iter() {
            let n: Vec<TokenId> = noisy.iter().map(|&id| vocab.get(c.vocab.word(id)).unwrap()).collect();
            let cl: Vec<TokenId> = e.clean.iter().map(|&id| vocab.get(c.vocab.word(id)).unwrap()).collect();
            let other = back.get(&n).iter().find(|o| o.clean == cl).unwrap();
            for k in 0..NUM_PHRASE_FEATURES {
                assert!((other.probs()[k] - e.probs()[k]).abs() <= 5e-7 + 1e-12);
            }
        }
    }

    #[test]
    fn malformed_table_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pt");
        fs::write(&path, "x ||| a ||| 0.5 0.5 0.5\n").unwrap();
        let err = PhraseTable::<f64>::read(&path, &mut Vocabulary::new()).unwrap_err();
        assert_eq!(err.code(), "E_PARSE");
    }

    fn arb_alignment() -> impl Strategy<Value = AlignmentMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| {
            proptest::collection::vec((0..m, 0..n), 0..=(m * n))
                .prop_map(move |l| AlignmentMatrix::from_links(m, n, l).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in arb_alignment(), max_len in 1usize..=7) {
            prop_assert_eq!(spans_sorted(&a, max_len), brute_force(&a, max_len));
        }

        #[test]
        fn respects_max_len(a in arb_alignment(), max_len in 1usize..=3) {
            for s in extract_spans(&a, max_len) {
                prop_assert!(s.noisy.len() <= max_len && s.clean.len() <= max_len);
                prop_assert!(!s.noisy.is_empty() && !s.clean.is_empty());
            }
        }

        #[test]
        fn table_invariant_under_reordering(seed in 0u64..1000) {
            let base = [("x y", "a b"), ("x", "a"), ("y z", "b"), ("x", "c"), ("z y", "b a")];
            let mut order: Vec<usize> = (0..base.len()).collect();
            let mut s = seed;
            for k in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(k, (s >> 33) as usize % (k + 1));
            }
            let shuffled: Vec<(&str, &str)> = order.iter().map(|&k| base[k]).collect();
            let (t1, c1) = table_for(&base, 7);
            let (t2, c2) = table_for(&shuffled, 7);
            prop_assert_eq!(t1.num_entries(), t2.num_entries());
            for (noisy, e) in t1.iter() {
                let n: Vec<TokenId> = noisy.iter().map(|&id| c2.vocab.get(c1.vocab.word(id)).unwrap()).collect();
                let cl: Vec<TokenId> = e.clean.iter().map(|&id| c2.vocab.get(c1.vocab.word(id)).unwrap()).collect();
                let other = t2.get(&n).iter().find(|o| o.clean == cl).unwrap();
                prop_assert_eq!(other.features[PHI_FWD], e.features[PHI_FWD]);
                prop_assert_eq!(other.features[PHI_BWD], e.features[PHI_BWD]);
            }
        }
    }
}
