//! Word alignment: IBM Model 1 lexical tables estimated by EM in either
//! direction, Viterbi links, and symmetrization heuristics.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::{ParallelCorpus, SentencePair, TokenId};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Conditioning id of the empty word.
pub const NULL_WORD: TokenId = TokenId(u32::MAX);

/// Pairs per E-step work unit; partial counts merge in chunk order.
const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// t(noisy | clean): every noisy token is explained by a clean token.
    CleanToNoisy,
    /// t(clean | noisy): every clean token is explained by a noisy token.
    NoisyToClean,
}

impl Direction {
    /// (emitted side, conditioning side) of a pair.
    fn sides(self, pair: &SentencePair) -> (&[TokenId], &[TokenId]) {
        match self {
            Direction::CleanToNoisy => (&pair.noisy, &pair.clean),
            Direction::NoisyToClean => (&pair.clean, &pair.noisy),
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Direction::CleanToNoisy => Direction::NoisyToClean,
            Direction::NoisyToClean => Direction::CleanToNoisy,
        }
    }
}

/// Sparse word translation table t(emitted | conditioning), including the
/// [`NULL_WORD`] row.
#[derive(Clone, Debug)]
pub struct LexicalTable<S = f64> {
    direction: Direction,
    probs: FxHashMap<(TokenId, TokenId), S>,
}

impl<S: Scalar> LexicalTable<S> {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// t(emitted | conditioning); zero for pairs never co-occurring.
    pub fn prob(&self, conditioning: TokenId, emitted: TokenId) -> S {
        self.probs
            .get(&(conditioning, emitted))
            .copied()
            .unwrap_or_else(S::zero)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, TokenId, S)> + '_ {
        self.probs.iter().map(|(&(c, e), &p)| (c, e, p))
    }

    /// Total emitted mass of every conditioning word.
    pub fn row_sums(&self) -> FxHashMap<TokenId, S> {
        let mut sums = FxHashMap::default();
        for (&(c, _), &p) in &self.probs {
            *sums.entry(c).or_insert_with(S::zero) += p;
        }
        sums
    }

    /// Uniform distribution over the words co-occurring with each
    /// conditioning word (NULL co-occurs with everything).
    fn uniform(corpus: &ParallelCorpus, direction: Direction) -> Self {
        let mut seen: FxHashMap<TokenId, Vec<TokenId>> = FxHashMap::default();
        let mut keys: Vec<(TokenId, TokenId)> = Vec::new();
        let mut present: rustc_hash::FxHashSet<(TokenId, TokenId)> = Default::default();
        for pair in &corpus.pairs {
            let (emit, cond) = direction.sides(pair);
            for &c in std::iter::once(&NULL_WORD).chain(cond) {
                for &e in emit {
                    if present.insert((c, e)) {
                        keys.push((c, e));
                        seen.entry(c).or_default().push(e);
                    }
                }
            }
        }
        let probs = keys
            .into_iter()
            .map(|(c, e)| ((c, e), S::one() / S::from_count(seen[&c].len())))
            .collect();
        LexicalTable { direction, probs }
    }

    /// One exact EM step.
    fn em_step(&self, corpus: &ParallelCorpus) -> Self {
        let partials: Vec<FxHashMap<(TokenId, TokenId), S>> = corpus
            .pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut counts: FxHashMap<(TokenId, TokenId), S> = FxHashMap::default();
                let mut post: Vec<S> = Vec::new();
                for pair in chunk {
                    let (emit, cond) = self.direction.sides(pair);
                    let weight = S::from_count(pair.weight as usize);
                    for &e in emit {
                        post.clear();
                        post.push(self.prob(NULL_WORD, e));
                        post.extend(cond.iter().map(|&c| self.prob(c, e)));
                        let z: S = post.iter().copied().sum();
                        if z <= S::zero() {
                            continue;
                        }
                        for (&c, &p) in std::iter::once(&NULL_WORD).chain(cond).zip(&post) {
                            *counts.entry((c, e)).or_insert_with(S::zero) += weight * p / z;
                        }
                    }
                }
                counts
            })
            .collect();

        let mut counts: FxHashMap<(TokenId, TokenId), S> = FxHashMap::default();
        for part in partials {
            for (k, v) in part {
                *counts.entry(k).or_insert_with(S::zero) += v;
            }
        }
        let mut totals: FxHashMap<TokenId, S> = FxHashMap::default();
        for (&(c, _), &v) in &counts {
            *totals.entry(c).or_insert_with(S::zero) += v;
        }
        let probs = counts
            .into_iter()
            .map(|((c, e), v)| ((c, e), v / totals[&c]))
            .collect();
        LexicalTable {
            direction: self.direction,
            probs,
        }
    }

    /// Corpus log-likelihood (natural log) under Model 1 with a uniform
    /// alignment prior over the conditioning words plus NULL.
    pub fn log_likelihood(&self, corpus: &ParallelCorpus) -> S {
        corpus
            .pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut ll = S::zero();
                for pair in chunk {
                    let (emit, cond) = self.direction.sides(pair);
                    let slots = S::from_count(cond.len() + 1);
                    let weight = S::from_count(pair.weight as usize);
                    for &e in emit {
                        let z: S = std::iter::once(&NULL_WORD)
                            .chain(cond)
                            .map(|&c| self.prob(c, e))
                            .sum();
                        ll += weight * (z / slots).ln();
                    }
                }
                ll
            })
            .collect::<Vec<S>>()
            .into_iter()
            .fold(S::zero(), |a, b| a + b)
    }
}

/// Estimates an IBM Model 1 table by `iterations` EM steps from the uniform
/// co-occurrence initialization.
pub fn em_ibm1<S: Scalar>(
    corpus: &ParallelCorpus,
    direction: Direction,
    iterations: usize,
) -> Result<LexicalTable<S>> {
    Ok(em_ibm1_trace(corpus, direction, iterations)?.0)
}

/// Like [`em_ibm1`], also returning the log-likelihood before the first and
/// after every iteration (`iterations + 1` values).
pub fn em_ibm1_trace<S: Scalar>(
    corpus: &ParallelCorpus,
    direction: Direction,
    iterations: usize,
) -> Result<(LexicalTable<S>, Vec<S>)> {
    if corpus.is_empty() {
        return Err(Error::Estimation("cannot align an empty corpus".into()));
    }
    let mut table = LexicalTable::uniform(corpus, direction);
    let mut trace = vec![table.log_likelihood(corpus)];
    for _ in 0..iterations {
        table = table.em_step(corpus);
        trace.push(table.log_likelihood(corpus));
    }
    Ok((table, trace))
}

/// Links between noisy position `i` and clean position `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentMatrix {
    noisy_len: usize,
    clean_len: usize,
    links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn new(noisy_len: usize, clean_len: usize) -> Self {
        AlignmentMatrix {
            noisy_len,
            clean_len,
            links: BTreeSet::new(),
        }
    }

    pub fn from_links(
        noisy_len: usize,
        clean_len: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut a = Self::new(noisy_len, clean_len);
        for (i, j) in links {
            a.insert(i, j)?;
        }
        Ok(a)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i >= self.noisy_len || j >= self.clean_len {
            return Err(Error::Contract(format!(
                "link {i}-{j} outside {}x{} alignment",
                self.noisy_len, self.clean_len
            )));
        }
        Ok(self.links.insert((i, j)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn noisy_len(&self) -> usize {
        self.noisy_len
    }

    pub fn clean_len(&self) -> usize {
        self.clean_len
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.noisy_len, self.clean_len)
    }

    /// Links in row-major order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn is_subset(&self, other: &AlignmentMatrix) -> bool {
        self.links.is_subset(&other.links)
    }

    pub fn to_pharaoh(&self) -> String {
        self.to_string()
    }

    /// Parses a Pharaoh line (`i-j` pairs) for a pair of the given lengths.
    pub fn parse_pharaoh(line: &str, noisy_len: usize, clean_len: usize) -> Result<Self> {
        let mut a = Self::new(noisy_len, clean_len);
        for item in line.split_whitespace() {
            let (i, j) = item
                .split_once('-')
                .and_then(|(i, j)| Some((usize::from_str(i).ok()?, usize::from_str(j).ok()?)))
                .ok_or_else(|| Error::Ingestion(format!("bad alignment link '{item}'")))?;
            a.insert(i, j)?;
        }
        Ok(a)
    }
}

impl fmt::Display for AlignmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in &self.links {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
            first = false;
        }
        Ok(())
    }
}

/// Links each emitted token to its most probable conditioning token. NULL
/// wins only when strictly more probable than every word; among words the
/// smallest index wins ties.
pub fn viterbi_align<S: Scalar>(pair: &SentencePair, table: &LexicalTable<S>) -> AlignmentMatrix {
    let direction = table.direction();
    let (emit, cond) = direction.sides(pair);
    let mut a = AlignmentMatrix::new(pair.noisy.len(), pair.clean.len());
    for (ei, &e) in emit.iter().enumerate() {
        let mut best: Option<(usize, S)> = None;
        for (ci, &c) in cond.iter().enumerate() {
            let p = table.prob(c, e);
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((ci, p));
            }
        }
        let Some((ci, p)) = best else { continue };
        if p <= S::zero() || table.prob(NULL_WORD, e) > p {
            continue;
        }
        let (i, j) = match direction {
            Direction::CleanToNoisy => (ei, ci),
            Direction::NoisyToClean => (ci, ei),
        };
        a.links.insert((i, j));
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Heuristic {
    Intersection,
    GrowDiag,
    #[default]
    GrowDiagFinal,
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Heuristic::Intersection),
            "grow-diag" => Ok(Heuristic::GrowDiag),
            "grow-diag-final" => Ok(Heuristic::GrowDiagFinal),
            other => Err(Error::Config(format!("unknown symmetrization heuristic '{other}'"))),
        }
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Merges two directional alignments of the same sentence pair.
///
/// Growing starts from the intersection and repeatedly scans current links
/// in row-major order, adding union points in their 8-neighborhood that
/// attach a still-unaligned noisy or clean token, until nothing changes.
/// The final step adds any remaining union point that attaches an unaligned
/// token.
pub fn symmetrize(
    forward: &AlignmentMatrix,
    backward: &AlignmentMatrix,
    heuristic: Heuristic,
) -> Result<AlignmentMatrix> {
    if forward.dims() != backward.dims() {
        return Err(Error::Contract(format!(
            "alignment dimensions differ: {:?} vs {:?}",
            forward.dims(),
            backward.dims()
        )));
    }
    let (m, n) = forward.dims();
    let union: BTreeSet<(usize, usize)> = forward.links.union(&backward.links).copied().collect();
    let mut out = AlignmentMatrix {
        noisy_len: m,
        clean_len: n,
        links: forward.links.intersection(&backward.links).copied().collect(),
    };
    if heuristic == Heuristic::Intersection {
        return Ok(out);
    }
    let mut noisy_aligned = vec![false; m];
    let mut clean_aligned = vec![false; n];
    for &(i, j) in &out.links {
        noisy_aligned[i] = true;
        clean_aligned[j] = true;
    }

    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..m {
            for j in 0..n {
                if !out.links.contains(&(i, j)) {
                    continue;
                }
                for (di, dj) in NEIGHBORS {
                    let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj))
                    else {
                        continue;
                    };
                    if ni >= m || nj >= n || out.links.contains(&(ni, nj)) {
                        continue;
                    }
                    if (!noisy_aligned[ni] || !clean_aligned[nj]) && union.contains(&(ni, nj)) {
                        out.links.insert((ni, nj));
                        noisy_aligned[ni] = true;
                        clean_aligned[nj] = true;
                        changed = true;
                    }
                }
            }
        }
    }

    if heuristic == Heuristic::GrowDiagFinal {
        for &(i, j) in &union {
            if !out.links.contains(&(i, j)) && (!noisy_aligned[i] || !clean_aligned[j]) {
                out.links.insert((i, j));
                noisy_aligned[i] = true;
                clean_aligned[j] = true;
            }
        }
    }
    Ok(out)
}

/// Lexical tables in both directions plus the symmetrized alignment of every
/// pair.
#[derive(Clone, Debug)]
pub struct AlignedCorpus<S = f64> {
    pub clean_to_noisy: LexicalTable<S>,
    pub noisy_to_clean: LexicalTable<S>,
    pub alignments: Vec<AlignmentMatrix>,
}

/// Runs EM in both directions and symmetrizes the Viterbi alignments.
pub fn align_corpus<S: Scalar>(
    corpus: &ParallelCorpus,
    iterations: usize,
    heuristic: Heuristic,
) -> Result<AlignedCorpus<S>> {
    let (c2n, n2c) = rayon::join(
        || em_ibm1::<S>(corpus, Direction::CleanToNoisy, iterations),
        || em_ibm1::<S>(corpus, Direction::NoisyToClean, iterations),
    );
    let (c2n, n2c) = (c2n?, n2c?);
    let alignments = corpus
        .pairs
        .par_iter()
        .map(|p| symmetrize(&viterbi_align(p, &c2n), &viterbi_align(p, &n2c), heuristic))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignedCorpus {
        clean_to_noisy: c2n,
        noisy_to_clean: n2c,
        alignments,
    })
}
