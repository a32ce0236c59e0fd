//! Minimum error rate training: exact line search over n-best lists.
//!
//! Along a direction `d` from weights `λ0` every hypothesis scores
//! `λ0·f + γ (d·f)`, a line in γ. The upper envelope of those lines gives
//! each sentence's argmax as a piecewise-constant function of γ, so the
//! corpus error can be evaluated once per interval between breakpoints.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;

use crate::corpus::TokenId;
use crate::decoder::{decode_batch, dot, DecodeResult, DecoderParams, ModelWeights, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::eval::{edit_distance, BleuStats, BLEU_ORDER};
use crate::lm::LanguageModel;
use crate::num::Scalar;
use crate::phrase::PhraseTable;

/// What MERT minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Corpus WER.
    Wer,
    /// 1 − BLEU/100 on corpus statistics.
    Bleu,
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "w" | "wer" => Ok(Criterion::Wer),
            "b" | "bleu" => Ok(Criterion::Bleu),
            _ => Err(Error::Config(format!("unknown MERT criterion `{s}` (expected W or B)"))),
        }
    }
}

/// Additive per-hypothesis statistics for both criteria.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ErrorStats {
    pub edits: u64,
    pub ref_len: u64,
    pub bleu: BleuStats,
}

impl ErrorStats {
    pub fn new(hyp: &[TokenId], reference: &[TokenId]) -> Self {
        ErrorStats {
            edits: edit_distance(hyp, reference) as u64,
            ref_len: reference.len() as u64,
            bleu: BleuStats::sentence(hyp, reference, BLEU_ORDER),
        }
    }

    pub fn error(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Wer => self.edits as f64 / self.ref_len.max(1) as f64,
            Criterion::Bleu => 1.0 - self.bleu.report(BLEU_ORDER).bleu / 100.0,
        }
    }
}

impl std::ops::AddAssign for ErrorStats {
    fn add_assign(&mut self, o: Self) {
        self.edits += o.edits;
        self.ref_len += o.ref_len;
        self.bleu += o.bleu;
    }
}

impl std::ops::SubAssign for ErrorStats {
    fn sub_assign(&mut self, o: Self) {
        self.edits -= o.edits;
        self.ref_len -= o.ref_len;
        self.bleu -= o.bleu;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolEntry {
    pub clean: Vec<TokenId>,
    pub features: [f64; NUM_FEATURES],
    pub stats: ErrorStats,
}

/// Hypotheses gathered per dev sentence across iterations.
#[derive(Clone, Debug, Default)]
pub struct NBestPool {
    refs: Vec<Vec<TokenId>>,
    entries: Vec<Vec<PoolEntry>>,
    seen: Vec<FxHashSet<Vec<TokenId>>>,
}

impl NBestPool {
    pub fn new(refs: Vec<Vec<TokenId>>) -> Self {
        let n = refs.len();
        NBestPool { refs, entries: vec![Vec::new(); n], seen: vec![FxHashSet::default(); n] }
    }

    pub fn num_sentences(&self) -> usize {
        self.refs.len()
    }

    pub fn entries(&self, sentence: usize) -> &[PoolEntry] {
        &self.entries[sentence]
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds a hypothesis unless the sentence already has that output.
    pub fn add(&mut self, sentence: usize, clean: Vec<TokenId>, features: [f64; NUM_FEATURES]) -> bool {
        if !self.seen[sentence].insert(clean.clone()) {
            return false;
        }
        let stats = ErrorStats::new(&clean, &self.refs[sentence]);
        self.entries[sentence].push(PoolEntry { clean, features, stats });
        true
    }

    /// Merges decoder n-best lists (one per sentence); returns how many
    /// hypotheses were new.
    pub fn merge<S: Scalar>(&mut self, results: &[DecodeResult<S>]) -> usize {
        let mut added = 0;
        for (i, r) in results.iter().enumerate() {
            for h in &r.nbest {
                if self.add(i, h.clean.clone(), h.features.map(|f| f.as_f64())) {
                    added += 1;
                }
            }
        }
        added
    }

    /// Index of the best-scoring entry of every sentence (first on ties).
    pub fn argmax(&self, weights: &[f64; NUM_FEATURES]) -> Vec<Option<usize>> {
        self.entries
            .iter()
            .map(|es| {
                let mut best: Option<(usize, f64)> = None;
                for (k, e) in es.iter().enumerate() {
                    let s = dot(weights, &e.features);
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((k, s));
                    }
                }
                best.map(|(k, _)| k)
            })
            .collect()
    }

    /// Corpus error of the per-sentence argmax under `weights`.
    pub fn error(&self, weights: &[f64; NUM_FEATURES], criterion: Criterion) -> f64 {
        let mut total = ErrorStats::default();
        for (i, k) in self.argmax(weights).into_iter().enumerate() {
            match k {
                Some(k) => total += self.entries[i][k].stats,
                None => total.ref_len += self.refs[i].len() as u64,
            }
        }
        total.error(criterion)
    }
}

/// Upper envelope of lines `intercept + γ·slope`: `hyps[0]` wins below
/// `breakpoints[0]`, `hyps[i]` between `breakpoints[i-1]` and
/// `breakpoints[i]`, the last one above the last breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub breakpoints: Vec<f64>,
    pub hyps: Vec<usize>,
}

impl Envelope {
    /// Builds the envelope of `(intercept, slope)` lines. Among parallel
    /// lines the higher intercept survives, then the lower index.
    pub fn new(lines: &[(f64, f64)]) -> Self {
        let mut order: Vec<usize> = (0..lines.len()).collect();
        order.sort_by(|&a, &b| {
            let (ia, sa) = lines[a];
            let (ib, sb) = lines[b];
            sa.partial_cmp(&sb)
                .unwrap_or(Ordering::Equal)
                .then(ib.partial_cmp(&ia).unwrap_or(Ordering::Equal))
                .then(a.cmp(&b))
        });
        // (line index, γ where it starts winning)
        let mut hull: Vec<(usize, f64)> = Vec::new();
        for &k in &order {
            let (ik, sk) = lines[k];
            let mut start = f64::NEG_INFINITY;
            let mut skip = false;
            while let Some(&(top, top_start)) = hull.last() {
                let (it, st) = lines[top];
                if st == sk {
                    // sorted by intercept descending within equal slopes
                    skip = true;
                    break;
                }
                let x = (it - ik) / (sk - st);
                if x <= top_start {
                    hull.pop();
                } else {
                    start = x;
                    break;
                }
            }
            if !skip {
                hull.push((k, start));
            }
        }
        Envelope {
            breakpoints: hull.iter().skip(1).map(|&(_, x)| x).collect(),
            hyps: hull.iter().map(|&(k, _)| k).collect(),
        }
    }

    /// Winning line at γ (the right-hand interval at a breakpoint).
    pub fn at(&self, gamma: f64) -> usize {
        let i = self.breakpoints.partition_point(|&b| b <= gamma);
        self.hyps[i]
    }
}

/// Exact minimization of the pool error along `λ0 + γ d`.
///
/// Returns the chosen γ (0 when the best interval contains it, otherwise
/// its midpoint, or one unit past the outermost breakpoint for unbounded
/// intervals; ties go to the smallest |γ|) and the error there.
pub fn line_search(
    pool: &NBestPool,
    origin: &[f64; NUM_FEATURES],
    direction: &[f64; NUM_FEATURES],
    criterion: Criterion,
) -> (f64, f64) {
    let envelopes: Vec<Option<Envelope>> = pool
        .entries
        .par_iter()
        .map(|es| {
            (!es.is_empty()).then(|| {
                let lines: Vec<(f64, f64)> =
                    es.iter().map(|e| (dot(origin, &e.features), dot(direction, &e.features))).collect();
                Envelope::new(&lines)
            })
        })
        .collect();

    let mut total = ErrorStats::default();
    let mut events: Vec<(f64, usize, usize)> = Vec::new();
    for (i, env) in envelopes.iter().enumerate() {
        match env {
            Some(env) => {
                total += pool.entries[i][env.hyps[0]].stats;
                for (j, &b) in env.breakpoints.iter().enumerate() {
                    events.push((b, i, j + 1));
                }
            }
            None => total.ref_len += pool.refs[i].len() as u64,
        }
    }
    if events.is_empty() {
        return (0.0, total.error(criterion));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then((a.1, a.2).cmp(&(b.1, b.2))));

    let point = |lo: f64, hi: f64| -> f64 {
        if lo < 0.0 && 0.0 < hi {
            0.0
        } else if lo == f64::NEG_INFINITY {
            hi - 1.0
        } else if hi == f64::INFINITY {
            lo + 1.0
        } else {
            0.5 * (lo + hi)
        }
    };
    let mut best_gamma = point(f64::NEG_INFINITY, events[0].0);
    let mut best_error = total.error(criterion);
    let mut consider = |gamma: f64, error: f64| {
        if error < best_error || (error == best_error && gamma.abs() < best_gamma.abs()) {
            best_gamma = gamma;
            best_error = error;
        }
    };
    let mut k = 0;
    while k < events.len() {
        let lo = events[k].0;
        while k < events.len() && events[k].0 == lo {
            let (_, i, j) = events[k];
            let env = envelopes[i].as_ref().expect("events come from envelopes");
            total -= pool.entries[i][env.hyps[j - 1]].stats;
            total += pool.entries[i][env.hyps[j]].stats;
            k += 1;
        }
        let hi = events.get(k).map_or(f64::INFINITY, |e| e.0);
        consider(point(lo, hi), total.error(criterion));
    }
    (best_gamma, best_error)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MertConfig {
    pub nbest_size: usize,
    pub max_iterations: usize,
    pub random_directions: usize,
    pub random_restarts: usize,
    /// Minimum error reduction that counts as progress.
    pub threshold: f64,
    pub seed: u64,
    pub criterion: Criterion,
    /// Features whose weight is never changed.
    pub frozen: [bool; NUM_FEATURES],
}

impl Default for MertConfig {
    fn default() -> Self {
        MertConfig {
            nbest_size: 100,
            max_iterations: 10,
            random_directions: 8,
            random_restarts: 1,
            threshold: 1e-4,
            seed: 1,
            criterion: Criterion::Wer,
            frozen: [false; NUM_FEATURES],
        }
    }
}

/// One accepted line-search step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MertStep {
    pub iteration: usize,
    /// 0..7 are the feature axes, larger ids are random directions.
    pub direction: usize,
    pub gamma: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MertOutcome<S = f64> {
    pub weights: ModelWeights<S>,
    /// Dev error of the initial weights, from a real decode.
    pub initial_error: f64,
    /// Dev error of the returned weights, from a real decode.
    pub final_error: f64,
    pub log: Vec<MertStep>,
}

impl<S: Scalar> MertOutcome<S> {
    /// Writes the `iteration,direction,gamma,error` log.
    pub fn write_log(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::file(path, e))?);
        writeln!(out, "iteration,direction,gamma,error")?;
        for s in &self.log {
            writeln!(out, "{},{},{:.6},{:.6}", s.iteration, s.direction, s.gamma, s.error)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn decoded_error<S: Scalar>(results: &[DecodeResult<S>], refs: &[Vec<TokenId>], criterion: Criterion) -> f64 {
    let hyps: Vec<Vec<TokenId>> = results.iter().map(|r| r.best.clone()).collect();
    corpus_error(&hyps, refs, criterion)
}

/// Scales weights so the largest magnitude is 1; argmaxes are unchanged.
/// Skipped when a frozen weight is nonzero, since scaling would move it.
fn normalize(w: &mut [f64; NUM_FEATURES], frozen: &[bool; NUM_FEATURES]) {
    if w.iter().zip(frozen).any(|(x, &f)| f && *x != 0.0) {
        return;
    }
    let m = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        w.iter_mut().for_each(|x| *x /= m);
    }
}

/// Coordinate and random-direction line searches until no step improves
/// the pool error by at least `threshold`.
fn optimize_on_pool(
    pool: &NBestPool,
    start: [f64; NUM_FEATURES],
    directions: &[[f64; NUM_FEATURES]],
    config: &MertConfig,
    iteration: usize,
    log: &mut Vec<MertStep>,
) -> ([f64; NUM_FEATURES], f64) {
    let mut w = start;
    let mut error = pool.error(&w, config.criterion);
    for _ in 0..100 {
        let mut best: Option<(usize, f64, f64)> = None;
        for (id, d) in directions.iter().enumerate() {
            let (gamma, e) = line_search(pool, &w, d, config.criterion);
            if best.is_none_or(|(_, _, b)| e < b) {
                best = Some((id, gamma, e));
            }
        }
        let Some((id, gamma, e)) = best else { break };
        if error - e < config.threshold {
            break;
        }
        for (x, d) in w.iter_mut().zip(&directions[id]) {
            *x += gamma * d;
        }
        normalize(&mut w, &config.frozen);
        error = e;
        log.push(MertStep { iteration, direction: id, gamma, error });
    }
    (w, error)
}

/// Tunes decoder weights on a dev set. Every candidate weight vector is
/// checked by decoding; the returned weights are the best ones actually
/// decoded, so the dev error never ends up worse than with `init`.
pub fn mert_optimize<S: Scalar, L: LanguageModel<S> + ?Sized>(
    noisy: &[Vec<TokenId>],
    refs: &[Vec<TokenId>],
    table: &PhraseTable<S>,
    lm: &L,
    init: &ModelWeights<S>,
    params: &DecoderParams,
    config: &MertConfig,
) -> Result<MertOutcome<S>> {
    if noisy.is_empty() || noisy.len() != refs.len() {
        return Err(Error::Contract(format!(
            "MERT needs a nonempty dev set with matching sides ({} noisy, {} clean)",
            noisy.len(),
            refs.len()
        )));
    }
    if !init.is_finite() {
        return Err(Error::Contract("initial weights must be finite".into()));
    }
    let params = DecoderParams { nbest_size: config.nbest_size.max(1), ..*params };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pool = NBestPool::new(refs.to_vec());
    let mut log = Vec::new();

    let mut current: [f64; NUM_FEATURES] = init.0.map(|x| x.as_f64());
    let to_weights = |w: &[f64; NUM_FEATURES]| ModelWeights::<S>::from_f64(*w);
    let mut results = decode_batch(noisy, table, lm, init, &params);
    let initial_error = decoded_error(&results, refs, config.criterion);
    let mut best = (*init, initial_error);

    for iteration in 0..config.max_iterations {
        let added = pool.merge(&results);
        if added == 0 && iteration > 0 {
            break;
        }
        let free = |j: usize| !config.frozen[j];
        let mut directions: Vec<[f64; NUM_FEATURES]> = (0..NUM_FEATURES)
            .map(|k| std::array::from_fn(|j| if j == k && free(j) { 1.0 } else { 0.0 }))
            .collect();
        for _ in 0..config.random_directions {
            let d: [f64; NUM_FEATURES] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            directions.push(std::array::from_fn(|j| if free(j) { d[j] } else { 0.0 }));
        }
        let before = pool.error(&current, config.criterion);
        let mut starts = vec![current];
        for _ in 0..config.random_restarts {
            let r: [f64; NUM_FEATURES] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            starts.push(std::array::from_fn(|j| if free(j) { r[j] } else { current[j] }));
        }
        let mut chosen: Option<([f64; NUM_FEATURES], f64, Vec<MertStep>)> = None;
        for start in starts {
            let mut steps = Vec::new();
            let (w, e) = optimize_on_pool(&pool, start, &directions, config, iteration, &mut steps);
            if chosen.as_ref().is_none_or(|c| e < c.1) {
                chosen = Some((w, e, steps));
            }
        }
        let (w, pool_error, steps) = chosen.expect("at least one start");
        if before - pool_error < config.threshold {
            break;
        }
        log.extend(steps);
        current = w;
        let weights = to_weights(&current);
        results = decode_batch(noisy, table, lm, &weights, &params);
        let e = decoded_error(&results, refs, config.criterion);
        if e < best.1 {
            best = (weights, e);
        }
    }
    Ok(MertOutcome { weights: best.0, initial_error, final_error: best.1, log })
}

/// Error of a 1-best output list under `criterion`.
pub fn corpus_error(hyps: &[Vec<TokenId>], refs: &[Vec<TokenId>], criterion: Criterion) -> f64 {
    let mut total = ErrorStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        total += ErrorStats::new(h, r);
    }
    total.error(criterion)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::lm::UniformLm;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn axis(k: usize) -> [f64; NUM_FEATURES] {
        std::array::from_fn(|j| if j == k { 1.0 } else { 0.0 })
    }

    fn feats(xs: &[f64]) -> [f64; NUM_FEATURES] {
        std::array::from_fn(|j| xs.get(j).copied().unwrap_or(0.0))
    }

    fn ids(xs: &[u32]) -> Vec<TokenId> {
        xs.iter().map(|&x| TokenId(x)).collect()
    }

    #[test]
    fn analytic_two_line_example() {
        // scores 1 + γ (error 1) and 2 − γ (error 0) cross at γ = 0.5
        let mut pool = NBestPool::new(vec![ids(&[3])]);
        pool.add(0, ids(&[4]), feats(&[1.0, 1.0]));
        pool.add(0, ids(&[3]), feats(&[2.0, -1.0]));
        let (gamma, error) = line_search(&pool, &axis(0), &axis(1), Criterion::Wer);
        assert!(gamma < 0.5);
        assert_eq!(error, 0.0);
        assert_eq!(gamma, 0.0);

        let mut flipped = NBestPool::new(vec![ids(&[3])]);
        flipped.add(0, ids(&[3]), feats(&[1.0, 1.0]));
        flipped.add(0, ids(&[4]), feats(&[2.0, -1.0]));
        let (gamma, error) = line_search(&flipped, &axis(0), &axis(1), Criterion::Wer);
        assert_eq!((gamma, error), (1.5, 0.0));
    }

    #[test]
    fn dominating_hypothesis_gives_zero_step() {
        let mut pool = NBestPool::new(vec![ids(&[3, 4])]);
        pool.add(0, ids(&[3]), feats(&[10.0, 1.0]));
        pool.add(0, ids(&[3, 4]), feats(&[0.0, 1.0]));
        let (gamma, error) = line_search(&pool, &axis(0), &axis(1), Criterion::Wer);
        assert_eq!((gamma, error), (0.0, 0.5));
    }

    #[test]
    fn degenerate_direction_keeps_current_error() {
        let mut pool = NBestPool::new(vec![ids(&[3])]);
        pool.add(0, ids(&[4]), feats(&[1.0, 2.0]));
        pool.add(0, ids(&[3]), feats(&[0.0, 2.0]));
        let (gamma, error) = line_search(&pool, &axis(0), &axis(1), Criterion::Wer);
        assert_eq!((gamma, error), (0.0, 1.0));
        assert_eq!(error, pool.error(&axis(0), Criterion::Wer));
    }

    #[test]
    fn wer_and_bleu_disagree_on_length() {
        let refs = vec![ids(&[3, 4, 5, 6, 7, 8]), ids(&[9])];
        let mut pool = NBestPool::new(refs);
        // short: 4 deletions; long: 5 insertions but no brevity penalty
        pool.add(0, ids(&[3, 4]), feats(&[1.0, 0.0]));
        pool.add(0, ids(&[3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14]), feats(&[0.0, 1.0]));
        pool.add(1, ids(&[9]), feats(&[0.0, 0.0]));
        let origin = [0.0; NUM_FEATURES];
        let d = feats(&[1.0, -1.0]);
        let (gw, ew) = line_search(&pool, &origin, &d, Criterion::Wer);
        let (gb, eb) = line_search(&pool, &origin, &d, Criterion::Bleu);
        assert!(gw > 0.0 && gb < 0.0, "{gw} {gb}");
        assert!((ew - 4.0 / 7.0).abs() < 1e-12);
        assert!(eb < 1.0 - pool_bleu(&pool, 0) / 100.0);
    }

    fn pool_bleu(pool: &NBestPool, k: usize) -> f64 {
        let mut s = pool.entries(0)[k].stats;
        s += pool.entries(1)[0].stats;
        s.bleu.report(BLEU_ORDER).bleu
    }

    #[test]
    fn pool_deduplicates_outputs() {
        let mut pool = NBestPool::new(vec![ids(&[3])]);
        assert!(pool.add(0, ids(&[3]), feats(&[1.0])));
        assert!(!pool.add(0, ids(&[3]), feats(&[2.0])));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("W".parse::<Criterion>().unwrap(), Criterion::Wer);
        assert_eq!("bleu".parse::<Criterion>().unwrap(), Criterion::Bleu);
        assert!("ter".parse::<Criterion>().is_err());
    }

    fn random_pool(seed: u64) -> (NBestPool, [f64; NUM_FEATURES], [f64; NUM_FEATURES]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let refs: Vec<Vec<TokenId>> =
            (0..n).map(|_| (0..rng.gen_range(1..=5)).map(|_| TokenId(rng.gen_range(3..8))).collect()).collect();
        let mut pool = NBestPool::new(refs);
        for i in 0..n {
            for _ in 0..rng.gen_range(1..=6) {
                let h: Vec<TokenId> = (0..rng.gen_range(0..=6)).map(|_| TokenId(rng.gen_range(3..8))).collect();
                pool.add(i, h, std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            }
        }
        let origin = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let d = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        (pool, origin, d)
    }

    fn along(origin: &[f64; NUM_FEATURES], d: &[f64; NUM_FEATURES], g: f64) -> [f64; NUM_FEATURES] {
        std::array::from_fn(|j| origin[j] + g * d[j])
    }

    #[test]
    fn line_search_matches_grid_oracle() {
        for seed in 0..20 {
            let (pool, origin, d) = random_pool(seed);
            for criterion in [Criterion::Wer, Criterion::Bleu] {
                let (gamma, error) = line_search(&pool, &origin, &d, criterion);
                assert!((pool.error(&along(&origin, &d, gamma), criterion) - error).abs() < 1e-12);
                assert!(error <= pool.error(&origin, criterion));
                let grid = (0..=10_000)
                    .map(|k| pool.error(&along(&origin, &d, -5.0 + k as f64 * 1e-3), criterion))
                    .fold(f64::INFINITY, f64::min);
                assert!(error <= grid + 1e-4, "seed {seed}: {error} vs grid {grid}");
            }
        }
    }

    proptest! {
        #[test]
        fn envelope_matches_brute_force(
            lines in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..=10),
        ) {
            let env = Envelope::new(&lines);
            prop_assert!(env.breakpoints.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(env.hyps.windows(2).all(|w| w[0] != w[1]));
            for k in 0..10_000 {
                let g = -10.0 + 20.0 * (k as f64 + 0.5) / 10_000.0;
                let best = lines.iter().map(|&(i, s)| i + g * s).fold(f64::NEG_INFINITY, f64::max);
                let (i, s) = lines[env.at(g)];
                prop_assert!((i + g * s - best).abs() < 1e-9);
            }
        }

        #[test]
        fn argmax_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
            let (pool, origin, _) = random_pool(seed);
            let scaled = origin.map(|x| x * c);
            prop_assert_eq!(pool.argmax(&origin), pool.argmax(&scaled));
        }
    }

    fn toy_task() -> (PhraseTable, Vec<Vec<TokenId>>, Vec<Vec<TokenId>>) {
        let mut v = Vocabulary::new();
        let (x, a, b) = (v.intern("x"), v.intern("a"), v.intern("b"));
        let table = PhraseTable::from_probs(vec![
            (vec![x], vec![a], [0.6; 4]),
            (vec![x], vec![b], [0.4; 4]),
        ])
        .unwrap();
        let noisy = vec![vec![x]; 8];
        let mut refs = vec![vec![b]; 6];
        refs.extend([vec![a], vec![a]]);
        (table, noisy, refs)
    }

    #[test]
    fn mert_improves_decoded_error() {
        let (table, noisy, refs) = toy_task();
        let lm = UniformLm { vocab_size: 3 };
        let config = MertConfig::default();
        let out = mert_optimize(&noisy, &refs, &table, &lm, &ModelWeights::uniform(), &DecoderParams::default(), &config)
            .unwrap();
        assert_eq!(out.initial_error, 0.75);
        assert_eq!(out.final_error, 0.25);
        assert!(!out.log.is_empty());
        let again = mert_optimize(&noisy, &refs, &table, &lm, &ModelWeights::uniform(), &DecoderParams::default(), &config)
            .unwrap();
        assert_eq!(out, again);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mert.csv");
        out.write_log(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("iteration,direction,gamma,error\n"));
    }

    #[test]
    fn mert_rejects_mismatched_dev() {
        let (table, noisy, _) = toy_task();
        let r = mert_optimize(&noisy, &[], &table, &UniformLm { vocab_size: 3 }, &ModelWeights::uniform(),
            &DecoderParams::default(), &MertConfig::default());
        assert!(r.is_err());
    }
}
