//! Word error rate, corpus BLEU and the per-length good/bad split analysis.

use std::collections::BTreeMap;
use std::hash::Hash;
use std::io::Write;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Edit operations of one hypothesis against its reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn wer(&self) -> f64 {
        if self.ref_len == 0 {
            return if self.errors() == 0 { 0.0 } else { f64::INFINITY };
        }
        self.errors() as f64 / self.ref_len as f64
    }
}

impl std::ops::AddAssign for EditCounts {
    fn add_assign(&mut self, o: Self) {
        self.substitutions += o.substitutions;
        self.insertions += o.insertions;
        self.deletions += o.deletions;
        self.ref_len += o.ref_len;
    }
}

/// Plain Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Aligns `hyp` to `reference` and counts edits. Among minimal alignments
/// the backtrace prefers the diagonal (match/substitution), then deletion,
/// then insertion.
pub fn wer<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<EditCounts> {
    if reference.is_empty() {
        return Err(Error::Contract("WER needs a nonempty reference".into()));
    }
    let (r, h) = (reference.len(), hyp.len());
    let w = h + 1;
    let mut d = vec![0usize; (r + 1) * w];
    for j in 0..=h {
        d[j] = j;
    }
    for i in 1..=r {
        d[i * w] = i;
        for j in 1..=h {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }
    let mut counts = EditCounts {
        ref_len: r,
        ..Default::default()
    };
    let (mut i, mut j) = (r, h);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let mismatch = reference[i - 1] != hyp[j - 1];
            if here == d[(i - 1) * w + j - 1] + usize::from(mismatch) {
                counts.substitutions += usize::from(mismatch);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    Ok(counts)
}

/// Per-sentence edits and their corpus aggregate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WerReport {
    pub sentences: Vec<EditCounts>,
    pub total: EditCounts,
}

impl WerReport {
    /// Corpus WER: summed errors over summed reference length.
    pub fn wer(&self) -> f64 {
        self.total.wer()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "sentence,substitutions,insertions,deletions,ref_len,wer")?;
        for (k, c) in self.sentences.iter().enumerate() {
            writeln!(
                out,
                "{k},{},{},{},{},{:.6}",
                c.substitutions,
                c.insertions,
                c.deletions,
                c.ref_len,
                c.wer()
            )?;
        }
        let t = &self.total;
        writeln!(
            out,
            "all,{},{},{},{},{:.6}",
            t.substitutions,
            t.insertions,
            t.deletions,
            t.ref_len,
            t.wer()
        )?;
        Ok(())
    }
}

fn check_sizes(hyps: usize, refs: usize) -> Result<()> {
    if hyps != refs {
        return Err(Error::Contract(format!(
            "{hyps} hypotheses for {refs} references"
        )));
    }
    Ok(())
}

pub fn corpus_wer<T: PartialEq, H: AsRef<[T]>, R: AsRef<[T]>>(hyps: &[H], refs: &[R]) -> Result<WerReport> {
    check_sizes(hyps.len(), refs.len())?;
    let mut report = WerReport::default();
    for (h, r) in hyps.iter().zip(refs) {
        let c = wer(h.as_ref(), r.as_ref())?;
        report.total += c;
        report.sentences.push(c);
    }
    Ok(report)
}

pub const BLEU_ORDER: usize = 4;

/// Additive sufficient statistics for corpus BLEU.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; BLEU_ORDER],
    pub totals: [u64; BLEU_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        for k in 0..BLEU_ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }
}

impl std::ops::SubAssign for BleuStats {
    fn sub_assign(&mut self, o: Self) {
        for k in 0..BLEU_ORDER {
            self.matches[k] -= o.matches[k];
            self.totals[k] -= o.totals[k];
        }
        self.hyp_len -= o.hyp_len;
        self.ref_len -= o.ref_len;
    }
}

fn ngram_counts<T: Hash + Eq>(s: &[T], n: usize) -> FxHashMap<&[T], u64> {
    let mut m = FxHashMap::default();
    if s.len() >= n {
        for g in s.windows(n) {
            *m.entry(g).or_default() += 1;
        }
    }
    m
}

impl BleuStats {
    /// Clipped n-gram matches of one hypothesis against one reference.
    pub fn sentence<T: Hash + Eq>(hyp: &[T], reference: &[T], max_n: usize) -> Self {
        let mut s = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=max_n.min(BLEU_ORDER) {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            s.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
            s.matches[n - 1] = h
                .iter()
                .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    /// Scores the statistics. Orders with zero matches are add-one smoothed.
    pub fn report(&self, max_n: usize) -> BleuReport {
        let max_n = max_n.clamp(1, BLEU_ORDER);
        let mut precisions = [0.0; BLEU_ORDER];
        let mut log_sum = 0.0;
        for k in 0..max_n {
            let p = if self.matches[k] == 0 {
                1.0 / (self.totals[k] + 1) as f64
            } else {
                self.matches[k] as f64 / self.totals[k] as f64
            };
            precisions[k] = p;
            log_sum += p.ln();
        }
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let brevity_penalty = if self.hyp_len == 0 {
            0.0
        } else if c < r {
            (1.0 - r / c).exp()
        } else {
            1.0
        };
        let bleu = 100.0 * brevity_penalty * (log_sum / max_n as f64).exp();
        BleuReport {
            precisions,
            brevity_penalty,
            bleu: bleu.clamp(0.0, 100.0),
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BleuReport {
    /// Modified precisions p1..p4 (after smoothing).
    pub precisions: [f64; BLEU_ORDER],
    pub brevity_penalty: f64,
    /// Corpus BLEU in [0, 100].
    pub bleu: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuReport {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "bleu,p1,p2,p3,p4,brevity_penalty,hyp_len,ref_len")?;
        let p = &self.precisions;
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.bleu, p[0], p[1], p[2], p[3], self.brevity_penalty, self.hyp_len, self.ref_len
        )?;
        Ok(())
    }
}

/// Corpus BLEU with clipped counts aggregated over all sentences.
pub fn bleu<T: Hash + Eq, H: AsRef<[T]>, R: AsRef<[T]>>(
    hyps: &[H],
    refs: &[R],
    max_n: usize,
) -> Result<BleuReport> {
    check_sizes(hyps.len(), refs.len())?;
    if refs.is_empty() {
        return Err(Error::Contract("BLEU needs a nonempty reference corpus".into()));
    }
    let mut stats = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        stats += BleuStats::sentence(h.as_ref(), r.as_ref(), max_n);
    }
    Ok(stats.report(max_n))
}

/// One reference-length bin of the split analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBin {
    pub length: usize,
    /// Mean per-sentence WER change (system − baseline) of the better half.
    pub top_delta: f64,
    /// Same for the worse half, which receives the extra sentence of odd bins.
    pub bottom_delta: f64,
    pub top_count: usize,
    pub bottom_count: usize,
}

impl SplitBin {
    pub fn diff(&self) -> f64 {
        self.top_delta - self.bottom_delta
    }

    pub fn count(&self) -> usize {
        self.top_count + self.bottom_count
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitAnalysis {
    /// Bins with at least the minimum population, by length.
    pub bins: Vec<SplitBin>,
    /// Mean delta over every top-good sentence of the reported bins.
    pub top_delta: f64,
    /// Mean delta over every bottom-bad sentence of the reported bins.
    pub bottom_delta: f64,
}

impl SplitAnalysis {
    /// `length,top_delta,bottom_delta,diff,count` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "length,top_delta,bottom_delta,diff,count")?;
        for b in &self.bins {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{}",
                b.length,
                b.top_delta,
                b.bottom_delta,
                b.diff(),
                b.count()
            )?;
        }
        Ok(())
    }
}

pub const DEFAULT_MIN_BIN_POPULATION: usize = 5;

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Splits each reference-length bin by baseline sentence WER into a
/// top-good and a bottom-bad half and reports the mean WER change the
/// system brings to each half.
pub fn split_analysis<T: PartialEq, H: AsRef<[T]>, R: AsRef<[T]>>(
    baseline_hyps: &[H],
    system_hyps: &[H],
    refs: &[R],
    min_population: usize,
) -> Result<SplitAnalysis> {
    check_sizes(baseline_hyps.len(), refs.len())?;
    check_sizes(system_hyps.len(), refs.len())?;
    let mut bins: BTreeMap<usize, Vec<(f64, usize, f64)>> = BTreeMap::new();
    for (k, r) in refs.iter().enumerate() {
        let r = r.as_ref();
        let base = wer(baseline_hyps[k].as_ref(), r)?.wer();
        let sys = wer(system_hyps[k].as_ref(), r)?.wer();
        bins.entry(r.len()).or_default().push((base, k, sys - base));
    }
    let mut out = SplitAnalysis {
        bins: Vec::new(),
        top_delta: 0.0,
        bottom_delta: 0.0,
    };
    let (mut all_top, mut all_bottom) = (Vec::new(), Vec::new());
    for (length, mut members) in bins {
        if members.len() < min_population.max(1) {
            continue;
        }
        members.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let half = members.len() / 2;
        let top: Vec<f64> = members[..half].iter().map(|m| m.2).collect();
        let bottom: Vec<f64> = members[half..].iter().map(|m| m.2).collect();
        out.bins.push(SplitBin {
            length,
            top_delta: mean(&top),
            bottom_delta: mean(&bottom),
            top_count: top.len(),
            bottom_count: bottom.len(),
        });
        all_top.extend(top);
        all_bottom.extend(bottom);
    }
    out.top_delta = mean(&all_top);
    out.bottom_delta = mean(&all_bottom);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    /// Exponential recursion over the three edit operations.
    fn brute_distance(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = brute_distance(ra, rb) + usize::from(x != y);
                let del = brute_distance(ra, b) + 1;
                let ins = brute_distance(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    #[test]
    fn identical_is_zero() {
        let c = wer(&t("a b c"), &t("a b c")).unwrap();
        assert_eq!(c.errors(), 0);
        assert_eq!(c.wer(), 0.0);
    }

    #[test]
    fn single_substitution() {
        let c = wer(&t("a x c"), &t("a b c")).unwrap();
        assert_eq!((c.substitutions, c.insertions, c.deletions), (1, 0, 0));
        assert!((c.wer() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn prefers_substitution_over_indel_pair() {
        let c = wer(&t("x"), &t("a")).unwrap();
        assert_eq!((c.substitutions, c.insertions, c.deletions), (1, 0, 0));
        let c = wer(&t("a b c d"), &t("a c")).unwrap();
        assert_eq!(c.errors(), 2);
        assert_eq!(c.insertions, 2);
        let c = wer(&t("a"), &t("a b c")).unwrap();
        assert_eq!(c.deletions, 2);
    }

    #[test]
    fn wer_may_exceed_one() {
        let c = wer(&t("x y z w"), &t("a")).unwrap();
        assert_eq!(c.errors(), 4);
        assert!(c.wer() > 1.0);
    }

    #[test]
    fn empty_reference_is_a_contract_violation() {
        let e = wer::<&str>(&t("a"), &[]).unwrap_err();
        assert_eq!(e.code(), "E_CONTRACT");
    }

    #[test]
    fn corpus_wer_is_count_ratio() {
        let hyps = [t("a"), t("x y z w v")];
        let refs = [t("b"), t("x y z w v u t s r q")];
        let r = corpus_wer(&hyps, &refs).unwrap();
        assert!((r.wer() - 6.0 / 11.0).abs() < 1e-12);
        let mean_of_sentences = (1.0 + 0.5) / 2.0;
        assert!((r.wer() - mean_of_sentences).abs() > 0.1);
    }

    #[test]
    fn bleu_identical_is_100() {
        let c = [t("the cat sat on the mat"), t("a b")];
        let r = bleu(&c, &c, 4).unwrap();
        assert_eq!(r.bleu, 100.0);
    }

    #[test]
    fn bleu_clipping() {
        let r = bleu(&[t("a a a")], &[t("a b")], 4).unwrap();
        assert!((r.precisions[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let r = bleu(&[t("a b")], &[t("a b c d")], 4).unwrap();
        assert!(r.brevity_penalty < 1.0);
        assert!((r.brevity_penalty - (1.0f64 - 2.0).exp()).abs() < 1e-12);
        let r = bleu(&[t("a b c d e")], &[t("a b c d")], 4).unwrap();
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn bleu_size_mismatch() {
        assert_eq!(bleu(&[t("a")], &[t("a"), t("b")], 4).unwrap_err().code(), "E_CONTRACT");
    }

    #[test]
    fn bleu_smooths_zero_orders() {
        let r = bleu(&[t("a b c d")], &[t("a c b d")], 4).unwrap();
        assert!(r.bleu > 0.0 && r.bleu < 100.0);
    }

    #[test]
    fn split_no_change() {
        let refs = [t("a b"), t("c d"), t("e f g")];
        let base = [t("a x"), t("c d"), t("e f")];
        let s = split_analysis(&base, &base, &refs, 1).unwrap();
        assert!(s.bins.iter().all(|b| b.top_delta == 0.0 && b.bottom_delta == 0.0));
    }

    #[test]
    fn split_orders_by_baseline_wer() {
        let refs = [t("a b"), t("c d")];
        let base = [t("a x"), t("c d")];
        let sys = [t("a b"), t("c d")];
        let s = split_analysis(&base, &sys, &refs, 1).unwrap();
        let b = &s.bins[0];
        // The 0-WER sentence (index 1) is the top-good half.
        assert_eq!((b.top_count, b.bottom_count), (1, 1));
        assert_eq!(b.top_delta, 0.0);
        assert_eq!(b.bottom_delta, -0.5);
    }

    #[test]
    fn split_improving_only_bad_half() {
        let refs = [t("a b c d"), t("e f g h"), t("i j k l"), t("m n o p")];
        let base = [t("a b c d"), t("e x y h"), t("i j k l"), t("m n o z")];
        let sys = [t("a b c d"), t("e f g h"), t("i j k l"), t("m n o p")];
        let s = split_analysis(&base, &sys, &refs, 1).unwrap();
        assert_eq!(s.bins.len(), 1);
        let b = &s.bins[0];
        assert_eq!(b.top_delta, 0.0);
        assert!(b.bottom_delta < 0.0);
        assert!((b.bottom_delta - (-0.5 - 0.25) / 2.0).abs() < 1e-12);
        let mut csv = Vec::new();
        s.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("length,top_delta,bottom_delta,diff,count\n4,"));
    }

    #[test]
    fn split_odd_bin_and_threshold() {
        let refs = [t("a"), t("b"), t("c"), t("d e")];
        let base = [t("a"), t("x"), t("c"), t("d e")];
        let s = split_analysis(&base, &base, &refs, 2).unwrap();
        assert_eq!(s.bins.len(), 1);
        assert_eq!((s.bins[0].top_count, s.bins[0].bottom_count), (1, 2));
    }

    fn small_seq() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..4, 0..=8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn distance_matches_recursion(a in small_seq(), b in small_seq()) {
            let d = brute_distance(&a, &b);
            prop_assert_eq!(edit_distance(&a, &b), d);
            if !b.is_empty() {
                prop_assert_eq!(wer(&a, &b).unwrap().errors(), d);
            }
        }

        #[test]
        fn distance_symmetry_and_triangle(a in small_seq(), b in small_seq(), c in small_seq()) {
            prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
            prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        }

        #[test]
        fn bleu_is_permutation_invariant(pairs in proptest::collection::vec((small_seq(), proptest::collection::vec(0u8..4, 1..=8)), 1..6)) {
            let hyps: Vec<Vec<u8>> = pairs.iter().map(|p| p.0.clone()).collect();
            let refs: Vec<Vec<u8>> = pairs.iter().map(|p| p.1.clone()).collect();
            let a = bleu(&hyps, &refs, 4).unwrap().bleu;
            let rh: Vec<Vec<u8>> = hyps.iter().rev().cloned().collect();
            let rr: Vec<Vec<u8>> = refs.iter().rev().cloned().collect();
            prop_assert_eq!(a, bleu(&rh, &rr, 4).unwrap().bleu);
            prop_assert!((0.0..=100.0).contains(&a));
            prop_assert_eq!(a == 100.0, hyps == refs);
        }
    }
}
