//! Back-off n-gram language models (maximum likelihood and Witten-Bell) with
//! ARPA text serialization.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::corpus::{read_lines, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::num::{Scalar, LOG10_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Relative frequencies; unseen events get the log10 floor −99.
    Mle,
    /// Interpolated Witten-Bell, stored in back-off form.
    #[default]
    WittenBell,
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Smoothing::Mle),
            "witten-bell" | "wb" => Ok(Smoothing::WittenBell),
            other => Err(Error::Config(format!("unknown smoothing '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry<S> {
    logprob: S,
    backoff: Option<S>,
}

/// An ARPA-style back-off model over token ids.
///
/// Probabilities and back-off weights are kept at the six-decimal precision
/// of the ARPA format, so writing and re-reading a model reproduces every
/// query exactly.
#[derive(Clone, Debug)]
pub struct NGramModel<S = f64> {
    order: usize,
    grams: FxHashMap<Vec<TokenId>, Entry<S>>,
    counts: Vec<usize>,
    known: FxHashSet<TokenId>,
}

fn floor<S: Scalar>() -> S {
    S::lit(LOG10_FLOOR)
}

impl<S: Scalar> NGramModel<S> {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored n-grams per order (index 0 = unigrams).
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Predictable words: every unigram except `<s>`.
    pub fn vocabulary(&self) -> Vec<TokenId> {
        let mut v: Vec<TokenId> = self
            .known
            .iter()
            .copied()
            .filter(|&t| t != TokenId::BOS)
            .collect();
        v.sort();
        v
    }

    #[inline]
    fn map(&self, t: TokenId) -> TokenId {
        if self.known.contains(&t) {
            t
        } else {
            TokenId::UNK
        }
    }

    fn lookup(&self, key: &[TokenId]) -> Option<&Entry<S>> {
        self.grams.get(key)
    }

    fn query(&self, word: TokenId, history: &[TokenId]) -> S {
        let word = self.map(word);
        let keep = history.len().min(self.order - 1);
        let mut key: Vec<TokenId> = Vec::with_capacity(keep + 1);
        key.extend(history[history.len() - keep..].iter().map(|&t| self.map(t)));
        key.push(word);
        let mut backoff = S::zero();
        for start in 0..=keep {
            if let Some(e) = self.lookup(&key[start..]) {
                return (backoff + e.logprob).max(floor());
            }
            if let Some(bo) = self.lookup(&key[start..keep]).and_then(|e| e.backoff) {
                backoff += bo;
            }
        }
        floor()
    }

    /// Writes the model in ARPA format with six-decimal values, n-grams sorted
    /// by surface form.
    pub fn write_arpa(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_arpa_to(&mut out, vocab)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_arpa_to<W: Write>(&self, out: &mut W, vocab: &Vocabulary) -> Result<()> {
        let mut by_order: Vec<Vec<(Vec<&str>, &Entry<S>)>> = vec![Vec::new(); self.order];
        for (k, e) in &self.grams {
            by_order[k.len() - 1].push((vocab.decode(k), e));
        }
        writeln!(out, "\\data\\")?;
        for (k, grams) in by_order.iter().enumerate() {
            writeln!(out, "ngram {}={}", k + 1, grams.len())?;
        }
        for (k, grams) in by_order.iter_mut().enumerate() {
            grams.sort_by(|a, b| a.0.cmp(&b.0));
            writeln!(out, "\n\\{}-grams:", k + 1)?;
            for (words, e) in grams.iter() {
                write!(out, "{}\t{}", fmt6(e.logprob), words.join(" "))?;
                if let Some(bo) = e.backoff {
                    write!(out, "\t{}", fmt6(bo))?;
                }
                writeln!(out)?;
            }
        }
        writeln!(out, "\n\\end\\")?;
        Ok(())
    }

    /// Reads an ARPA file, interning its words into `vocab`.
    pub fn read_arpa(path: &Path, vocab: &mut Vocabulary) -> Result<Self> {
        let lines = read_lines(path)?;
        let bad = |n: usize, msg: &str| Error::parse(path, n + 1, msg);
        let mut declared: Vec<usize> = Vec::new();
        let mut section = 0usize;
        let mut in_data = false;
        let mut grams = FxHashMap::default();
        let mut seen_end = false;
        for (n, raw) in lines.iter().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                in_data = true;
                continue;
            }
            if line == "\\end\\" {
                seen_end = true;
                break;
            }
            if let Some(rest) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                section = rest.parse().map_err(|_| bad(n, "bad section header"))?;
                if section == 0 || section > declared.len() {
                    return Err(bad(n, "section order not declared in \\data\\"));
                }
                in_data = false;
                continue;
            }
            if in_data {
                let spec = line
                    .strip_prefix("ngram ")
                    .and_then(|s| s.split_once('='))
                    .ok_or_else(|| bad(n, "expected 'ngram k=count'"))?;
                let k: usize = spec.0.trim().parse().map_err(|_| bad(n, "bad order"))?;
                let c: usize = spec.1.trim().parse().map_err(|_| bad(n, "bad count"))?;
                if k != declared.len() + 1 {
                    return Err(bad(n, "orders must be declared in sequence"));
                }
                declared.push(c);
                continue;
            }
            if section == 0 {
                return Err(bad(n, "n-gram outside a section"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != section + 1 && fields.len() != section + 2 {
                return Err(bad(n, "wrong number of fields"));
            }
            let logprob: f64 = fields[0].parse().map_err(|_| bad(n, "bad log probability"))?;
            let backoff = match fields.get(section + 1) {
                Some(b) => Some(S::lit(b.parse::<f64>().map_err(|_| bad(n, "bad back-off"))?)),
                None => None,
            };
            let key = vocab.encode(&fields[1..=section]);
            grams.insert(
                key,
                Entry {
                    logprob: S::lit(logprob),
                    backoff,
                },
            );
        }
        if !seen_end {
            return Err(Error::parse(path, lines.len(), "missing \\end\\"));
        }
        let mut counts = vec![0; declared.len()];
        for k in grams.keys() {
            counts[k.len() - 1] += 1;
        }
        if counts != declared {
            return Err(Error::parse(
                path,
                1,
                format!("declared counts {declared:?} but found {counts:?}"),
            ));
        }
        if declared.is_empty() {
            return Err(Error::parse(path, 1, "no n-grams"));
        }
        let known = grams
            .keys()
            .filter(|k| k.len() == 1)
            .map(|k| k[0])
            .collect();
        Ok(NGramModel {
            order: declared.len(),
            grams,
            counts,
            known,
        })
    }
}

fn fmt6<S: Scalar>(x: S) -> String {
    let v = x.as_f64();
    format!("{:.6}", if v == 0.0 { 0.0 } else { v })
}

impl<S: Scalar> LanguageModel<S> for NGramModel<S> {
    fn context_len(&self) -> usize {
        self.order - 1
    }

    fn logprob(&self, word: TokenId, history: &[TokenId]) -> S {
        self.query(word, history)
    }
}

/// Trains a back-off model of the given order over clean sentences padded
/// with `<s>` … `</s>`.
pub fn train_ngram<S: Scalar>(
    text: &[Vec<TokenId>],
    order: usize,
    smoothing: Smoothing,
) -> Result<NGramModel<S>> {
    if order == 0 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    if text.iter().all(|s| s.is_empty()) {
        return Err(Error::Estimation("cannot train a language model on empty text".into()));
    }

    // counts[k-1]: k-gram → count, for every k-gram ending in a predicted token.
    let mut counts: Vec<FxHashMap<Vec<TokenId>, u64>> = vec![FxHashMap::default(); order];
    let mut padded = Vec::new();
    for sentence in text {
        if sentence.is_empty() {
            continue;
        }
        padded.clear();
        padded.push(TokenId::BOS);
        padded.extend_from_slice(sentence);
        padded.push(TokenId::EOS);
        for end in 1..padded.len() {
            for k in 1..=order.min(end + 1) {
                *counts[k - 1].entry(padded[end + 1 - k..=end].to_vec()).or_default() += 1;
            }
        }
    }

    // Per-context totals c(h) and distinct continuations T(h).
    let mut context: Vec<FxHashMap<Vec<TokenId>, (u64, u64)>> = vec![FxHashMap::default(); order];
    for (k, grams) in counts.iter().enumerate() {
        for (g, &c) in grams {
            let e = context[k].entry(g[..k].to_vec()).or_default();
            e.0 += c;
            e.1 += 1;
        }
    }

    let mut known: FxHashSet<TokenId> = counts[0].keys().map(|g| g[0]).collect();
    known.insert(TokenId::EOS);
    known.insert(TokenId::UNK);
    let vocab_size = known.len();
    known.insert(TokenId::BOS);

    let mut model = NGramModel {
        order,
        grams: FxHashMap::default(),
        counts: vec![0; order],
        known,
    };

    // Unigrams, in id order for determinism.
    let (total, types) = context[0][&Vec::new()];
    let mut unigrams: Vec<TokenId> = model.known.iter().copied().collect();
    unigrams.sort();
    for w in unigrams {
        let c = counts[0].get(&vec![w]).copied().unwrap_or(0);
        let logprob = if w == TokenId::BOS {
            LOG10_FLOOR
        } else {
            match smoothing {
                Smoothing::Mle if c == 0 => LOG10_FLOOR,
                Smoothing::Mle => (c as f64 / total as f64).log10(),
                Smoothing::WittenBell => {
                    let uniform = 1.0 / vocab_size as f64;
                    ((c as f64 + types as f64 * uniform) / (total + types) as f64).log10()
                }
            }
        };
        model.grams.insert(
            vec![w],
            Entry {
                logprob: S::lit(logprob).round6(),
                backoff: None,
            },
        );
    }

    for k in 2..=order {
        // Back-off weights of the (k-1)-gram contexts.
        let mut ctx: Vec<(&Vec<TokenId>, &(u64, u64))> = context[k - 1].iter().collect();
        ctx.sort_by(|a, b| a.0.cmp(b.0));
        for (h, &(c, t)) in ctx {
            let bo = match smoothing {
                Smoothing::Mle => LOG10_FLOOR,
                Smoothing::WittenBell => (t as f64 / (c + t) as f64).log10(),
            };
            if let Some(e) = model.grams.get_mut(h) {
                e.backoff = Some(S::lit(bo).round6());
            }
        }
        let mut grams: Vec<(&Vec<TokenId>, &u64)> = counts[k - 1].iter().collect();
        grams.sort_by(|a, b| a.0.cmp(b.0));
        let mut new = Vec::with_capacity(grams.len());
        for (g, &cw) in grams {
            let (c, t) = context[k - 1][&g[..k - 1]];
            let p = match smoothing {
                Smoothing::Mle => cw as f64 / c as f64,
                Smoothing::WittenBell => {
                    let lower = 10f64.powf(model.query(g[k - 1], &g[1..k - 1]).as_f64());
                    (cw as f64 + t as f64 * lower) / (c + t) as f64
                }
            };
            new.push((
                g.clone(),
                Entry {
                    logprob: S::lit(p.log10()).round6(),
                    backoff: None,
                },
            ));
        }
        model.grams.extend(new);
    }

    for g in model.grams.keys() {
        model.counts[g.len() - 1] += 1;
    }
    Ok(model)
}
