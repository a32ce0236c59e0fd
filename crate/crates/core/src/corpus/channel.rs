use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::{read_lines, ParallelCorpus};
use crate::error::{Error, Result};

/// Marker for an empty phrase: a deletion on the noisy side, an insertion
/// on the clean side.
pub const EPSILON: &str = "<eps>";

const SUM_TOLERANCE: f64 = 1e-9;

/// One `clean TAB noisy TAB probability` line of a channel file.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRule {
    pub clean: Vec<String>,
    pub noisy: Vec<String>,
    pub prob: f64,
}

impl ChannelRule {
    pub fn new(clean: &str, noisy: &str, prob: f64) -> Self {
        let side = |s: &str| -> Vec<String> {
            s.split_whitespace()
                .filter(|t| *t != EPSILON)
                .map(str::to_owned)
                .collect()
        };
        ChannelRule {
            clean: side(clean),
            noisy: side(noisy),
            prob,
        }
    }
}

#[derive(Clone, Debug)]
struct Realization {
    noisy: Vec<String>,
    prob: f64,
}

/// A synthetic speech-recognizer error model: for each listed clean phrase
/// a categorical distribution over noisy realizations (identity takes the
/// unlisted remainder), plus a per-token insertion distribution.
#[derive(Clone, Debug, Default)]
pub struct ConfusionChannel {
    rules: FxHashMap<Vec<String>, Vec<Realization>>,
    longest: usize,
    insertions: Vec<(String, f64)>,
}

impl ConfusionChannel {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(rules: impl IntoIterator<Item = ChannelRule>) -> Result<Self> {
        let mut channel = ConfusionChannel::default();
        for rule in rules {
            if !(0.0..=1.0).contains(&rule.prob) {
                return Err(Error::Config(format!(
                    "channel probability {} outside [0, 1]",
                    rule.prob
                )));
            }
            if rule.clean.is_empty() {
                if rule.noisy.len() != 1 {
                    return Err(Error::Config(
                        "insertion rules must insert exactly one token".into(),
                    ));
                }
                channel.insertions.push((rule.noisy[0].clone(), rule.prob));
                continue;
            }
            channel.longest = channel.longest.max(rule.clean.len());
            let dist = channel.rules.entry(rule.clean.clone()).or_default();
            match dist.iter_mut().find(|r| r.noisy == rule.noisy) {
                Some(r) => r.prob += rule.prob,
                None => dist.push(Realization {
                    noisy: rule.noisy,
                    prob: rule.prob,
                }),
            }
        }
        let total_ins: f64 = channel.insertions.iter().map(|(_, p)| p).sum();
        if total_ins > 1.0 + SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "insertion probabilities sum to {total_ins}"
            )));
        }
        for (clean, dist) in channel.rules.iter_mut() {
            let listed: f64 = dist.iter().map(|r| r.prob).sum();
            if listed > 1.0 + SUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "distribution for '{}' sums to {listed}",
                    clean.join(" ")
                )));
            }
            let rest = (1.0 - listed).max(0.0);
            match dist.iter_mut().find(|r| &r.noisy == clean) {
                Some(r) => r.prob += rest,
                None if rest > 0.0 => dist.push(Realization {
                    noisy: clean.clone(),
                    prob: rest,
                }),
                None => {}
            }
        }
        Ok(channel)
    }

    /// Parses `clean TAB noisy TAB probability` lines; `<eps>` marks an
    /// empty side, `#` starts a comment line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(origin, n + 1, "expected 3 tab-separated fields"));
            }
            let prob: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, n + 1, "bad probability"))?;
            rules.push(ChannelRule::new(fields[0], fields[1], prob));
        }
        Self::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_lines(path)?.join("\n");
        Self::parse(&text, path)
    }

    /// The full realization distribution of a listed clean phrase.
    pub fn distribution(&self, clean: &[String]) -> Option<Vec<(Vec<String>, f64)>> {
        self.rules
            .get(clean)
            .map(|d| d.iter().map(|r| (r.noisy.clone(), r.prob)).collect())
    }

    /// Corrupts one sentence. Scans left to right; at each position the
    /// longest listed clean phrase is realized. When a multi-word phrase
    /// keeps its identity realization only its first word is emitted, so the
    /// words inside remain subject to their own rules.
    pub fn corrupt_sentence<R: Rng>(&self, clean: &[String], rng: &mut R) -> Vec<String> {
        let mut noisy = Vec::with_capacity(clean.len() + 2);
        let mut i = 0;
        while i < clean.len() {
            let max = self.longest.min(clean.len() - i);
            let hit = (1..=max)
                .rev()
                .find_map(|len| self.rules.get(&clean[i..i + len]).map(|d| (len, d)));
            match hit {
                Some((len, dist)) => {
                    let r = sample(dist.iter().map(|r| r.prob), rng);
                    let chosen = &dist[r];
                    if len > 1 && chosen.noisy[..] == clean[i..i + len] {
                        noisy.push(clean[i].clone());
                        i += 1;
                    } else {
                        noisy.extend(chosen.noisy.iter().cloned());
                        i += len;
                    }
                }
                None => {
                    noisy.push(clean[i].clone());
                    i += 1;
                }
            }
            self.maybe_insert(&mut noisy, rng);
        }
        noisy
    }

    fn maybe_insert<R: Rng>(&self, noisy: &mut Vec<String>, rng: &mut R) {
        if self.insertions.is_empty() {
            return;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (tok, p) in &self.insertions {
            acc += p;
            if u < acc {
                noisy.push(tok.clone());
                return;
            }
        }
    }
}

fn sample<R: Rng>(probs: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.enumerate() {
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Corrupts every clean sentence through `channel`; deterministic in `seed`.
pub fn corrupt<S: AsRef<str>>(
    clean_corpus: &[Vec<S>],
    channel: &ConfusionChannel,
    seed: u64,
) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = ParallelCorpus::default();
    for sentence in clean_corpus {
        let clean: Vec<String> = sentence.iter().map(|s| s.as_ref().to_owned()).collect();
        let noisy = channel.corrupt_sentence(&clean, &mut rng);
        corpus.push_tokens(&noisy, &clean);
    }
    corpus
}
