//! A small synthetic correction task: a 50-word probabilistic grammar for
//! clean sentences and a fixed confusion channel that corrupts them.
//!
//! Every word is substituted with probability 0.15 (mostly by misspelled
//! non-words), deleted with probability 0.03, and followed by a filler
//! `uh`/`um` with probability 0.02. Two confusions cross phrase boundaries:
//! `iraq` → `eye rack` and `texas` → `tex us`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use crate::corpus::{corrupt, ChannelRule, ConfusionChannel, ParallelCorpus, TokenId, Vocabulary, EPSILON};

const SUBJECTS: &[&str] = &["i", "you", "we", "they", "he", "she", "people"];
const VERBS: &[&str] = &["think", "know", "went", "saw", "want", "like", "live", "work", "heard", "said"];
const DETERMINERS: &[&str] = &["the", "a", "this", "my"];
const NOUNS: &[&str] = &["war", "news", "country", "government", "army", "family", "school", "job", "money", "city"];
const PLACES: &[&str] = &["iraq", "america", "texas", "china"];
const PREPOSITIONS: &[&str] = &["in", "to", "about", "from"];
const ADVERBS: &[&str] = &["really", "just", "never", "always"];
const OTHERS: &[&str] = &["that", "it", "was", "is", "born", "good", "bad"];

pub const SUBSTITUTION_RATE: f64 = 0.15;
pub const DELETION_RATE: f64 = 0.03;
pub const INSERTION_RATE: f64 = 0.02;
pub const FILLERS: [&str; 2] = ["uh", "um"];

/// The 50 clean words of the grammar.
pub fn grammar_words() -> Vec<&'static str> {
    [SUBJECTS, VERBS, DETERMINERS, NOUNS, PLACES, PREPOSITIONS, ADVERBS, OTHERS].concat()
}

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("nonempty word class")
}

/// One sentence from the grammar.
pub fn generate_sentence<R: Rng>(rng: &mut R) -> Vec<String> {
    let mut s: Vec<&str> = Vec::new();
    let subject = pick(rng, SUBJECTS);
    match rng.gen_range(0..100) {
        0..=24 => {
            s.extend([subject, pick(rng, VERBS), pick(rng, DETERMINERS), pick(rng, NOUNS)]);
        }
        25..=44 => {
            s.extend([subject, pick(rng, &["went", "live", "work"]), pick(rng, &["in", "to", "from"])]);
            s.push(pick(rng, PLACES));
        }
        45..=59 => {
            s.extend([subject, "was", "born", "in", pick(rng, PLACES)]);
        }
        60..=74 => {
            s.extend([subject, pick(rng, &["think", "know", "said", "heard"]), "that"]);
            s.extend([pick(rng, DETERMINERS), pick(rng, NOUNS), "is", pick(rng, &["good", "bad"])]);
        }
        75..=89 => {
            s.extend([subject, pick(rng, ADVERBS), pick(rng, &["want", "like", "saw", "heard"])]);
            s.extend([pick(rng, DETERMINERS), pick(rng, NOUNS)]);
            if rng.gen_bool(0.5) {
                s.extend([pick(rng, &["in", "from", "about"]), pick(rng, PLACES)]);
            }
        }
        _ => {
            s.extend(["it", "was", pick(rng, &["really", "just"]), pick(rng, &["good", "bad"])]);
            if rng.gen_bool(0.5) {
                s.extend(["in", pick(rng, PLACES)]);
            }
        }
    }
    s.into_iter().map(str::to_owned).collect()
}

/// `n` sentences, deterministic in `seed`.
pub fn generate_sentences(n: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| generate_sentence(&mut rng)).collect()
}

/// Misspellings outside the clean vocabulary: the last letter doubled, and
/// the first vowel replaced.
fn misspellings(word: &str, taken: &mut FxHashSet<String>) -> [String; 2] {
    let mut fresh = |mut w: String| {
        while taken.contains(&w) {
            w.push('h');
        }
        taken.insert(w.clone());
        w
    };
    let doubled = fresh(format!("{word}{}", word.chars().last().unwrap_or('x')));
    let swapped: String = match word.find(|c: char| "aeiou".contains(c)) {
        Some(k) => {
            let v = word.as_bytes()[k] as char;
            let r = match v {
                'a' => 'e',
                'e' => 'i',
                'i' => 'e',
                'o' => 'u',
                _ => 'o',
            };
            format!("{}{r}{}", &word[..k], &word[k + 1..])
        }
        None => format!("{word}e"),
    };
    [doubled, fresh(swapped)]
}

/// Rules of the fixed synthetic channel.
pub fn channel_rules() -> Vec<ChannelRule> {
    let words = grammar_words();
    let mut taken: FxHashSet<String> = words.iter().map(|w| w.to_string()).collect();
    taken.extend(FILLERS.iter().map(|w| w.to_string()));
    let mut rules = Vec::new();
    for w in &words {
        let [a, b] = misspellings(w, &mut taken);
        match *w {
            "iraq" => {
                rules.push(ChannelRule::new(w, "eye rack", 0.10));
                rules.push(ChannelRule::new(w, &a, 0.05));
            }
            "texas" => {
                rules.push(ChannelRule::new(w, "tex us", 0.10));
                rules.push(ChannelRule::new(w, &a, 0.05));
            }
            _ => {
                rules.push(ChannelRule::new(w, &a, 0.10));
                rules.push(ChannelRule::new(w, &b, 0.05));
            }
        }
        rules.push(ChannelRule::new(w, EPSILON, DELETION_RATE));
    }
    for f in FILLERS {
        rules.push(ChannelRule::new(EPSILON, f, INSERTION_RATE / FILLERS.len() as f64));
    }
    rules
}

pub fn synthetic_channel() -> ConfusionChannel {
    ConfusionChannel::new(channel_rules()).expect("built-in channel is valid")
}

/// The channel in the `clean TAB noisy TAB probability` file format.
pub fn channel_text() -> String {
    let side = |s: &[String]| if s.is_empty() { EPSILON.to_owned() } else { s.join(" ") };
    channel_rules()
        .iter()
        .map(|r| format!("{}\t{}\t{}\n", side(&r.clean), side(&r.noisy), r.prob))
        .collect()
}

/// Train, dev and test corpora from the grammar through the synthetic
/// channel, sharing one vocabulary.
#[derive(Clone, Debug)]
pub struct SyntheticTask {
    pub train: ParallelCorpus,
    pub dev: ParallelCorpus,
    pub test: ParallelCorpus,
}

pub fn synthetic_task(train: usize, dev: usize, test: usize, seed: u64) -> SyntheticTask {
    let total = train + dev + test;
    // a few pairs lose every noisy token and are dropped, so over-generate
    let clean = generate_sentences(total + total / 20 + 10, seed);
    let all = corrupt(&clean, &synthetic_channel(), seed.wrapping_add(1));
    let mut pairs = all.pairs.into_iter();
    let mut take = |n: usize| {
        let mut c = ParallelCorpus::new(all.vocab.clone());
        c.pairs.extend(pairs.by_ref().take(n));
        c
    };
    SyntheticTask { train: take(train), dev: take(dev), test: take(test) }
}

/// Noisy/clean pairs where clean word i is a function of noisy token i + 2
/// and the clean history carries no information.
pub fn source_dependent_corpus(
    vocab: &mut Vocabulary,
    sentences: usize,
    seed: u64,
) -> (Vec<Vec<TokenId>>, Vec<Vec<TokenId>>) {
    let src: Vec<TokenId> = (0..5).map(|i| vocab.intern(&format!("n{i}"))).collect();
    let tgt: Vec<TokenId> = (0..5).map(|i| vocab.intern(&format!("c{i}"))).collect();
    let filler = vocab.intern("z");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = Vec::new();
    let mut clean = Vec::new();
    for _ in 0..sentences {
        let n: Vec<usize> = (0..rng.gen_range(4..=8)).map(|_| rng.gen_range(0..5)).collect();
        clean.push((0..n.len()).map(|i| n.get(i + 2).map_or(filler, |&k| tgt[k])).collect());
        noisy.push(n.into_iter().map(|k| src[k]).collect());
    }
    (noisy, clean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::corpus_wer;
    use std::path::Path;

    #[test]
    fn grammar_has_fifty_distinct_words() {
        let words = grammar_words();
        assert_eq!(words.len(), 50);
        assert_eq!(words.iter().collect::<FxHashSet<_>>().len(), 50);
        assert!(words.contains(&"iraq"));
        let used: FxHashSet<String> = generate_sentences(2000, 3).into_iter().flatten().collect();
        assert_eq!(used.len(), 50);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_sentences(50, 9), generate_sentences(50, 9));
        assert_ne!(generate_sentences(50, 9), generate_sentences(50, 10));
    }

    #[test]
    fn substitutions_are_non_words() {
        let words: FxHashSet<&str> = grammar_words().into_iter().collect();
        let mut noisy = FxHashSet::default();
        for r in channel_rules() {
            for n in &r.noisy {
                assert!(!words.contains(n.as_str()), "{n}");
                assert!(noisy.insert(n.clone()) || ["rack", "us"].contains(&n.as_str()), "{n} reused");
            }
        }
    }

    #[test]
    fn channel_rates() {
        let ch = synthetic_channel();
        for w in grammar_words() {
            let dist = ch.distribution(&[w.to_owned()]).unwrap();
            let keep: f64 = dist.iter().filter(|(n, _)| n == &[w.to_owned()]).map(|(_, p)| p).sum();
            assert!((keep - (1.0 - SUBSTITUTION_RATE - DELETION_RATE)).abs() < 1e-12);
        }
        let parsed = ConfusionChannel::parse(&channel_text(), Path::new("synthetic")).unwrap();
        assert_eq!(parsed.distribution(&["iraq".into()]), ch.distribution(&["iraq".into()]));
    }

    #[test]
    fn corruption_wer_near_twenty_percent() {
        let clean = generate_sentences(3000, 1);
        let corpus = corrupt(&clean, &synthetic_channel(), 2);
        let w = corpus_wer(&corpus.noisy_sentences(), &corpus.clean_sentences()).unwrap().wer();
        assert!((0.17..0.23).contains(&w), "{w}");
    }

    #[test]
    fn task_splits_share_vocabulary() {
        let t = synthetic_task(200, 30, 40, 5);
        assert_eq!((t.train.len(), t.dev.len(), t.test.len()), (200, 30, 40));
        assert_eq!(t.train.vocab, t.test.vocab);
        assert_ne!(t.train.pairs[0], t.dev.pairs[0]);
    }
}
