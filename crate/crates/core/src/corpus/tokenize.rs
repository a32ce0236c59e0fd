use super::vocab::{BOS_WORD, EOS_WORD};

/// Punctuation detached from the end of a token.
const TERMINAL_PUNCT: &[char] = &['.', ',', '?', '!', ';', ':', '"'];

pub const DEFAULT_EVENT_TAGS: &[&str] = &[
    "[laughter]",
    "[noise]",
    "[sigh]",
    "[cough]",
    "[lipsmack]",
    "[mn]",
];

/// Controls which markup is stripped from raw transcript lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CleaningPolicy {
    /// Bracketed non-verbal event tags removed from the text (lowercase).
    pub event_tags: Vec<String>,
    pub lowercase: bool,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        CleaningPolicy {
            event_tags: DEFAULT_EVENT_TAGS.iter().map(|s| s.to_string()).collect(),
            lowercase: true,
        }
    }
}

impl CleaningPolicy {
    fn is_event_tag(&self, token: &str) -> bool {
        self.event_tags.iter().any(|t| t == token)
    }
}

/// Lowercases, splits on whitespace, drops event tags and sentence markers,
/// and detaches terminal punctuation. Word-internal and leading apostrophes
/// stay attached (`'cause`, `don't`).
pub fn tokenize_and_clean(raw_line: &str, policy: &CleaningPolicy) -> Vec<String> {
    let line = if policy.lowercase {
        raw_line.to_lowercase()
    } else {
        raw_line.to_owned()
    };
    let mut out = Vec::new();
    for word in line.split_whitespace() {
        if policy.is_event_tag(word) || word == BOS_WORD || word == EOS_WORD {
            continue;
        }
        split_punctuation(word, &mut out);
    }
    out
}

fn split_punctuation(word: &str, out: &mut Vec<String>) {
    let mut body = word;
    if let Some(rest) = body.strip_prefix('"') {
        out.push("\"".to_owned());
        body = rest;
    }
    let mut trailing = Vec::new();
    while let Some(c) = body.chars().last().filter(|c| TERMINAL_PUNCT.contains(c)) {
        trailing.push(c.to_string());
        body = &body[..body.len() - c.len_utf8()];
    }
    if !body.is_empty() {
        out.push(body.to_owned());
    }
    out.extend(trailing.into_iter().rev());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> Vec<String> {
        tokenize_and_clean(s, &CleaningPolicy::default())
    }

    #[test]
    fn removes_event_tags() {
        assert_eq!(
            tok("wasters clams [laughter] and mushrooms"),
            ["wasters", "clams", "and", "mushrooms"]
        );
        assert_eq!(tok("[NOISE] hello [cough]"), ["hello"]);
    }

    #[test]
    fn empty_line() {
        assert!(tok("").is_empty());
        assert!(tok("   [noise]  ").is_empty());
    }

    #[test]
    fn keeps_apostrophes() {
        assert_eq!(tok("I guess 'cause"), ["i", "guess", "'cause"]);
        assert_eq!(tok("don't"), ["don't"]);
    }

    #[test]
    fn detaches_terminal_punctuation() {
        assert_eq!(tok("Hello, world."), ["hello", ",", "world", "."]);
        assert_eq!(tok("really?!"), ["really", "?", "!"]);
        assert_eq!(tok("\"quoted\""), ["\"", "quoted", "\""]);
        assert_eq!(tok("..."), [".", ".", "."]);
        assert_eq!(tok("3.5"), ["3.5"]);
    }

    #[test]
    fn unlisted_brackets_are_kept() {
        assert_eq!(tok("[music] on"), ["[music]", "on"]);
        let policy = CleaningPolicy {
            event_tags: vec!["[music]".into()],
            lowercase: true,
        };
        assert_eq!(tokenize_and_clean("[music] on [noise]", &policy), ["on", "[noise]"]);
    }

    #[test]
    fn drops_sentence_markers() {
        assert_eq!(tok("<s> a b </s>"), ["a", "b"]);
        assert_eq!(tok("<unk> b"), ["<unk>", "b"]);
    }
}
