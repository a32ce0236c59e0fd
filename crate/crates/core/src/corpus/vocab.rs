use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

/// Dense integer id of a surface token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const UNK: TokenId = TokenId(2);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Sentence boundary markers; these never appear inside a sentence.
    #[inline]
    pub fn is_boundary(self) -> bool {
        self == Self::BOS || self == Self::EOS
    }

    #[inline]
    pub fn is_reserved(self) -> bool {
        self.0 <= Self::UNK.0
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub const BOS_WORD: &str = "<s>";
pub const EOS_WORD: &str = "</s>";
pub const UNK_WORD: &str = "<unk>";

/// Bidirectional token ↔ id map. Ids 0..3 are reserved for `<s>`, `</s>` and
/// `<unk>`; every other surface form receives the next free id on first sight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: FxHashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut vocab = Vocabulary {
            words: Vec::new(),
            index: FxHashMap::default(),
        };
        for w in [BOS_WORD, EOS_WORD, UNK_WORD] {
            vocab.push(w);
        }
        vocab
    }

    fn push(&mut self, word: &str) -> TokenId {
        let id = TokenId(self.words.len() as u32);
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn intern(&mut self, word: &str) -> TokenId {
        match self.index.get(word) {
            Some(&id) => id,
            None => self.push(word),
        }
    }

    pub fn get(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    /// Id of `word`, or `<unk>` when it was never registered.
    pub fn get_or_unk(&self, word: &str) -> TokenId {
        self.get(word).unwrap_or(TokenId::UNK)
    }

    pub fn word(&self, id: TokenId) -> &str {
        self.words.get(id.index()).map_or(UNK_WORD, String::as_str)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.words.len()
    }

    /// Number of registered ids, reserved markers included.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 3
    }

    pub fn encode<S: AsRef<str>>(&mut self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.intern(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<&str> {
        ids.iter().map(|&id| self.word(id)).collect()
    }

    pub fn render(&self, ids: &[TokenId]) -> String {
        self.decode(ids).join(" ")
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (TokenId(i as u32), w.as_str()))
    }
}
