use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a token in a [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ordered list of distinct token strings; position is the [`TokenId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Ingestion("vocabulary is empty".into()));
        }
        if tokens.len() > u32::MAX as usize {
            return Err(Error::Ingestion("vocabulary too large".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::Ingestion(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    /// `t0, t1, ..., t{n-1}`.
    pub fn synthetic(size: usize) -> Self {
        Self::new((0..size).map(|i| format!("t{i}")).collect()).expect("synthetic names are unique")
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token_str(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.tokens.len()
    }

    pub fn check(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|t| !self.contains(**t)) {
            Some(t) => Err(Error::domain(format!(
                "token id {t} outside vocabulary of size {}",
                self.size()
            ))),
            None => Ok(()),
        }
    }

    /// Whitespace-tokenises `text`, assigning ids in order of first appearance.
    pub fn from_corpus_text(text: &str) -> Result<(Self, Vec<TokenId>)> {
        let mut tokens = Vec::new();
        let mut index: HashMap<String, TokenId> = HashMap::new();
        let mut ids = Vec::new();
        for word in text.split_whitespace() {
            let next = TokenId(tokens.len() as u32);
            let id = *index.entry(word.to_owned()).or_insert_with(|| {
                tokens.push(word.to_owned());
                next
            });
            ids.push(id);
        }
        if ids.is_empty() {
            return Err(Error::Ingestion("corpus contains no tokens".into()));
        }
        Ok((Vocabulary { tokens, index }, ids))
    }

    /// Maps whitespace-separated words to ids, failing on unknown words.
    pub fn encode_words(&self, text: &str) -> Result<Vec<TokenId>> {
        text.split_whitespace()
            .map(|w| {
                self.get(w)
                    .ok_or_else(|| Error::domain(format!("unknown token {w:?}")))
            })
            .collect()
    }

    /// One token per line; line number is the id.
    pub fn to_lines(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::to_owned)
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_lines(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_ids_follow_first_appearance() {
        let (v, ids) = Vocabulary::from_corpus_text("a b  a\nc b").unwrap();
        assert_eq!(v.tokens(), &["a", "b", "c"]);
        assert_eq!(
            ids,
            vec![TokenId(0), TokenId(1), TokenId(0), TokenId(2), TokenId(1)]
        );
        assert_eq!(Vocabulary::from_lines(&v.to_lines()).unwrap(), v);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
        assert!(Vocabulary::new(vec![]).is_err());
        assert!(Vocabulary::from_corpus_text("   \n").is_err());
    }

    #[test]
    fn check_flags_out_of_range() {
        let v = Vocabulary::synthetic(4);
        assert!(v.check(&[TokenId(3)]).is_ok());
        assert!(v.check(&[TokenId(4)]).is_err());
    }
}
