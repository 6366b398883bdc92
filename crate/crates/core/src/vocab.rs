use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";

/// Index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ordered, duplicate-free token strings. Always contains `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() > u32::MAX as usize {
            return Err(Error::BadVocabulary("too many tokens".to_string()));
        }
        let mut index = BTreeMap::new();
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::BadVocabulary(alloc::format!("duplicate token {tok:?}")));
            }
        }
        if !index.contains_key(UNK_TOKEN) {
            return Err(Error::BadVocabulary(alloc::format!("missing {UNK_TOKEN} entry")));
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn unk(&self) -> TokenId {
        self.index[UNK_TOKEN]
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.tokens.len()
    }

    /// Looks up every token string.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| Error::UnknownToken(t.as_ref().to_string()))
            })
            .collect()
    }

    /// Concatenates token strings without separators.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter().filter_map(|&id| self.token(id)).collect()
    }

    pub fn token_strings(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .filter_map(|&id| self.token(id).map(ToString::to_string))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bijection_and_unk() {
        let v = Vocabulary::new(toks(&["<unk>", "ye", "s", "no"])).unwrap();
        assert_eq!(v.unk(), TokenId(0));
        assert_eq!(v.encode(&["ye", "s"]).unwrap(), vec![TokenId(1), TokenId(2)]);
        assert_eq!(v.decode(&[TokenId(1), TokenId(2)]), "yes");
        assert!(v.contains(TokenId(3)));
        assert!(!v.contains(TokenId(4)));
    }

    #[test]
    fn rejects_duplicates_and_missing_unk() {
        assert!(Vocabulary::new(toks(&["<unk>", "a", "a"])).is_err());
        assert!(Vocabulary::new(toks(&["a", "b"])).is_err());
    }

    #[test]
    fn unknown_token_errors() {
        let v = Vocabulary::new(toks(&["<unk>", "a"])).unwrap();
        assert_eq!(v.encode(&["b"]), Err(Error::UnknownToken("b".to_string())));
    }
}
