//! Word-level vocabulary with per-character digits.
//!
//! A number is written as a start digit followed by continuation digits
//! (`8`, `##7` for 87), so adjacent numbers never merge when decoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::normalize;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const REASON_OPEN: usize = 3;
pub const REASON_CLOSE: usize = 4;
pub const SUMMARY_OPEN: usize = 5;
pub const SUMMARY_CLOSE: usize = 6;

pub const SPECIAL_TOKENS: [&str; 7] = [
    "<pad>",
    "<bos>",
    "<eos>",
    "<reason>",
    "</reason>",
    "<summary>",
    "</summary>",
];

const CONTINUATION: &str = "##";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Specials, then digits and continuation digits, then every non-numeric
    /// word found in `texts`, sorted.
    pub fn build<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut words: Vec<String> = texts
            .into_iter()
            .flat_map(normalize::words)
            .filter(|w| !is_number(w))
            .collect();
        words.sort();
        words.dedup();
        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend((0..10).map(|d| d.to_string()));
        tokens.extend((0..10).map(|d| format!("{CONTINUATION}{d}")));
        tokens.extend(words);
        Self::from(tokens)
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

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn is_special(id: usize) -> bool {
        id < SPECIAL_TOKENS.len()
    }

    /// True for a digit that continues a number.
    pub fn is_continuation(&self, id: usize) -> bool {
        self.token(id).is_some_and(|t| t.starts_with(CONTINUATION))
    }

    /// True for a digit that starts a number or continues one.
    pub fn is_digit(&self, id: usize) -> bool {
        self.token(id)
            .map(|t| t.strip_prefix(CONTINUATION).unwrap_or(t))
            .is_some_and(|t| t.len() == 1 && is_number(t))
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>, ModelError> {
        let mut ids = Vec::new();
        for w in normalize::words(text) {
            if is_number(&w) {
                for (i, ch) in w.chars().enumerate() {
                    let tok = if i == 0 { ch.to_string() } else { format!("{CONTINUATION}{ch}") };
                    ids.push(self.index[&tok]);
                }
            } else {
                ids.push(self.id(&w).ok_or_else(|| ModelError::OutOfVocabulary(w.clone()))?);
            }
        }
        Ok(ids)
    }

    /// Normalized text for `ids`; special tokens are skipped.
    pub fn decode(&self, ids: &[usize]) -> String {
        let mut out = String::new();
        for &id in ids {
            if Self::is_special(id) {
                continue;
            }
            let Some(tok) = self.token(id) else { continue };
            if let Some(d) = tok.strip_prefix(CONTINUATION) {
                out.push_str(d);
            } else {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(tok);
            }
        }
        out
    }
}

fn is_number(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_digit())
}
