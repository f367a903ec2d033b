use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::records::NameRecord;
use crate::error::{Error, Result};
use crate::lexicon::SyllableLexicon;

pub const AGG: usize = 0;
pub const PAD: usize = 1;
pub const UNK: usize = 2;

const SPECIALS: [&str; 3] = ["[AGG]", "[PAD]", "[UNK]"];

/// How a record is turned into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabMode {
    /// Pinyin syllables from the record's segmentation.
    Syllable,
    /// Individual pinyin letters.
    Letter,
    /// Hanzi characters.
    HanziChar,
}

/// Token inventory with the aggregate, padding and unknown specials at
/// positions 0, 1 and 2. Data tokens follow in descending frequency, ties
/// broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from token occurrences. Tokens seen fewer than
    /// `min_count` times are left out and will map to UNK.
    pub fn from_tokens<I, S>(stream: I, min_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut seen = 0usize;
        for tok in stream {
            seen += 1;
            let tok = tok.as_ref();
            if SPECIALS.contains(&tok) {
                continue;
            }
            *counts.entry(tok.to_string()).or_default() += 1;
        }
        if seen == 0 {
            return Err(Error::InvalidInput("empty token stream".into()));
        }
        let mut data: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .collect();
        data.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self::from_ordered(data.into_iter().map(|(t, _)| t)))
    }

    /// Rebuilds a vocabulary whose data tokens are already in their final
    /// order (as stored in a checkpoint).
    pub fn from_ordered<I: IntoIterator<Item = String>>(data_tokens: I) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(data_tokens);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    /// Rebuilds from a full token list including the specials.
    pub fn from_full_list(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..3] != SPECIALS {
            return Err(Error::InvalidInput(
                "vocabulary does not start with the special tokens".into(),
            ));
        }
        let vocab = Self::from_ordered(tokens.into_iter().skip(3));
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::InvalidInput(
                "vocabulary has duplicate tokens".into(),
            ));
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Data tokens only, without the specials.
    pub fn data_tokens(&self) -> &[String] {
        &self.tokens[3..]
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or UNK.
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }
}

/// Tokens of one record in the given mode; `None` when the record has no
/// tokens in that mode (no hanzi, or an unsegmentable pinyin).
pub fn record_tokens(
    record: &NameRecord,
    mode: VocabMode,
    lex: &SyllableLexicon,
) -> Result<Option<Vec<String>>> {
    Ok(match mode {
        VocabMode::Syllable => record.segmentation(lex)?.map(|s| s.into_parts()),
        VocabMode::Letter => Some(record.pinyin.chars().map(String::from).collect()),
        VocabMode::HanziChar => record.hanzi.clone(),
    })
}

/// Builds a vocabulary over `records` in the given mode.
pub fn build_vocab(
    records: &[NameRecord],
    mode: VocabMode,
    lex: &SyllableLexicon,
    min_count: usize,
) -> Result<Vocab> {
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "no records to build a vocabulary from".into(),
        ));
    }
    let mut stream = Vec::new();
    for r in records {
        if let Some(toks) = record_tokens(r, mode, lex)? {
            stream.extend(toks);
        }
    }
    Vocab::from_tokens(stream, min_count)
}
