use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Gender, NameRecord, Vocab, VocabMode, AGG};
use crate::error::{Error, Result};
use crate::lexicon::{canonical_segment, SyllableLexicon};

/// Longest pinyin syllable in letters; bounds the letter-mode sequence.
const LETTERS_PER_SYLLABLE: usize = 6;

/// How pinyin names become student tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    #[default]
    Syllable,
    Letter,
}

impl TokenizerMode {
    pub(crate) fn code(self) -> u8 {
        match self {
            TokenizerMode::Syllable => 0,
            TokenizerMode::Letter => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TokenizerMode::Syllable),
            1 => Some(TokenizerMode::Letter),
            _ => None,
        }
    }
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerMode::Syllable => "syllable",
            TokenizerMode::Letter => "letter",
        })
    }
}

impl FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "syllable" => Ok(TokenizerMode::Syllable),
            "letter" => Ok(TokenizerMode::Letter),
            other => Err(Error::Config(format!(
                "tokenizer must be syllable or letter, got {other:?}"
            ))),
        }
    }
}

/// One record in index form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    /// Student tokens, aggregate token first.
    pub pinyin: Vec<usize>,
    /// Teacher tokens, aggregate token first.
    pub hanzi: Option<Vec<usize>>,
    /// Hanzi id for each syllable position (empty in letter mode).
    pub char_targets: Vec<usize>,
    pub label: Gender,
}

/// Vocabularies plus the rules turning names into token sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct NameEncoder {
    pub mode: TokenizerMode,
    pub pinyin_vocab: Vocab,
    pub hanzi_vocab: Vocab,
    /// Maximum number of syllables (characters) per name.
    pub max_len: usize,
}

impl NameEncoder {
    /// Builds both vocabularies from `records`.
    pub fn build(
        records: &[NameRecord],
        mode: TokenizerMode,
        lex: &SyllableLexicon,
        min_count: usize,
        max_len: usize,
    ) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::Config("max_len must be positive".into()));
        }
        let pinyin_mode = match mode {
            TokenizerMode::Syllable => VocabMode::Syllable,
            TokenizerMode::Letter => VocabMode::Letter,
        };
        let pinyin_vocab = crate::corpus::build_vocab(records, pinyin_mode, lex, min_count)?;
        let hanzi: Vec<&String> = records
            .iter()
            .filter_map(|r| r.hanzi.as_ref())
            .flatten()
            .collect();
        let hanzi_vocab = if hanzi.is_empty() {
            Vocab::from_ordered(std::iter::empty())
        } else {
            Vocab::from_tokens(hanzi, min_count)?
        };
        Ok(Self {
            mode,
            pinyin_vocab,
            hanzi_vocab,
            max_len,
        })
    }

    /// Longest student token sequence excluding the aggregate token.
    pub fn sequence_limit(&self) -> usize {
        match self.mode {
            TokenizerMode::Syllable => self.max_len,
            TokenizerMode::Letter => self.max_len * LETTERS_PER_SYLLABLE,
        }
    }

    /// Positional table size covering both student and teacher inputs.
    pub fn max_positions(&self) -> usize {
        self.sequence_limit().max(self.max_len) + 1
    }

    /// Index form of a labeled record. `Ok(None)` when the pinyin cannot be
    /// aligned to the record's characters; an error when `require_hanzi` is
    /// set and the characters are missing.
    pub fn training_example(
        &self,
        record: &NameRecord,
        lex: &SyllableLexicon,
        require_hanzi: bool,
        row: usize,
    ) -> Result<Option<TrainingExample>> {
        if require_hanzi && record.hanzi.is_none() {
            return Err(Error::MissingHanzi(row));
        }
        let hanzi = record.hanzi.as_ref().map(|h| {
            let mut ids = vec![AGG];
            ids.extend(h.iter().take(self.max_len).map(|c| self.hanzi_vocab.id(c)));
            ids
        });
        let (pinyin, char_targets) = match self.mode {
            TokenizerMode::Syllable => {
                let Some(seg) = record.segmentation(lex)? else {
                    return Ok(None);
                };
                let mut ids = vec![AGG];
                ids.extend(
                    seg.parts()
                        .iter()
                        .take(self.max_len)
                        .map(|s| self.pinyin_vocab.id(s)),
                );
                let targets = hanzi.as_ref().map(|h| h[1..].to_vec()).unwrap_or_default();
                (ids, targets)
            }
            TokenizerMode::Letter => (self.letter_tokens(&record.pinyin), Vec::new()),
        };
        Ok(Some(TrainingExample {
            pinyin,
            hanzi,
            char_targets,
            label: record.gender,
        }))
    }

    fn letter_tokens(&self, text: &str) -> Vec<usize> {
        let mut ids = vec![AGG];
        ids.extend(
            text.chars()
                .take(self.sequence_limit())
                .map(|c| self.pinyin_vocab.id(&c.to_string())),
        );
        ids
    }

    /// Student tokens for free text at prediction time. Spaces, hyphens and
    /// apostrophes are dropped and letters lowercased; names the lexicon
    /// cannot split fall back to letters.
    pub fn inference_tokens(&self, text: &str, lex: &SyllableLexicon) -> Result<Vec<usize>> {
        let cleaned: String = text
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '\'' | '\u{2019}') && !c.is_whitespace())
            .flat_map(char::to_lowercase)
            .collect();
        if cleaned.is_empty() {
            return Err(Error::InvalidInput("empty name".into()));
        }
        if self.mode == TokenizerMode::Syllable && cleaned.chars().all(|c| c.is_ascii_alphabetic())
        {
            if let Some(seg) = canonical_segment(&cleaned, lex, None)? {
                let mut ids = vec![AGG];
                ids.extend(
                    seg.parts()
                        .iter()
                        .take(self.max_len)
                        .map(|s| self.pinyin_vocab.id(s)),
                );
                return Ok(ids);
            }
        }
        Ok(self.letter_tokens(&cleaned))
    }
}
