//! Synthetic name corpora.
//!
//! Each character carries a female probability and maps to one syllable;
//! several characters share a syllable, so the pinyin spelling of a name
//! hides gender cues that its characters reveal.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::{Gender, NameRecord};
use crate::error::{Error, Result};
use crate::lexicon::SyllableLexicon;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthChar {
    pub hanzi: String,
    pub syllable: String,
    pub female_prob: f64,
    /// Relative sampling frequency.
    #[serde(default = "one")]
    pub weight: f64,
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub characters: Vec<SynthChar>,
    /// Relative weights of given-name lengths 1, 2 and 3.
    pub length_weights: [f64; 3],
    pub count: usize,
}

impl SynthSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.characters.is_empty() {
            return Err(Error::InvalidInput(
                "synthetic spec has no characters".into(),
            ));
        }
        for c in &self.characters {
            if c.hanzi.chars().count() != 1 {
                return Err(Error::InvalidInput(format!(
                    "{:?} is not a single character",
                    c.hanzi
                )));
            }
            if c.syllable.is_empty() || !c.syllable.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(Error::InvalidInput(format!(
                    "invalid syllable {:?}",
                    c.syllable
                )));
            }
            if !(0.0..=1.0).contains(&c.female_prob) {
                return Err(Error::InvalidInput(format!(
                    "female probability {} of {:?} outside [0, 1]",
                    c.female_prob, c.hanzi
                )));
            }
        }
        Ok(())
    }

    /// A seeded random spec in the spirit of one spelling, many characters:
    /// `syllables` syllables drawn from the lexicon, each shared by two to
    /// five characters with strongly gendered or neutral female
    /// probabilities and uneven frequencies.
    ///
    /// Only syllables that start with a consonant other than `n`, `g`, `r`
    /// and end in a vowel are used, so concatenated names split back into
    /// their generating syllables.
    pub fn ambiguous_mandarin(syllables: usize, count: usize, seed: u64) -> Self {
        let lex = SyllableLexicon::mandarin();
        let mut pool: Vec<&str> = lex
            .syllables()
            .into_iter()
            .filter(|s| {
                let first = s.as_bytes()[0];
                let last = s.as_bytes()[s.len() - 1];
                !b"aeiouvngr".contains(&first) && b"aeiouv".contains(&last)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        pool.truncate(syllables);
        pool.sort_unstable();

        const LEVELS: [f64; 6] = [0.05, 0.1, 0.2, 0.8, 0.9, 0.95];
        let mut next_char = 0x4E00u32;
        let mut characters = Vec::new();
        for syl in pool {
            let n = rng.gen_range(2..=5);
            for _ in 0..n {
                let female_prob = if rng.gen_bool(0.2) {
                    0.5
                } else {
                    *LEVELS.choose(&mut rng).expect("non-empty")
                };
                characters.push(SynthChar {
                    hanzi: char::from_u32(next_char).expect("CJK block").to_string(),
                    syllable: syl.to_string(),
                    female_prob,
                    weight: rng.gen_range(0.2..1.0),
                });
                next_char += 1;
            }
        }
        Self {
            characters,
            length_weights: [0.1, 0.8, 0.1],
            count,
        }
    }
}

/// Samples `spec.count` independent records. Gender is drawn with the mean
/// female probability of the name's characters.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<Vec<NameRecord>> {
    spec.validate()?;
    if spec.count == 0 {
        return Ok(Vec::new());
    }
    let chars = WeightedIndex::new(spec.characters.iter().map(|c| c.weight))
        .map_err(|e| Error::InvalidInput(format!("character weights: {e}")))?;
    let lengths = WeightedIndex::new(spec.length_weights)
        .map_err(|e| Error::InvalidInput(format!("length weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let len = lengths.sample(&mut rng) + 1;
        let picked: Vec<&SynthChar> = (0..len)
            .map(|_| &spec.characters[chars.sample(&mut rng)])
            .collect();
        let p_female = picked.iter().map(|c| c.female_prob).sum::<f64>() / len as f64;
        let gender = if rng.gen_bool(p_female) {
            Gender::Female
        } else {
            Gender::Male
        };
        out.push(NameRecord {
            pinyin: picked.iter().map(|c| c.syllable.as_str()).collect(),
            hanzi: Some(picked.iter().map(|c| c.hanzi.clone()).collect()),
            gender,
            source: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::records::write_records;

    fn yan_spec(count: usize) -> SynthSpec {
        SynthSpec {
            characters: vec![
                SynthChar {
                    hanzi: "妍".into(),
                    syllable: "yan".into(),
                    female_prob: 0.9,
                    weight: 1.0,
                },
                SynthChar {
                    hanzi: "炎".into(),
                    syllable: "yan".into(),
                    female_prob: 0.1,
                    weight: 1.0,
                },
            ],
            length_weights: [1.0, 0.0, 0.0],
            count,
        }
    }

    #[test]
    fn pinyin_is_ambiguous_but_hanzi_is_not() {
        let records = generate_synthetic(&yan_spec(4000), 1).unwrap();
        let rate = |h: &str| {
            let sel: Vec<_> = records
                .iter()
                .filter(|r| r.hanzi_text().as_deref() == Some(h))
                .collect();
            sel.iter().filter(|r| r.gender == Gender::Female).count() as f64 / sel.len() as f64
        };
        assert!(records.iter().all(|r| r.pinyin == "yan"));
        assert!((rate("妍") - 0.9).abs() < 0.03);
        assert!((rate("炎") - 0.1).abs() < 0.03);
    }

    #[test]
    fn zero_count_and_empty_spec() {
        assert!(generate_synthetic(&yan_spec(0), 1).unwrap().is_empty());
        let mut empty = yan_spec(3);
        empty.characters.clear();
        assert!(generate_synthetic(&empty, 1).is_err());
    }

    #[test]
    fn byte_identical_per_seed() {
        let spec = SynthSpec::ambiguous_mandarin(20, 300, 5);
        let write = |seed| {
            let mut buf = Vec::new();
            write_records(&mut buf, &generate_synthetic(&spec, seed).unwrap()).unwrap();
            buf
        };
        assert_eq!(write(9), write(9));
        assert_ne!(write(9), write(10));
    }

    #[test]
    fn generated_names_align_with_their_characters() {
        let lex = SyllableLexicon::mandarin();
        let spec = SynthSpec::ambiguous_mandarin(60, 2000, 11);
        let by_char: std::collections::HashMap<&str, &str> = spec
            .characters
            .iter()
            .map(|c| (c.hanzi.as_str(), c.syllable.as_str()))
            .collect();
        for r in generate_synthetic(&spec, 3).unwrap() {
            let seg = r.segmentation(&lex).unwrap().expect("segmentable");
            let want: Vec<&str> = r
                .hanzi
                .as_ref()
                .unwrap()
                .iter()
                .map(|h| by_char[h.as_str()])
                .collect();
            assert_eq!(seg.parts(), want.as_slice(), "{}", r.pinyin);
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = SynthSpec::ambiguous_mandarin(5, 10, 0);
        let back: SynthSpec = serde_json::from_str(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        let minimal: SynthSpec = serde_json::from_str(
            r#"{"characters":[{"hanzi":"妍","syllable":"yan","female_prob":0.9}],
                "length_weights":[1,0,0],"count":2}"#,
        )
        .unwrap();
        assert_eq!(minimal.characters[0].weight, 1.0);
    }
}
