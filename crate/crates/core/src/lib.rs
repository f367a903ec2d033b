//! Gender inference for romanized (pinyin) Chinese given names.
//!
//! The pinyin spelling of a given name loses most of the gender signal
//! carried by its characters: `yan` can be written 妍 (mostly female) or 炎
//! (mostly male). This crate trains a pinyin classifier that recovers part
//! of that signal by learning, during training only, from the characters:
//!
//! - a shared encoder predicts both gender and the characters behind each
//!   syllable (multi-task learning);
//! - a character-level teacher supervises the pinyin student through its
//!   features and its output distribution (knowledge distillation).
//!
//! Around the model sit the pieces needed to use and evaluate it:
//! [`lexicon`] splits pinyin into syllables, [`corpus`] ingests and splits
//! labeled names, [`baselines`] holds the lookup and Naive Bayes
//! comparators, and [`metrics`] scores predictions that may abstain.
//!
//! ```
//! use pinyin_gender::lexicon::{canonical_segment, SyllableLexicon};
//!
//! let lex = SyllableLexicon::mandarin();
//! let seg = canonical_segment("jianguo", &lex, Some(2)).unwrap().unwrap();
//! assert_eq!(seg.to_string(), "jian|guo");
//! ```

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod neural;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    mod segmentation {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
