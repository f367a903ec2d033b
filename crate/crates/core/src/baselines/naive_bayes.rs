//! Multinomial Naive Bayes over pinyin syllables with add-alpha smoothing.

use std::collections::BTreeMap;

use crate::corpus::{Gender, GenderCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub prior_female: f64,
    pub counts: BTreeMap<String, GenderCounts>,
    pub alpha: f64,
    pub vocab_size: usize,
    totals: GenderCounts,
}

impl NaiveBayesModel {
    pub fn totals(&self) -> GenderCounts {
        self.totals
    }

    /// Smoothed log-likelihood of one syllable under `gender`.
    fn log_likelihood(&self, syllable: &str, gender: Gender) -> f64 {
        let c = self.counts.get(syllable).copied().unwrap_or_default();
        let (count, total) = match gender {
            Gender::Male => (c.male, self.totals.male),
            Gender::Female => (c.female, self.totals.female),
        };
        ((count as f64 + self.alpha) / (total as f64 + self.alpha * self.vocab_size as f64)).ln()
    }

    /// Unnormalized log posterior `log P(g) + Σ log P(s | g)`.
    pub fn log_joint(&self, syllables: &[String], gender: Gender) -> f64 {
        let prior = match gender {
            Gender::Male => 1.0 - self.prior_female,
            Gender::Female => self.prior_female,
        };
        syllables
            .iter()
            .fold(prior.ln(), |acc, s| acc + self.log_likelihood(s, gender))
    }
}

/// Tallies each syllable occurrence per gender. `examples` pairs a
/// segmented name with its label.
pub fn nb_fit(examples: &[(Vec<String>, Gender)], alpha: f64) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "smoothing constant must be positive, got {alpha}"
        )));
    }
    if examples.is_empty() {
        return Err(Error::InvalidInput("no trainable records".into()));
    }
    let mut counts: BTreeMap<String, GenderCounts> = BTreeMap::new();
    let mut totals = GenderCounts::default();
    let mut labels = GenderCounts::default();
    for (syllables, gender) in examples {
        labels.add(*gender);
        for s in syllables {
            counts.entry(s.clone()).or_default().add(*gender);
            totals.add(*gender);
        }
    }
    Ok(NaiveBayesModel {
        prior_female: labels.female as f64 / labels.total() as f64,
        vocab_size: counts.len(),
        counts,
        alpha,
        totals,
    })
}

/// Label and posterior probability of female. Computed in log space;
/// an exact tie goes to male.
pub fn nb_predict(model: &NaiveBayesModel, syllables: &[String]) -> (Gender, f64) {
    let lf = model.log_joint(syllables, Gender::Female);
    let lm = model.log_joint(syllables, Gender::Male);
    let posterior = if lf == f64::NEG_INFINITY {
        0.0
    } else if lm == f64::NEG_INFINITY {
        1.0
    } else {
        1.0 / (1.0 + (lm - lf).exp())
    };
    let label = if posterior > 0.5 {
        Gender::Female
    } else {
        Gender::Male
    };
    (label, posterior)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(names: &[&str]) -> Vec<String> {
        names.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn counts_and_prior() {
        let ex = vec![
            (s(&["yan"]), Gender::Female),
            (s(&["yan"]), Gender::Female),
            (s(&["yan"]), Gender::Female),
            (s(&["yan"]), Gender::Male),
        ];
        let m = nb_fit(&ex, 1.0).unwrap();
        assert_eq!(m.prior_female, 0.75);
        assert_eq!(m.counts["yan"], GenderCounts { male: 1, female: 3 });
    }

    #[test]
    fn fit_preconditions() {
        assert!(nb_fit(&[], 1.0).is_err());
        assert!(nb_fit(&[(s(&["yan"]), Gender::Male)], 0.0).is_err());
    }

    #[test]
    fn hand_computed_posterior() {
        // Female syllables {yan:3, li:1}, male {yan:1, li:3}, equal priors.
        let ex = vec![
            (s(&["yan", "yan", "yan", "li"]), Gender::Female),
            (s(&["yan", "li", "li", "li"]), Gender::Male),
        ];
        let m = nb_fit(&ex, 1.0).unwrap();
        assert_eq!(m.vocab_size, 2);
        let (label, p) = nb_predict(&m, &s(&["yan"]));
        assert_eq!(label, Gender::Female);
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_syllables_keep_prior() {
        let ex = vec![(s(&["yan"]), Gender::Female), (s(&["li"]), Gender::Male)];
        let m = nb_fit(&ex, 1.0).unwrap();
        let (_, p) = nb_predict(&m, &s(&["qiu", "wen"]));
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn order_invariant() {
        let mut ex = vec![
            (s(&["yan", "li"]), Gender::Female),
            (s(&["jian", "guo"]), Gender::Male),
            (s(&["li"]), Gender::Male),
        ];
        let a = nb_fit(&ex, 1.0).unwrap();
        ex.reverse();
        let b = nb_fit(&ex, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_class_only() {
        let m = nb_fit(&[(s(&["yan"]), Gender::Female)], 1.0).unwrap();
        assert_eq!(nb_predict(&m, &s(&["yan"])), (Gender::Female, 1.0));
    }
}
