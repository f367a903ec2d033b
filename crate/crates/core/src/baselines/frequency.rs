use std::collections::BTreeMap;

use crate::corpus::{GenderCounts, NameStatistics};
use crate::metrics::Prediction;

/// Per-name male/female counts from training data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, GenderCounts>,
}

impl FrequencyTable {
    pub fn from_statistics(stats: &NameStatistics) -> Self {
        Self {
            counts: stats.pinyin_name_gender_counts.clone(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, counts: GenderCounts) {
        self.counts.insert(name.into(), counts);
    }

    pub fn get(&self, name: &str) -> Option<GenderCounts> {
        self.counts.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Majority gender of `name` (a syllable-sequence key) with its share.
/// Unseen names and exact ties are `Unknown` and carry no score.
pub fn frequency_predict(table: &FrequencyTable, name: &str) -> (Prediction, Option<f64>) {
    let Some(c) = table.get(name).filter(|c| c.total() > 0) else {
        return (Prediction::Unknown, None);
    };
    let total = c.total() as f64;
    match c.male.cmp(&c.female) {
        std::cmp::Ordering::Greater => (Prediction::Male, Some(c.male as f64 / total)),
        std::cmp::Ordering::Less => (Prediction::Female, Some(c.female as f64 / total)),
        std::cmp::Ordering::Equal => (Prediction::Unknown, Some(0.5)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FrequencyTable {
        let mut t = FrequencyTable::default();
        t.insert("jian guo", GenderCounts { male: 7, female: 3 });
        t.insert("yan", GenderCounts { male: 5, female: 5 });
        t
    }

    #[test]
    fn majority_with_ratio() {
        assert_eq!(
            frequency_predict(&table(), "jian guo"),
            (Prediction::Male, Some(0.7))
        );
    }

    #[test]
    fn unseen_and_tie_are_unknown() {
        assert_eq!(
            frequency_predict(&table(), "li"),
            (Prediction::Unknown, None)
        );
        assert_eq!(frequency_predict(&table(), "yan").0, Prediction::Unknown);
    }
}
