use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::records::{Gender, NameRecord, RecordReader};
use crate::error::Result;
use crate::lexicon::{Segmentation, SyllableLexicon};

/// Male / female tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenderCounts {
    pub male: u64,
    pub female: u64,
}

impl GenderCounts {
    pub fn add(&mut self, gender: Gender) {
        match gender {
            Gender::Male => self.male += 1,
            Gender::Female => self.female += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.male + self.female
    }

    fn merge(&mut self, other: &GenderCounts) {
        self.male += other.male;
        self.female += other.female;
    }
}

/// Co-occurrence counts keyed by syllable sequences (syllables joined by a
/// single space).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameStatistics {
    pub pinyin_name_gender_counts: BTreeMap<String, GenderCounts>,
    pub pinyin_to_hanzi_counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub syllable_to_char_counts: BTreeMap<String, BTreeMap<String, u64>>,
}

fn bump(map: &mut BTreeMap<String, u64>, key: &str, by: u64) {
    match map.get_mut(key) {
        Some(c) => *c += by,
        None => {
            map.insert(key.to_string(), by);
        }
    }
}

fn nested<'m>(
    map: &'m mut BTreeMap<String, BTreeMap<String, u64>>,
    key: &str,
) -> &'m mut BTreeMap<String, u64> {
    if !map.contains_key(key) {
        map.insert(key.to_string(), BTreeMap::new());
    }
    map.get_mut(key).expect("just inserted")
}

impl NameStatistics {
    /// Number of distinct pinyin names seen.
    pub fn key_count(&self) -> usize {
        self.pinyin_name_gender_counts.len()
    }

    /// Adds one record whose segmentation is already known.
    pub fn add(&mut self, seg: &Segmentation, record: &NameRecord) {
        let key = seg.key();
        match self.pinyin_name_gender_counts.get_mut(&key) {
            Some(c) => c.add(record.gender),
            None => {
                let mut c = GenderCounts::default();
                c.add(record.gender);
                self.pinyin_name_gender_counts.insert(key.clone(), c);
            }
        }
        if let Some(hanzi) = &record.hanzi {
            bump(
                nested(&mut self.pinyin_to_hanzi_counts, &key),
                &hanzi.concat(),
                1,
            );
            for (syl, ch) in seg.parts().iter().zip(hanzi) {
                bump(nested(&mut self.syllable_to_char_counts, syl), ch, 1);
            }
        }
    }

    /// Folds `other` into `self`. Merging shard statistics gives the same
    /// result as one pass over the concatenated shards.
    pub fn merge(&mut self, other: &NameStatistics) {
        for (k, c) in &other.pinyin_name_gender_counts {
            self.pinyin_name_gender_counts
                .entry(k.clone())
                .or_default()
                .merge(c);
        }
        for (target, source) in [
            (
                &mut self.pinyin_to_hanzi_counts,
                &other.pinyin_to_hanzi_counts,
            ),
            (
                &mut self.syllable_to_char_counts,
                &other.syllable_to_char_counts,
            ),
        ] {
            for (k, inner) in source {
                let dst = nested(target, k);
                for (h, c) in inner {
                    bump(dst, h, *c);
                }
            }
        }
    }

    /// Most frequent hanzi name for a syllable sequence; ties go to the
    /// smallest string by code points.
    pub fn most_frequent_hanzi(&self, key: &str) -> Option<&str> {
        argmax(self.pinyin_to_hanzi_counts.get(key)?)
    }

    /// Most frequent character for one syllable, same tie rule.
    pub fn most_frequent_char(&self, syllable: &str) -> Option<&str> {
        argmax(self.syllable_to_char_counts.get(syllable)?)
    }
}

fn argmax(counts: &BTreeMap<String, u64>) -> Option<&str> {
    // BTreeMap iterates in code-point order; keep the first maximum.
    let mut best: Option<(&str, u64)> = None;
    for (k, &c) in counts {
        if best.map_or(true, |(_, b)| c > b) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k)
}

/// Streaming accumulator. Memory grows with the number of distinct names,
/// not with the number of rows.
pub struct StatisticsBuilder<'a> {
    lex: &'a SyllableLexicon,
    stats: NameStatistics,
    // Segmentation cache, indexed by expected syllable count (0 = unknown).
    segmentations: HashMap<String, [Option<Option<Segmentation>>; 4]>,
    rows: u64,
    skipped: u64,
}

impl<'a> StatisticsBuilder<'a> {
    pub fn new(lex: &'a SyllableLexicon) -> Self {
        Self {
            lex,
            stats: NameStatistics::default(),
            segmentations: HashMap::new(),
            rows: 0,
            skipped: 0,
        }
    }

    pub fn add(&mut self, record: &NameRecord) {
        self.rows += 1;
        let slot = record.hanzi.as_ref().map_or(0, Vec::len).min(3);
        if !self.segmentations.contains_key(&record.pinyin) {
            self.segmentations
                .insert(record.pinyin.clone(), Default::default());
        }
        let cache = self
            .segmentations
            .get_mut(&record.pinyin)
            .expect("just inserted");
        let seg = cache[slot].get_or_insert_with(|| record.segmentation(self.lex).ok().flatten());
        match seg {
            Some(seg) => self.stats.add(seg, record),
            None => self.skipped += 1,
        }
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    /// Records that could not be segmented and were left out.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn key_count(&self) -> usize {
        self.stats.key_count()
    }

    pub fn finish(self) -> NameStatistics {
        self.stats
    }
}

/// Single pass over a stream of records.
pub fn build_statistics<I>(records: I, lex: &SyllableLexicon) -> NameStatistics
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<NameRecord>,
{
    let mut builder = StatisticsBuilder::new(lex);
    for r in records {
        builder.add(r.borrow());
    }
    builder.finish()
}

/// Streams a records CSV without holding its rows. Returns the statistics
/// and the number of rejected rows.
pub fn build_statistics_from_file(
    path: impl AsRef<Path>,
    lex: &SyllableLexicon,
) -> Result<(NameStatistics, u64)> {
    let mut builder = StatisticsBuilder::new(lex);
    let mut rejected = 0;
    for item in RecordReader::open(path, lex)? {
        match item? {
            Ok(record) => builder.add(&record),
            Err(_) => rejected += 1,
        }
    }
    Ok((builder.finish(), rejected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: &str, h: &str, g: Gender) -> NameRecord {
        NameRecord::new(p, Some(h), g).unwrap()
    }

    fn yan_rows() -> Vec<NameRecord> {
        vec![
            rec("yan", "妍", Gender::Female),
            rec("yan", "妍", Gender::Female),
            rec("yan", "炎", Gender::Male),
            rec("yan", "妍", Gender::Female),
        ]
    }

    #[test]
    fn counts_hanzi_per_pinyin() {
        let lex = SyllableLexicon::mandarin();
        let stats = build_statistics(yan_rows(), &lex);
        let yan = &stats.pinyin_to_hanzi_counts["yan"];
        assert_eq!(yan["妍"], 3);
        assert_eq!(yan["炎"], 1);
        assert_eq!(
            stats.pinyin_name_gender_counts["yan"],
            GenderCounts { male: 1, female: 3 }
        );
        assert_eq!(stats.most_frequent_hanzi("yan"), Some("妍"));
    }

    #[test]
    fn order_independent() {
        let lex = SyllableLexicon::mandarin();
        let mut rows = yan_rows();
        rows.push(rec("jianguo", "建国", Gender::Male));
        let a = build_statistics(&rows, &lex);
        rows.reverse();
        rows.swap(0, 2);
        let b = build_statistics(&rows, &lex);
        assert_eq!(a, b);
    }

    #[test]
    fn aligned_char_counts() {
        let lex = SyllableLexicon::mandarin();
        let stats = build_statistics([rec("jianguo", "建国", Gender::Male)], &lex);
        assert_eq!(stats.syllable_to_char_counts["jian"]["建"], 1);
        assert_eq!(stats.syllable_to_char_counts["guo"]["国"], 1);
        assert!(stats.pinyin_name_gender_counts.contains_key("jian guo"));
    }

    #[test]
    fn ties_break_by_code_point() {
        let lex = SyllableLexicon::mandarin();
        let stats = build_statistics(
            [
                rec("yan", "炎", Gender::Male),
                rec("yan", "妍", Gender::Female),
            ],
            &lex,
        );
        // U+598D (妍) < U+708E (炎)
        assert_eq!(stats.most_frequent_hanzi("yan"), Some("妍"));
    }

    #[test]
    fn unsegmentable_rows_are_skipped() {
        let lex = SyllableLexicon::mandarin();
        let mut b = StatisticsBuilder::new(&lex);
        b.add(&NameRecord::new("qzz", None, Gender::Male).unwrap());
        b.add(&NameRecord::new("yan", None, Gender::Male).unwrap());
        assert_eq!((b.rows(), b.skipped(), b.key_count()), (2, 1, 1));
    }

    #[test]
    fn shard_merge_matches_single_pass() {
        let lex = SyllableLexicon::mandarin();
        let mut rows = yan_rows();
        rows.push(rec("jianguo", "建国", Gender::Male));
        rows.push(rec("jian", "剑", Gender::Male));
        let whole = build_statistics(&rows, &lex);
        let mut left = build_statistics(&rows[..3], &lex);
        let right = build_statistics(&rows[3..], &lex);
        left.merge(&right);
        assert_eq!(left, whole);
    }
}
