//! Mandarin syllable inventory and pinyin segmentation.
//!
//! A pinyin given name such as `jianguo` is a bare letter string; the
//! syllable boundaries (`jian|guo`) must be recovered before the name can be
//! aligned with its characters. [`segment_all`] enumerates every split into
//! lexicon syllables with a prefix dynamic program; [`canonical_segment`]
//! picks one split deterministically.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Upper bound on the number of segmentations [`segment_all`] will return.
pub const MAX_SEGMENTATIONS: usize = 1024;

const MANDARIN_SYLLABLES: &str = include_str!("../data/syllables.txt");

/// A set of valid syllables. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyllableLexicon {
    syllables: HashSet<String>,
    max_syllable_len: usize,
}

impl SyllableLexicon {
    /// The shipped toneless Mandarin inventory.
    pub fn mandarin() -> Self {
        Self::parse(MANDARIN_SYLLABLES).expect("shipped syllable inventory is well formed")
    }

    /// Parses a line-oriented lexicon. Blank lines and `#` comments are
    /// skipped, entries are lowercased and deduplicated.
    pub fn parse(source: &str) -> Result<Self> {
        let mut syllables = HashSet::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(bad) = line.chars().find(|c| !c.is_ascii_alphabetic()) {
                return Err(Error::MalformedLexicon {
                    line: idx + 1,
                    reason: format!("non-letter character {bad:?} in {line:?}"),
                });
            }
            syllables.insert(line.to_ascii_lowercase());
        }
        Self::from_set(syllables)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Builds a lexicon from already-split entries; each must be ASCII letters.
    pub fn from_syllables<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut syllables = HashSet::new();
        for (idx, entry) in entries.into_iter().enumerate() {
            let entry = entry.as_ref();
            if entry.is_empty() || !entry.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(Error::MalformedLexicon {
                    line: idx + 1,
                    reason: format!("invalid syllable {entry:?}"),
                });
            }
            syllables.insert(entry.to_ascii_lowercase());
        }
        Self::from_set(syllables)
    }

    fn from_set(syllables: HashSet<String>) -> Result<Self> {
        let max_syllable_len =
            syllables
                .iter()
                .map(String::len)
                .max()
                .ok_or_else(|| Error::MalformedLexicon {
                    line: 0,
                    reason: "lexicon is empty".into(),
                })?;
        Ok(Self {
            syllables,
            max_syllable_len,
        })
    }

    pub fn contains(&self, syllable: &str) -> bool {
        self.syllables.contains(syllable)
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn max_syllable_len(&self) -> usize {
        self.max_syllable_len
    }

    /// Entries in lexicographic order.
    pub fn syllables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.syllables.iter().map(String::as_str).collect();
        out.sort_unstable();
        out
    }

    /// Lengths `l` such that `name[start..start + l]` is a syllable.
    fn syllable_ends<'a>(
        &'a self,
        name: &'a str,
        start: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        let longest = self.max_syllable_len.min(name.len() - start);
        let rest = &name[start..];
        (1..=longest).filter(move |&l| self.syllables.contains(&rest[..l]))
    }
}

/// An ordered split of a pinyin string into syllables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segmentation {
    parts: Vec<String>,
}

impl Segmentation {
    pub fn new(parts: Vec<String>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<String> {
        self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Concatenation of the parts, i.e. the source text.
    pub fn text(&self) -> String {
        self.parts.concat()
    }

    /// Parts joined with a single space, the key format used for name
    /// statistics.
    pub fn key(&self) -> String {
        self.parts.join(" ")
    }
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.parts.join("|"))
    }
}

/// Lowercases `name` and checks that it is a non-empty run of ASCII letters.
pub fn normalize_name(name: &str) -> Result<String> {
    if name.is_empty() {
        return Err(Error::InvalidInput("empty name".into()));
    }
    if let Some(bad) = name.chars().find(|c| !c.is_ascii_alphabetic()) {
        return Err(Error::InvalidInput(format!(
            "non-letter character {bad:?} in {name:?}"
        )));
    }
    Ok(name.to_ascii_lowercase())
}

/// Every sequence of lexicon syllables whose concatenation is `name`, in
/// lexicographic order of their parts. Empty when no split exists.
pub fn segment_all(name: &str, lex: &SyllableLexicon) -> Result<Vec<Segmentation>> {
    let name = normalize_name(name)?;
    let n = name.len();

    // counts[i] = number of ways to split name[i..]; saturates past the cap.
    let mut counts = vec![0usize; n + 1];
    counts[n] = 1;
    for start in (0..n).rev() {
        counts[start] = lex
            .syllable_ends(&name, start)
            .map(|l| counts[start + l])
            .fold(0usize, |acc, c| {
                acc.saturating_add(c).min(MAX_SEGMENTATIONS + 1)
            });
    }
    if counts[0] > MAX_SEGMENTATIONS {
        return Err(Error::TooManySegmentations {
            name,
            cap: MAX_SEGMENTATIONS,
        });
    }

    let mut out = Vec::with_capacity(counts[0]);
    let mut stack = Vec::new();
    enumerate(&name, 0, lex, &counts, &mut stack, &mut out);
    out.sort();
    Ok(out)
}

fn enumerate(
    name: &str,
    start: usize,
    lex: &SyllableLexicon,
    counts: &[usize],
    stack: &mut Vec<String>,
    out: &mut Vec<Segmentation>,
) {
    if start == name.len() {
        out.push(Segmentation::new(stack.clone()));
        return;
    }
    for l in lex.syllable_ends(name, start) {
        if counts[start + l] == 0 {
            continue;
        }
        stack.push(name[start..start + l].to_string());
        enumerate(name, start + l, lex, counts, stack, out);
        stack.pop();
    }
}

/// Picks one segmentation of `name`.
///
/// With `expected_count` only splits of exactly that many syllables are
/// considered; otherwise the fewest syllables win. Remaining ties go to the
/// lexicographically greatest vector of syllable lengths, which is what a
/// longest-match-first splitter produces when it can still finish.
pub fn canonical_segment(
    name: &str,
    lex: &SyllableLexicon,
    expected_count: Option<usize>,
) -> Result<Option<Segmentation>> {
    let name = normalize_name(name)?;
    let n = name.len();

    // feasible[i][k]: name[i..] splits into exactly k syllables.
    let mut feasible = vec![vec![false; n + 1]; n + 1];
    feasible[n][0] = true;
    for start in (0..n).rev() {
        for l in lex.syllable_ends(&name, start) {
            for k in 1..=n {
                if feasible[start + l][k - 1] {
                    feasible[start][k] = true;
                }
            }
        }
    }

    let target = match expected_count {
        Some(k) if k == 0 || k > n => return Ok(None),
        Some(k) => k,
        None => match (1..=n).find(|&k| feasible[0][k]) {
            Some(k) => k,
            None => return Ok(None),
        },
    };
    if !feasible[0][target] {
        return Ok(None);
    }

    let mut parts = Vec::with_capacity(target);
    let mut start = 0;
    for remaining in (1..=target).rev() {
        let best = lex
            .syllable_ends(&name, start)
            .filter(|&l| feasible[start + l][remaining - 1])
            .max()
            .expect("feasibility table guarantees a continuation");
        parts.push(name[start..start + best].to_string());
        start += best;
    }
    Ok(Some(Segmentation::new(parts)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(s: &str) -> Segmentation {
        Segmentation::new(s.split('|').map(str::to_string).collect())
    }

    #[test]
    fn load_small_lexicon() {
        let lex = SyllableLexicon::parse("jian\nguo\nyan\n").unwrap();
        assert_eq!(lex.len(), 3);
        assert_eq!(lex.max_syllable_len(), 4);
    }

    #[test]
    fn load_dedups_case_insensitively() {
        let lex = SyllableLexicon::parse("jian\nJIAN\n\n# comment\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert!(lex.contains("jian"));
    }

    #[test]
    fn load_rejects_whitespace_inside_entry() {
        match SyllableLexicon::parse("ji an\n") {
            Err(Error::MalformedLexicon { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed lexicon, got {other:?}"),
        }
        match SyllableLexicon::parse("ba\n\nlü\n") {
            Err(Error::MalformedLexicon { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed lexicon, got {other:?}"),
        }
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        assert!(SyllableLexicon::parse("# nothing\n\n").is_err());
    }

    #[test]
    fn shipped_inventory_shape() {
        let lex = SyllableLexicon::mandarin();
        assert!(lex.len() > 400);
        assert_eq!(lex.max_syllable_len(), 6);
        for s in ["zhuang", "nv", "lve", "o", "er"] {
            assert!(lex.contains(s), "{s}");
        }
        // Syllabic nasals would make every -n/-ng final ambiguous.
        for s in ["n", "ng", "m"] {
            assert!(!lex.contains(s), "{s}");
        }
    }

    #[test]
    fn segment_all_jianguo() {
        let lex = SyllableLexicon::mandarin();
        let got = segment_all("jianguo", &lex).unwrap();
        let want = vec![
            seg("ji|an|gu|o"),
            seg("ji|an|guo"),
            seg("jian|gu|o"),
            seg("jian|guo"),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn segment_all_xian() {
        let lex = SyllableLexicon::mandarin();
        assert_eq!(
            segment_all("xian", &lex).unwrap(),
            vec![seg("xi|an"), seg("xian")]
        );
    }

    #[test]
    fn segment_all_no_split() {
        let lex = SyllableLexicon::mandarin();
        assert!(segment_all("qzz", &lex).unwrap().is_empty());
    }

    #[test]
    fn segment_all_rejects_bad_input() {
        let lex = SyllableLexicon::mandarin();
        assert!(matches!(segment_all("", &lex), Err(Error::InvalidInput(_))));
        assert!(matches!(
            segment_all("jian guo", &lex),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn segment_all_caps_enumeration() {
        let lex = SyllableLexicon::parse("a\naa\n").unwrap();
        // Splits of a^n into parts of size 1 and 2 follow Fibonacci.
        assert_eq!(segment_all(&"a".repeat(10), &lex).unwrap().len(), 89);
        assert!(matches!(
            segment_all(&"a".repeat(20), &lex),
            Err(Error::TooManySegmentations { .. })
        ));
        // The canonical rule does not enumerate, so it still answers.
        let canon = canonical_segment(&"a".repeat(20), &lex, None)
            .unwrap()
            .unwrap();
        assert_eq!(canon.len(), 10);
    }

    #[test]
    fn canonical_examples() {
        let lex = SyllableLexicon::mandarin();
        assert_eq!(
            canonical_segment("jianguo", &lex, Some(2)).unwrap(),
            Some(seg("jian|guo"))
        );
        assert_eq!(
            canonical_segment("xian", &lex, None).unwrap(),
            Some(seg("xian"))
        );
        assert_eq!(canonical_segment("jianguo", &lex, Some(5)).unwrap(), None);
        assert_eq!(
            canonical_segment("xian", &lex, Some(2)).unwrap(),
            Some(seg("xi|an"))
        );
        assert_eq!(canonical_segment("qzz", &lex, None).unwrap(), None);
    }

    #[test]
    fn canonical_prefers_longest_first_among_minimal() {
        let lex = SyllableLexicon::mandarin();
        // xin|an and xi|nan are both two syllables.
        assert_eq!(
            canonical_segment("xinan", &lex, None).unwrap(),
            Some(seg("xin|an"))
        );
    }

    #[test]
    fn canonical_lowercases() {
        let lex = SyllableLexicon::mandarin();
        assert_eq!(
            canonical_segment("JianGuo", &lex, None).unwrap(),
            Some(seg("jian|guo"))
        );
    }
}
