use crate::corpus::{Gender, NameStatistics, AGG};
use crate::error::{Error, Result};
use crate::neural::{forward_teacher, softmax, GenderModel};

/// Most likely characters for a syllable sequence: the most frequent hanzi
/// name seen with exactly this pinyin, otherwise the most frequent character
/// of each syllable on its own.
pub fn convert_to_hanzi(stats: &NameStatistics, syllables: &[String]) -> Result<Vec<String>> {
    if syllables.is_empty() {
        return Err(Error::InvalidInput("empty syllable sequence".into()));
    }
    if let Some(name) = stats.most_frequent_hanzi(&syllables.join(" ")) {
        return Ok(name.chars().map(String::from).collect());
    }
    syllables
        .iter()
        .map(|s| {
            stats
                .most_frequent_char(s)
                .map(str::to_string)
                .ok_or_else(|| Error::UnknownMapping(s.clone()))
        })
        .collect()
}

/// Converts the pinyin to characters and lets the character model decide.
/// Returns the label and the teacher's female probability.
pub fn conversion_predict(
    stats: &NameStatistics,
    model: &GenderModel,
    syllables: &[String],
) -> Result<(Gender, f64)> {
    let hanzi = convert_to_hanzi(stats, syllables)?;
    let mut tokens = vec![AGG];
    tokens.extend(
        hanzi
            .iter()
            .take(model.encoder.max_len)
            .map(|c| model.encoder.hanzi_vocab.id(c)),
    );
    let out = forward_teacher(&model.teacher, &tokens)?;
    let p = softmax(&out.z_hanzi)[1];
    let gender = if p > 0.5 {
        Gender::Female
    } else {
        Gender::Male
    };
    Ok((gender, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_statistics, NameRecord};
    use crate::lexicon::SyllableLexicon;

    fn syl(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    fn stats() -> NameStatistics {
        let lex = SyllableLexicon::mandarin();
        let mut records = Vec::new();
        for _ in 0..3 {
            records.push(NameRecord::new("yan", Some("妍"), Gender::Female).unwrap());
        }
        records.push(NameRecord::new("yan", Some("炎"), Gender::Male).unwrap());
        records.push(NameRecord::new("jianhua", Some("建华"), Gender::Male).unwrap());
        records.push(NameRecord::new("guoqiang", Some("国强"), Gender::Male).unwrap());
        build_statistics(&records, &lex)
    }

    #[test]
    fn full_name_lookup() {
        assert_eq!(convert_to_hanzi(&stats(), &syl("yan")).unwrap(), vec!["妍"]);
    }

    #[test]
    fn per_syllable_backoff() {
        assert_eq!(
            convert_to_hanzi(&stats(), &syl("jian guo")).unwrap(),
            vec!["建", "国"]
        );
    }

    #[test]
    fn unknown_syllable() {
        assert!(matches!(
            convert_to_hanzi(&stats(), &syl("jian zhuang")),
            Err(Error::UnknownMapping(s)) if s == "zhuang"
        ));
    }
}
