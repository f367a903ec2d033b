use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{canonical_segment, normalize_name, Segmentation, SyllableLexicon};

/// Longest hanzi given name accepted.
pub const MAX_HANZI_LEN: usize = 3;

/// Binary gender label; `Female` is class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male = 0,
    Female = 1,
}

impl Gender {
    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Gender::Male),
            1 => Some(Gender::Female),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Self {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Gender::Male),
            "1" => Ok(Gender::Female),
            other => Err(Error::InvalidInput(format!(
                "gender must be 0 or 1, got {other:?}"
            ))),
        }
    }
}

/// One labeled given name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NameRecord {
    pub pinyin: String,
    pub hanzi: Option<Vec<String>>,
    pub gender: Gender,
    pub source: Option<u32>,
}

impl NameRecord {
    /// Builds and validates a record. `hanzi` is split into characters.
    pub fn new(pinyin: &str, hanzi: Option<&str>, gender: Gender) -> Result<Self> {
        let pinyin = normalize_name(pinyin)?;
        let hanzi = match hanzi {
            None => None,
            Some(h) if h.trim().is_empty() => None,
            Some(h) => Some(split_hanzi(h.trim())?),
        };
        Ok(Self {
            pinyin,
            hanzi,
            gender,
            source: None,
        })
    }

    pub fn with_source(mut self, source: u32) -> Self {
        self.source = Some(source);
        self
    }

    pub fn hanzi_text(&self) -> Option<String> {
        self.hanzi.as_ref().map(|h| h.concat())
    }

    /// The segmentation used for this record: aligned to the hanzi length
    /// when the characters are known, otherwise the canonical split.
    pub fn segmentation(&self, lex: &SyllableLexicon) -> Result<Option<Segmentation>> {
        canonical_segment(&self.pinyin, lex, self.hanzi.as_ref().map(Vec::len))
    }

    /// Whether the pinyin can be split into exactly one syllable per
    /// character.
    pub fn is_trainable(&self, lex: &SyllableLexicon) -> bool {
        self.hanzi.is_some() && matches!(self.segmentation(lex), Ok(Some(_)))
    }
}

fn split_hanzi(text: &str) -> Result<Vec<String>> {
    if let Some(bad) = text
        .chars()
        .find(|c| c.is_ascii() || c.is_whitespace() || c.is_control())
    {
        return Err(Error::InvalidInput(format!(
            "hanzi name {text:?} contains non-character {bad:?}"
        )));
    }
    let chars: Vec<String> = text.chars().map(String::from).collect();
    if chars.len() > MAX_HANZI_LEN {
        return Err(Error::InvalidInput(format!(
            "hanzi name {text:?} has {} characters, at most {MAX_HANZI_LEN} allowed",
            chars.len()
        )));
    }
    Ok(chars)
}

/// A row that failed validation. `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub row: usize,
    pub reason: String,
}

/// Accepted records together with everything that was turned away.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<NameRecord>,
    pub rejects: Vec<Reject>,
}

impl Ingested {
    pub fn total_rows(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

/// Row-by-row reader over a records CSV (`pinyin,hanzi,gender[,source]`).
pub struct RecordReader<'a, R: Read> {
    rows: csv::StringRecordsIntoIter<R>,
    lex: &'a SyllableLexicon,
    pinyin_col: usize,
    hanzi_col: usize,
    gender_col: usize,
    source_col: Option<usize>,
    row: usize,
}

impl<'a> RecordReader<'a, File> {
    pub fn open(path: impl AsRef<Path>, lex: &'a SyllableLexicon) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::new(file, lex)
    }
}

impl<'a, R: Read> RecordReader<'a, R> {
    pub fn new(input: R, lex: &'a SyllableLexicon) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.into()));
        Ok(Self {
            pinyin_col: require("pinyin")?,
            hanzi_col: require("hanzi")?,
            gender_col: require("gender")?,
            source_col: find("source"),
            rows: reader.into_records(),
            lex,
            row: 0,
        })
    }

    fn parse_row(&self, row: &csv::StringRecord) -> Result<NameRecord, String> {
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let gender: Gender = field(self.gender_col)
            .parse()
            .map_err(|e: Error| e.to_string())?;
        let hanzi = field(self.hanzi_col);
        let mut record = NameRecord::new(field(self.pinyin_col), Some(hanzi), gender)
            .map_err(|e| e.to_string())?;
        if let Some(col) = self.source_col {
            let raw = field(col);
            if !raw.is_empty() {
                let source = raw
                    .parse::<u32>()
                    .map_err(|_| format!("source must be a small integer, got {raw:?}"))?;
                record = record.with_source(source);
            }
        }
        if let Some(h) = &record.hanzi {
            match record.segmentation(self.lex) {
                Ok(Some(_)) => {}
                Ok(None) => {
                    return Err(format!(
                        "pinyin {:?} cannot be split into {} syllables",
                        record.pinyin,
                        h.len()
                    ))
                }
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(record)
    }
}

impl<R: Read> Iterator for RecordReader<'_, R> {
    /// `Ok(Ok(record))` for an accepted row, `Ok(Err(reject))` for a
    /// rejected one, `Err` for an unreadable file.
    type Item = Result<Result<NameRecord, Reject>>;

    fn next(&mut self) -> Option<Self::Item> {
        let row = match self.rows.next()? {
            Ok(row) => row,
            Err(e) => return Some(Err(e.into())),
        };
        self.row += 1;
        Some(Ok(self.parse_row(&row).map_err(|reason| Reject {
            row: self.row,
            reason,
        })))
    }
}

/// Reads and validates every row of a records CSV.
pub fn read_records(path: impl AsRef<Path>, lex: &SyllableLexicon) -> Result<Ingested> {
    collect(RecordReader::open(path, lex)?)
}

/// Same as [`read_records`] over any reader.
pub fn read_records_from<R: Read>(input: R, lex: &SyllableLexicon) -> Result<Ingested> {
    collect(RecordReader::new(input, lex)?)
}

fn collect<R: Read>(reader: RecordReader<'_, R>) -> Result<Ingested> {
    let mut out = Ingested::default();
    for item in reader {
        match item? {
            Ok(record) => out.records.push(record),
            Err(reject) => out.rejects.push(reject),
        }
    }
    Ok(out)
}

/// Writes records in the `pinyin,hanzi,gender[,source]` layout. The source
/// column is emitted only when at least one record carries a source.
pub fn write_records<W: Write>(out: W, records: &[NameRecord]) -> Result<()> {
    let with_source = records.iter().any(|r| r.source.is_some());
    let mut writer = csv::Writer::from_writer(out);
    if with_source {
        writer.write_record(["pinyin", "hanzi", "gender", "source"])?;
    } else {
        writer.write_record(["pinyin", "hanzi", "gender"])?;
    }
    for r in records {
        let hanzi = r.hanzi_text().unwrap_or_default();
        let gender = r.gender.label().to_string();
        if with_source {
            let source = r.source.map(|s| s.to_string()).unwrap_or_default();
            writer.write_record([r.pinyin.as_str(), &hanzi, &gender, &source])?;
        } else {
            writer.write_record([r.pinyin.as_str(), &hanzi, &gender])?;
        }
    }
    writer.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

pub fn write_records_file(path: impl AsRef<Path>, records: &[NameRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records)
}

/// Writes the `row,reason` rejects report.
pub fn write_rejects<W: Write>(out: W, rejects: &[Reject]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["row", "reason"])?;
    for r in rejects {
        writer.write_record([r.row.to_string().as_str(), r.reason.as_str()])?;
    }
    writer.flush().map_err(|e| Error::io("<rejects>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(body: &str) -> Ingested {
        let lex = SyllableLexicon::mandarin();
        read_records_from(body.as_bytes(), &lex).unwrap()
    }

    #[test]
    fn parses_full_row() {
        let got = ingest("pinyin,hanzi,gender\njianguo,建国,0\n");
        assert!(got.rejects.is_empty());
        let r = &got.records[0];
        assert_eq!(r.pinyin, "jianguo");
        assert_eq!(r.hanzi, Some(vec!["建".to_string(), "国".to_string()]));
        assert_eq!(r.gender, Gender::Male);
    }

    #[test]
    fn hanzi_is_optional() {
        let got = ingest("pinyin,hanzi,gender\nyan,,1\n");
        assert_eq!(got.records[0].hanzi, None);
        assert_eq!(got.records[0].gender, Gender::Female);
    }

    #[test]
    fn long_hanzi_is_rejected() {
        let got = ingest("pinyin,hanzi,gender\njianguo,建国国国,0\n");
        assert!(got.records.is_empty());
        assert_eq!(got.rejects.len(), 1);
        assert_eq!(got.rejects[0].row, 1);
        assert!(got.rejects[0].reason.contains("at most 3"));
    }

    #[test]
    fn misaligned_and_malformed_rows_are_reported() {
        let got = ingest(
            "pinyin,hanzi,gender,source\n\
             jianguo,建,0,\n\
             yan,妍,2,\n\
             ya n,妍,1,\n\
             yan,妍,1,x\n\
             yan,妍,1,4\n",
        );
        assert_eq!(got.records.len(), 1);
        assert_eq!(got.records[0].source, Some(4));
        let rows: Vec<usize> = got.rejects.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![1, 2, 3, 4]);
        assert_eq!(got.total_rows(), 5);
    }

    #[test]
    fn missing_column_is_an_error() {
        let lex = SyllableLexicon::mandarin();
        let err = read_records_from("pinyin,gender\nyan,1\n".as_bytes(), &lex).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "hanzi"));
    }

    #[test]
    fn write_then_read() {
        let lex = SyllableLexicon::mandarin();
        let records = vec![
            NameRecord::new("jianguo", Some("建国"), Gender::Male).unwrap(),
            NameRecord::new("yan", None, Gender::Female).unwrap(),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "pinyin,hanzi,gender\njianguo,建国,0\nyan,,1\n"
        );
        let back = read_records_from(buf.as_slice(), &lex).unwrap();
        assert_eq!(back.records, records);
    }

    #[test]
    fn rejects_report_layout() {
        let mut buf = Vec::new();
        write_rejects(
            &mut buf,
            &[Reject {
                row: 3,
                reason: "bad".into(),
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,reason\n3,bad\n");
    }
}
