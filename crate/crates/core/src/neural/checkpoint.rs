//! Self-contained binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "PGKT" | version u32 | dim u32 | max_len u32 | tokenizer u8
//! pinyin vocab | hanzi vocab          (count u32, then per token: len u32, UTF-8 bytes)
//! student tensors | teacher tensors   (rows u32, cols u32, rows*cols f64, row-major)
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::{NameEncoder, TokenizerMode};
use super::model::{Parameters, StudentModel, TeacherModel};
use super::train::GenderModel;
use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PGKT";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_vocab(out: &mut Vec<u8>, vocab: &Vocab) {
    put_u32(out, vocab.len());
    for tok in vocab.tokens() {
        put_u32(out, tok.len());
        out.extend_from_slice(tok.as_bytes());
    }
}

fn put_tensors<P: Parameters>(out: &mut Vec<u8>, model: &P) {
    for t in model.tensors() {
        put_u32(out, t.rows);
        put_u32(out, t.cols);
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

/// Serializes `model` to bytes.
pub fn to_bytes(model: &GenderModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize);
    put_u32(&mut out, model.dim());
    put_u32(&mut out, model.encoder.max_len);
    out.push(model.encoder.mode.code());
    put_vocab(&mut out, &model.encoder.pinyin_vocab);
    put_vocab(&mut out, &model.encoder.hanzi_vocab);
    put_tensors(&mut out, &model.student);
    put_tensors(&mut out, &model.teacher);
    out
}

pub fn save(model: &GenderModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn vocab(&mut self) -> Result<Vocab> {
        let n = self.u32()?;
        let mut tokens = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = self.u32()?;
            let raw = self.take(len)?;
            let tok = std::str::from_utf8(raw)
                .map_err(|_| Error::Checkpoint("vocabulary token is not UTF-8".into()))?;
            tokens.push(tok.to_string());
        }
        Vocab::from_full_list(tokens).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    fn tensors<P: Parameters>(&mut self, model: &mut P) -> Result<()> {
        let names = model.tensor_names();
        for (t, name) in model.tensors_mut().into_iter().zip(names) {
            let (rows, cols) = (self.u32()?, self.u32()?);
            if (rows, cols) != (t.rows, t.cols) {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} is {rows}x{cols}, expected {}x{}",
                    t.rows, t.cols
                )));
            }
            let raw = self.take(rows * cols * 8)?;
            for (v, chunk) in t.data.iter_mut().zip(raw.chunks_exact(8)) {
                *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
        }
        Ok(())
    }
}

/// Parses a checkpoint. With `expected_dim`, a file of another width is a
/// [`Error::DimensionMismatch`].
pub fn from_bytes(bytes: &[u8], expected_dim: Option<usize>) -> Result<GenderModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION as usize {
        return Err(Error::Checkpoint(format!(
            "format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let dim = r.u32()?;
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(Error::DimensionMismatch {
                expected,
                found: dim,
            });
        }
    }
    let max_len = r.u32()?;
    let mode_code = r.take(1)?[0];
    let mode = TokenizerMode::from_code(mode_code)
        .ok_or_else(|| Error::Checkpoint(format!("unknown tokenizer code {mode_code}")))?;
    if dim == 0 || max_len == 0 {
        return Err(Error::Checkpoint("zero model dimension".into()));
    }
    let encoder = NameEncoder {
        mode,
        pinyin_vocab: r.vocab()?,
        hanzi_vocab: r.vocab()?,
        max_len,
    };
    let positions = encoder.max_positions();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut student = StudentModel::new(
        encoder.pinyin_vocab.len(),
        encoder.hanzi_vocab.len(),
        dim,
        positions,
        &mut rng,
    );
    let mut teacher = TeacherModel::new(encoder.hanzi_vocab.len(), dim, positions, &mut rng);
    r.tensors(&mut student)?;
    r.tensors(&mut teacher)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(GenderModel {
        student,
        teacher,
        encoder,
    })
}

pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<GenderModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, expected_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Gender, NameRecord};
    use crate::lexicon::SyllableLexicon;

    fn model(dim: usize) -> GenderModel {
        let lex = SyllableLexicon::mandarin();
        let records = vec![
            NameRecord::new("jianguo", Some("建国"), Gender::Male).unwrap(),
            NameRecord::new("yan", Some("妍"), Gender::Female).unwrap(),
        ];
        let enc = NameEncoder::build(&records, TokenizerMode::Syllable, &lex, 1, 3).unwrap();
        GenderModel::initialize(enc, dim, 9)
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model(8);
        let back = from_bytes(&to_bytes(&m), Some(8)).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_bytes(&back), to_bytes(&m));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = to_bytes(&model(8));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad, None), Err(Error::Checkpoint(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(from_bytes(&bad, None), Err(Error::Checkpoint(_))));
        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 3], None),
            Err(Error::Checkpoint(_))
        ));
        assert!(from_bytes(&[], None).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let bytes = to_bytes(&model(16));
        assert!(matches!(
            from_bytes(&bytes, Some(8)),
            Err(Error::DimensionMismatch {
                expected: 8,
                found: 16
            })
        ));
    }
}
