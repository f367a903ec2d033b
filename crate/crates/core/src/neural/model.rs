use rand::Rng;

use super::encoder::{EncoderCache, EncoderParams, ENCODER_TENSORS};
use super::tensor::{affine, Tensor};
use crate::error::{Error, Result};

/// Common view over a model's trainable tensors, in a fixed order.
pub trait Parameters: Clone {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
    fn tensor_names(&self) -> Vec<String>;

    /// Same shapes, all zeros; used as a gradient accumulator.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

fn encoder_names(prefix: &str) -> impl Iterator<Item = String> + '_ {
    ENCODER_TENSORS
        .iter()
        .map(move |n| format!("{prefix}.encoder.{n}"))
}

/// Pinyin model: shared encoder with a character-prediction head, a
/// feature projection and a gender head.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentModel {
    pub encoder: EncoderParams,
    pub char_w: Tensor,
    pub char_b: Tensor,
    pub feat_w: Tensor,
    pub feat_b: Tensor,
    pub gender_w: Tensor,
    pub gender_b: Tensor,
}

impl StudentModel {
    pub fn new<R: Rng>(
        pinyin_vocab: usize,
        hanzi_vocab: usize,
        dim: usize,
        max_positions: usize,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        Self {
            encoder: EncoderParams::new(pinyin_vocab, dim, max_positions, rng),
            char_w: Tensor::uniform(dim, hanzi_vocab, bound, rng),
            char_b: Tensor::zeros(1, hanzi_vocab),
            feat_w: Tensor::uniform(dim, dim, bound, rng),
            feat_b: Tensor::zeros(1, dim),
            gender_w: Tensor::uniform(dim, 2, bound, rng),
            gender_b: Tensor::zeros(1, 2),
        }
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn hanzi_vocab_size(&self) -> usize {
        self.char_w.cols
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let d = self.dim();
        let h = self.hanzi_vocab_size();
        check_shape("char_w", &self.char_w, d, h)?;
        check_shape("char_b", &self.char_b, 1, h)?;
        check_shape("feat_w", &self.feat_w, d, d)?;
        check_shape("feat_b", &self.feat_b, 1, d)?;
        check_shape("gender_w", &self.gender_w, d, 2)?;
        check_shape("gender_b", &self.gender_b, 1, 2)
    }
}

impl Parameters for StudentModel {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v: Vec<&Tensor> = self.encoder.tensors().into();
        v.extend([
            &self.char_w,
            &self.char_b,
            &self.feat_w,
            &self.feat_b,
            &self.gender_w,
            &self.gender_b,
        ]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = self.encoder.tensors_mut().into();
        v.extend([
            &mut self.char_w,
            &mut self.char_b,
            &mut self.feat_w,
            &mut self.feat_b,
            &mut self.gender_w,
            &mut self.gender_b,
        ]);
        v
    }

    fn tensor_names(&self) -> Vec<String> {
        encoder_names("student")
            .chain(
                [
                    "char_w", "char_b", "feat_w", "feat_b", "gender_w", "gender_b",
                ]
                .iter()
                .map(|n| format!("student.{n}")),
            )
            .collect()
    }
}

/// Hanzi model: its own encoder and a gender head on the aggregate token.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherModel {
    pub encoder: EncoderParams,
    pub gender_w: Tensor,
    pub gender_b: Tensor,
}

impl TeacherModel {
    pub fn new<R: Rng>(hanzi_vocab: usize, dim: usize, max_positions: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        Self {
            encoder: EncoderParams::new(hanzi_vocab, dim, max_positions, rng),
            gender_w: Tensor::uniform(dim, 2, bound, rng),
            gender_b: Tensor::zeros(1, 2),
        }
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let d = self.dim();
        check_shape("gender_w", &self.gender_w, d, 2)?;
        check_shape("gender_b", &self.gender_b, 1, 2)
    }
}

impl Parameters for TeacherModel {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v: Vec<&Tensor> = self.encoder.tensors().into();
        v.extend([&self.gender_w, &self.gender_b]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = self.encoder.tensors_mut().into();
        v.extend([&mut self.gender_w, &mut self.gender_b]);
        v
    }

    fn tensor_names(&self) -> Vec<String> {
        encoder_names("teacher")
            .chain([
                "teacher.gender_w".to_string(),
                "teacher.gender_b".to_string(),
            ])
            .collect()
    }
}

fn check_shape(name: &str, t: &Tensor, rows: usize, cols: usize) -> Result<()> {
    if t.rows == rows && t.cols == cols {
        Ok(())
    } else {
        Err(Error::Checkpoint(format!(
            "tensor {name} is {}x{}, expected {rows}x{cols}",
            t.rows, t.cols
        )))
    }
}

/// Student forward products for one name.
#[derive(Debug, Clone)]
pub struct StudentOutput {
    pub cache: EncoderCache,
    /// Projected aggregate feature, the student side of feature distillation.
    pub h_pinyin: Vec<f64>,
    /// Gender logits (male, female).
    pub z_pinyin: [f64; 2],
    /// One row of character logits per syllable position.
    pub char_logits: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TeacherOutput {
    pub cache: EncoderCache,
    pub h_hanzi: Vec<f64>,
    pub z_hanzi: [f64; 2],
}

fn gender_logits(h: &[f64], w: &Tensor, b: &Tensor) -> [f64; 2] {
    let mut z = [0.0; 2];
    affine(h, 1, w, Some(b), &mut z);
    z
}

/// Runs the student on `tokens` (aggregate token first, then one token per
/// syllable).
pub fn forward_student(model: &StudentModel, tokens: &[usize]) -> Result<StudentOutput> {
    let (cache, h_pinyin, z_pinyin) = student_head(model, tokens)?;
    let vh = model.hanzi_vocab_size();
    let char_logits = (1..cache.len())
        .map(|j| {
            let mut row = vec![0.0; vh];
            affine(
                cache.output(j),
                1,
                &model.char_w,
                Some(&model.char_b),
                &mut row,
            );
            row
        })
        .collect();
    Ok(StudentOutput {
        cache,
        h_pinyin,
        z_pinyin,
        char_logits,
    })
}

/// Student gender path only; what inference needs.
pub(crate) fn student_head(
    model: &StudentModel,
    tokens: &[usize],
) -> Result<(EncoderCache, Vec<f64>, [f64; 2])> {
    let cache = model.encoder.forward(tokens)?;
    let d = model.dim();
    let mut h_pinyin = vec![0.0; d];
    affine(
        cache.output(0),
        1,
        &model.feat_w,
        Some(&model.feat_b),
        &mut h_pinyin,
    );
    let z = gender_logits(&h_pinyin, &model.gender_w, &model.gender_b);
    Ok((cache, h_pinyin, z))
}

/// Runs the teacher on hanzi `tokens` (aggregate token first).
pub fn forward_teacher(model: &TeacherModel, tokens: &[usize]) -> Result<TeacherOutput> {
    let cache = model.encoder.forward(tokens)?;
    let h_hanzi = cache.output(0).to_vec();
    let z_hanzi = gender_logits(&h_hanzi, &model.gender_w, &model.gender_b);
    Ok(TeacherOutput {
        cache,
        h_hanzi,
        z_hanzi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn student_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = StudentModel::new(10, 7, 8, 4, &mut rng);
        let out = forward_student(&s, &[0, 4, 5]).unwrap();
        assert_eq!(out.char_logits.len(), 2);
        assert!(out.char_logits.iter().all(|r| r.len() == 7));
        assert_eq!(out.h_pinyin.len(), 8);
        s.validate().unwrap();
    }

    #[test]
    fn zero_gender_head_returns_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = StudentModel::new(10, 7, 8, 4, &mut rng);
        s.gender_w.fill(0.0);
        s.gender_b.data = vec![0.25, -1.5];
        let out = forward_student(&s, &[0, 4]).unwrap();
        assert_eq!(out.z_pinyin, [0.25, -1.5]);
    }

    #[test]
    fn seeded_init_is_bit_stable() {
        let make = || StudentModel::new(10, 7, 8, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let a = forward_student(&make(), &[0, 3, 9]).unwrap();
        let b = forward_student(&make(), &[0, 3, 9]).unwrap();
        assert_eq!(a.z_pinyin, b.z_pinyin);
        assert_eq!(a.char_logits, b.char_logits);
    }

    #[test]
    fn teacher_shapes_and_determinism() {
        let make = || TeacherModel::new(9, 8, 4, &mut ChaCha8Rng::seed_from_u64(3));
        let a = forward_teacher(&make(), &[0, 3, 4]).unwrap();
        let b = forward_teacher(&make(), &[0, 3, 4]).unwrap();
        assert_eq!(a.h_hanzi.len(), 8);
        assert_eq!(a.z_hanzi, b.z_hanzi);
        assert_eq!(make().tensor_names().len(), make().tensors().len());
    }
}
