//! The joint objective and its gradients.
//!
//! Over a batch of `N` names:
//!
//! - `l_pre`: summed cross-entropy of each syllable position's character
//!   logits against the true character, averaged over the batch;
//! - `l_name`: teacher cross-entropy on the gender label;
//! - `l_feature`: Euclidean distance between the teacher's aggregate
//!   feature and the student's projected feature;
//! - `l_response`: `KL(p(z_pinyin) ‖ p(z_hanzi))` at temperature 1;
//! - `l_pinyin`: student cross-entropy on the gender label.
//!
//! The total is their plain sum. By default the teacher side of the two
//! distillation terms is treated as a constant, so the teacher is trained by
//! `l_name` alone.

use super::data::TrainingExample;
use super::model::{
    forward_student, forward_teacher, student_head, Parameters, StudentModel, TeacherModel,
};
use super::tensor::{affine_backward, log_softmax};
use crate::error::{Error, Result};

/// Which optional loss terms are active. `l_pinyin` is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossSwitches {
    pub pre: bool,
    pub name: bool,
    pub feature: bool,
    pub response: bool,
}

impl Default for LossSwitches {
    fn default() -> Self {
        Self::full()
    }
}

impl LossSwitches {
    pub const fn full() -> Self {
        Self {
            pre: true,
            name: true,
            feature: true,
            response: true,
        }
    }

    /// Response distillation removed.
    pub const fn without_logits() -> Self {
        Self {
            response: false,
            ..Self::full()
        }
    }

    /// Both distillation terms removed.
    pub const fn without_logits_and_feat() -> Self {
        Self {
            response: false,
            feature: false,
            ..Self::full()
        }
    }

    /// Teacher and character prediction removed: a plain pinyin classifier.
    pub const fn without_distill_and_namepre() -> Self {
        Self {
            pre: false,
            name: false,
            feature: false,
            response: false,
        }
    }

    pub fn needs_teacher(&self) -> bool {
        self.name || self.feature || self.response
    }

    pub fn needs_hanzi(&self) -> bool {
        self.pre || self.needs_teacher()
    }
}

/// Batch-mean value of every loss term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub l_pre: f64,
    pub l_name: f64,
    pub l_feature: f64,
    pub l_response: f64,
    pub l_pinyin: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn from_sums(sums: [f64; 5], n: f64) -> Self {
        let [pre, name, feature, response, pinyin] = sums.map(|s| s / n);
        Self {
            l_pre: pre,
            l_name: name,
            l_feature: feature,
            l_response: response,
            l_pinyin: pinyin,
            total: pre + name + feature + response + pinyin,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.l_pre,
            self.l_name,
            self.l_feature,
            self.l_response,
            self.l_pinyin,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossOptions {
    pub switches: LossSwitches,
    /// Stop gradients from the distillation terms into the teacher.
    pub detach_teacher: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self {
            switches: LossSwitches::full(),
            detach_teacher: true,
        }
    }
}

impl From<LossSwitches> for LossOptions {
    fn from(switches: LossSwitches) -> Self {
        Self {
            switches,
            ..Self::default()
        }
    }
}

/// Teacher feature and logits for one record, held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherTarget {
    pub h: Vec<f64>,
    pub z: [f64; 2],
}

/// `KL(p ‖ q)` for two probability vectors given by their logits.
pub fn kl_divergence_logits(p_logits: &[f64], q_logits: &[f64]) -> f64 {
    let lp = log_softmax(p_logits);
    let lq = log_softmax(q_logits);
    lp.iter()
        .zip(&lq)
        .map(|(a, b)| a.exp() * (a - b))
        .sum::<f64>()
        .max(0.0)
}

/// `KL(p ‖ q)` for probability vectors. Zero-probability terms of `p`
/// contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi.ln() - qi.ln()))
        .sum()
}

/// Loss values only.
pub fn compute_losses(
    student: &StudentModel,
    teacher: &TeacherModel,
    batch: &[TrainingExample],
    switches: LossSwitches,
) -> Result<LossBreakdown> {
    evaluate(student, teacher, batch, switches.into(), None, None)
}

/// Loss values and the gradient of the total with respect to every
/// parameter of both models.
pub fn loss_and_gradients(
    student: &StudentModel,
    teacher: &TeacherModel,
    batch: &[TrainingExample],
    options: LossOptions,
) -> Result<(LossBreakdown, StudentModel, TeacherModel)> {
    let mut gs = student.zeros_like();
    let mut gt = teacher.zeros_like();
    let losses = evaluate(
        student,
        teacher,
        batch,
        options,
        None,
        Some((&mut gs, &mut gt)),
    )?;
    Ok((losses, gs, gt))
}

/// Teacher outputs for every record of `batch`.
pub fn teacher_targets(
    teacher: &TeacherModel,
    batch: &[TrainingExample],
) -> Result<Vec<TeacherTarget>> {
    batch
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let hanzi = ex.hanzi.as_ref().ok_or(Error::MissingHanzi(i))?;
            let out = forward_teacher(teacher, hanzi)?;
            Ok(TeacherTarget {
                h: out.h_hanzi,
                z: out.z_hanzi,
            })
        })
        .collect()
}

/// Shared forward (and optional backward) pass. With `frozen`, the
/// distillation terms read the teacher side from it instead of the live
/// teacher.
pub(crate) fn evaluate(
    student: &StudentModel,
    teacher: &TeacherModel,
    batch: &[TrainingExample],
    options: LossOptions,
    frozen: Option<&[TeacherTarget]>,
    mut grads: Option<(&mut StudentModel, &mut TeacherModel)>,
) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let sw = options.switches;
    let n = batch.len() as f64;
    let d = student.dim();
    // pre, name, feature, response, pinyin
    let mut sums = [0.0f64; 5];

    for (i, ex) in batch.iter().enumerate() {
        let hanzi = if sw.needs_hanzi() {
            Some(ex.hanzi.as_ref().ok_or(Error::MissingHanzi(i))?)
        } else {
            None
        };
        let y = ex.label.index();

        let (cache, h_s, z_s, char_logits) = if sw.pre {
            let out = forward_student(student, &ex.pinyin)?;
            if out.char_logits.len() != ex.char_targets.len() {
                return Err(Error::InvalidInput(format!(
                    "record {i}: {} syllable positions but {} character targets",
                    out.char_logits.len(),
                    ex.char_targets.len()
                )));
            }
            (out.cache, out.h_pinyin, out.z_pinyin, out.char_logits)
        } else {
            let (cache, h, z) = student_head(student, &ex.pinyin)?;
            (cache, h, z, Vec::new())
        };
        let teacher_out = match hanzi {
            Some(h) if sw.needs_teacher() => Some(forward_teacher(teacher, h)?),
            _ => None,
        };
        let (target_h, target_z) = match (frozen, &teacher_out) {
            (Some(f), _) => (Some(f[i].h.as_slice()), Some(f[i].z)),
            (None, Some(t)) => (Some(t.h_hanzi.as_slice()), Some(t.z_hanzi)),
            (None, None) => (None, None),
        };

        let ls = log_softmax(&z_s);
        sums[4] -= ls[y];

        let mut char_lsm = Vec::new();
        if sw.pre {
            for (logits, &target) in char_logits.iter().zip(&ex.char_targets) {
                let l = log_softmax(logits);
                sums[0] -= l[target];
                char_lsm.push(l);
            }
        }

        let mut lt = [0.0; 2];
        if let Some(t) = &teacher_out {
            let l = log_softmax(&t.z_hanzi);
            lt = [l[0], l[1]];
            if sw.name {
                sums[1] -= lt[y];
            }
        }

        let mut diff = Vec::new();
        let mut norm = 0.0;
        if sw.feature {
            let th = target_h.expect("teacher present when feature loss is on");
            diff = h_s.iter().zip(th).map(|(a, b)| a - b).collect();
            norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            sums[2] += norm;
        }

        let mut lq = [0.0; 2];
        let mut kl = 0.0;
        if sw.response {
            let l = log_softmax(&target_z.expect("teacher present when response loss is on"));
            lq = [l[0], l[1]];
            kl = (0..2).map(|k| ls[k].exp() * (ls[k] - lq[k])).sum::<f64>();
            sums[3] += kl;
        }

        let Some((gs, gt)) = grads.as_mut() else {
            continue;
        };

        // Student gender logits.
        let p_s = [ls[0].exp(), ls[1].exp()];
        let mut dz_s = [0.0; 2];
        for k in 0..2 {
            dz_s[k] += (p_s[k] - if k == y { 1.0 } else { 0.0 }) / n;
            if sw.response {
                dz_s[k] += p_s[k] * (ls[k] - lq[k] - kl) / n;
            }
        }
        let mut dh_s = vec![0.0; d];
        if sw.feature && norm > 0.0 {
            for (g, v) in dh_s.iter_mut().zip(&diff) {
                *g += v / norm / n;
            }
        }
        affine_backward(
            &h_s,
            1,
            &student.gender_w,
            &dz_s,
            &mut gs.gender_w,
            Some(&mut gs.gender_b),
            Some(&mut dh_s),
        );
        let t_len = cache.len();
        let mut d_out = vec![0.0; t_len * d];
        affine_backward(
            cache.output(0),
            1,
            &student.feat_w,
            &dh_s,
            &mut gs.feat_w,
            Some(&mut gs.feat_b),
            Some(&mut d_out[..d]),
        );
        if sw.pre {
            for (j, (l, &target)) in char_lsm.iter().zip(&ex.char_targets).enumerate() {
                let pos = j + 1;
                let dlogits: Vec<f64> = l
                    .iter()
                    .enumerate()
                    .map(|(c, lv)| (lv.exp() - if c == target { 1.0 } else { 0.0 }) / n)
                    .collect();
                affine_backward(
                    cache.output(pos),
                    1,
                    &student.char_w,
                    &dlogits,
                    &mut gs.char_w,
                    Some(&mut gs.char_b),
                    Some(&mut d_out[pos * d..(pos + 1) * d]),
                );
            }
        }
        student.encoder.backward(&cache, &d_out, &mut gs.encoder);

        // Teacher.
        let Some(t) = &teacher_out else {
            continue;
        };
        let through_distill = !options.detach_teacher && frozen.is_none();
        let p_t = [lt[0].exp(), lt[1].exp()];
        let mut dz_t = [0.0; 2];
        if sw.name {
            for k in 0..2 {
                dz_t[k] += (p_t[k] - if k == y { 1.0 } else { 0.0 }) / n;
            }
        }
        let mut dh_t = vec![0.0; d];
        if through_distill {
            if sw.response {
                for k in 0..2 {
                    dz_t[k] += (p_t[k] - p_s[k]) / n;
                }
            }
            if sw.feature && norm > 0.0 {
                for (g, v) in dh_t.iter_mut().zip(&diff) {
                    *g -= v / norm / n;
                }
            }
        }
        if !(sw.name || through_distill) {
            continue;
        }
        affine_backward(
            &t.h_hanzi,
            1,
            &teacher.gender_w,
            &dz_t,
            &mut gt.gender_w,
            Some(&mut gt.gender_b),
            Some(&mut dh_t),
        );
        let mut d_out_t = vec![0.0; t.cache.len() * d];
        d_out_t[..d].copy_from_slice(&dh_t);
        teacher
            .encoder
            .backward(&t.cache, &d_out_t, &mut gt.encoder);
    }

    if !sw.pre {
        sums[0] = 0.0;
    }
    Ok(LossBreakdown::from_sums(sums, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::softmax;

    #[test]
    fn kl_examples() {
        let p = softmax(&[1.0, 0.0]);
        let kl = kl_divergence(&p, &[0.5, 0.5]);
        assert!((kl - 0.111).abs() < 1e-3, "{kl}");
        assert!((kl_divergence_logits(&[1.0, 0.0], &[0.0, 0.0]) - kl).abs() < 1e-12);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert_eq!(kl_divergence_logits(&[0.3, -2.0], &[0.3, -2.0]), 0.0);
    }

    #[test]
    fn ablation_presets() {
        assert!(!LossSwitches::without_logits().response);
        assert!(LossSwitches::without_logits().feature);
        let plain = LossSwitches::without_distill_and_namepre();
        assert!(!plain.needs_hanzi() && !plain.needs_teacher());
        assert!(LossSwitches::full().needs_teacher());
    }
}
