//! Finite-difference verification of the hand-written gradients.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::TrainingExample;
use super::loss::{evaluate, loss_and_gradients, teacher_targets, LossOptions};
use super::model::{Parameters, StudentModel, TeacherModel};
use crate::error::{Error, Result};

pub const MAX_BATCH: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates to check when the models have more parameters than this.
    pub max_coordinates: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            max_coordinates: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a − n| / max(|a|, |n|, 1e-8)` over the checked coordinates.
    pub max_relative_error: f64,
    /// Tensor and flat index of that coordinate.
    pub worst: String,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
    pub parameters: usize,
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

struct Coordinate {
    teacher: bool,
    tensor: usize,
    index: usize,
}

/// Embedding rows the batch actually touches, per side.
fn used_rows(batch: &[TrainingExample]) -> [(BTreeSet<usize>, usize); 2] {
    let mut s = (BTreeSet::new(), 0);
    let mut t = (BTreeSet::new(), 0);
    for ex in batch {
        s.0.extend(&ex.pinyin);
        s.1 = s.1.max(ex.pinyin.len());
        if let Some(h) = &ex.hanzi {
            t.0.extend(h);
            t.1 = t.1.max(h.len());
        }
    }
    [s, t]
}

fn candidates(
    tensors: &[&super::tensor::Tensor],
    rows: &(BTreeSet<usize>, usize),
) -> Vec<Vec<usize>> {
    tensors
        .iter()
        .enumerate()
        .map(|(i, t)| match i {
            0 => rows
                .0
                .iter()
                .flat_map(|&r| r * t.cols..(r + 1) * t.cols)
                .collect(),
            1 => (0..rows.1.min(t.rows) * t.cols).collect(),
            _ => (0..t.len()).collect(),
        })
        .collect()
}

fn set(s: &mut StudentModel, t: &mut TeacherModel, c: &Coordinate, value: f64) {
    if c.teacher {
        t.tensors_mut()[c.tensor].data[c.index] = value;
    } else {
        s.tensors_mut()[c.tensor].data[c.index] = value;
    }
}

/// Compares the reverse-mode gradient of the total loss with central
/// differences `(f(θ+ε) − f(θ−ε)) / 2ε`. Every parameter is checked when
/// the models are small enough; otherwise a seeded sample stratified by
/// tensor, with embedding coordinates drawn from the rows the batch uses.
///
/// With a detached teacher the numeric side holds the teacher's outputs in
/// the distillation terms fixed at their unperturbed values, which is the
/// function whose gradient the analytic pass computes.
pub fn gradient_check(
    student: &StudentModel,
    teacher: &TeacherModel,
    batch: &[TrainingExample],
    options: LossOptions,
    config: GradCheckConfig,
) -> Result<GradCheckReport> {
    if batch.is_empty() || batch.len() > MAX_BATCH {
        return Err(Error::InvalidInput(format!(
            "gradient check needs 1 to {MAX_BATCH} records, got {}",
            batch.len()
        )));
    }
    let (_, gs, gt) = loss_and_gradients(student, teacher, batch, options)?;
    let frozen = if options.detach_teacher && options.switches.needs_teacher() {
        Some(teacher_targets(teacher, batch)?)
    } else {
        None
    };

    let rows = used_rows(batch);
    let sides = [
        candidates(&student.tensors(), &rows[0]),
        candidates(&teacher.tensors(), &rows[1]),
    ];
    let total: usize = sides.iter().flatten().map(Vec::len).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coords = Vec::new();
    for (side, per_tensor) in sides.iter().enumerate() {
        for (ti, cand) in per_tensor.iter().enumerate() {
            let take = if total <= config.max_coordinates {
                cand.len()
            } else {
                let share = (cand.len() * config.max_coordinates).div_ceil(total);
                share.max(8).min(cand.len())
            };
            let picked: Vec<usize> = if take == cand.len() {
                cand.clone()
            } else {
                sample(&mut rng, cand.len(), take)
                    .into_iter()
                    .map(|k| cand[k])
                    .collect()
            };
            coords.extend(picked.into_iter().map(|index| Coordinate {
                teacher: side == 1,
                tensor: ti,
                index,
            }));
        }
    }

    let names_s = student.tensor_names();
    let names_t = teacher.tensor_names();
    let grads_s = gs.tensors();
    let grads_t = gt.tensors();
    let mut s = student.clone();
    let mut t = teacher.clone();
    let f = |s: &StudentModel, t: &TeacherModel| -> Result<f64> {
        Ok(evaluate(s, t, batch, options, frozen.as_deref(), None)?.total)
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        coordinates: coords.len(),
        parameters: student.parameter_count() + teacher.parameter_count(),
    };
    for c in &coords {
        let original = if c.teacher {
            t.tensors()[c.tensor].data[c.index]
        } else {
            s.tensors()[c.tensor].data[c.index]
        };
        let plus = {
            set(&mut s, &mut t, c, original + config.eps);
            f(&s, &t)?
        };
        let minus = {
            set(&mut s, &mut t, c, original - config.eps);
            f(&s, &t)?
        };
        set(&mut s, &mut t, c, original);
        let numeric = (plus - minus) / (2.0 * config.eps);
        let (analytic, name) = if c.teacher {
            (grads_t[c.tensor].data[c.index], &names_t[c.tensor])
        } else {
            (grads_s[c.tensor].data[c.index], &names_s[c.tensor])
        };
        let err = relative_error(analytic, numeric);
        if err > report.max_relative_error || report.worst.is_empty() {
            report.max_relative_error = err;
            report.worst = format!("{name}[{}]", c.index);
            report.analytic = analytic;
            report.numeric = numeric;
        }
    }
    Ok(report)
}
