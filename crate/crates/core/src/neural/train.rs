use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::data::{NameEncoder, TokenizerMode, TrainingExample};
use super::loss::{loss_and_gradients, LossBreakdown, LossOptions, LossSwitches};
use super::model::{student_head, StudentModel, TeacherModel};
use super::optim::Adam;
use super::tensor::softmax;
use crate::corpus::{Gender, NameRecord};
use crate::error::{Error, Result};
use crate::lexicon::SyllableLexicon;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub dim: usize,
    /// Maximum syllables per name.
    pub max_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(skip)]
    pub switches: LossSwitches,
    pub tokenizer: TokenizerMode,
    pub detach_teacher: bool,
    pub min_count: usize,
    /// Also score the training set after every epoch.
    pub track_train_accuracy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            max_len: 3,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            seed: 0,
            switches: LossSwitches::full(),
            tokenizer: TokenizerMode::Syllable,
            detach_teacher: true,
            min_count: 1,
            track_train_accuracy: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.max_len == 0 {
            return bad("max_len must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if self.tokenizer == TokenizerMode::Letter && self.switches.pre {
            return bad(
                "character prediction needs syllable tokens; disable it for the letter tokenizer",
            );
        }
        Ok(())
    }

    pub fn loss_options(&self) -> LossOptions {
        LossOptions {
            switches: self.switches,
            detach_teacher: self.detach_teacher,
        }
    }
}

/// Student, teacher and the vocabularies they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct GenderModel {
    pub student: StudentModel,
    pub teacher: TeacherModel,
    pub encoder: NameEncoder,
}

impl GenderModel {
    /// Fresh, seeded models sized for `encoder`.
    pub fn initialize(encoder: NameEncoder, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = encoder.max_positions();
        let student = StudentModel::new(
            encoder.pinyin_vocab.len(),
            encoder.hanzi_vocab.len(),
            dim,
            positions,
            &mut rng,
        );
        let teacher = TeacherModel::new(encoder.hanzi_vocab.len(), dim, positions, &mut rng);
        Self {
            student,
            teacher,
            encoder,
        }
    }

    pub fn dim(&self) -> usize {
        self.student.dim()
    }

    pub fn predict(&self, text: &str, lex: &SyllableLexicon) -> Result<(Gender, f64)> {
        predict_gender(&self.student, &self.encoder, text, lex)
    }
}

/// Gender and female probability from the pinyin alone. Never abstains.
pub fn predict_gender(
    student: &StudentModel,
    encoder: &NameEncoder,
    text: &str,
    lex: &SyllableLexicon,
) -> Result<(Gender, f64)> {
    let tokens = encoder.inference_tokens(text, lex)?;
    classify(student, &tokens)
}

fn classify(student: &StudentModel, tokens: &[usize]) -> Result<(Gender, f64)> {
    let (_, _, z) = student_head(student, tokens)?;
    let p_female = softmax(&z)[1];
    let gender = if p_female > 0.5 {
        Gender::Female
    } else {
        Gender::Male
    };
    Ok((gender, p_female))
}

/// Share of `records` whose predicted gender matches the label.
pub fn accuracy(model: &GenderModel, records: &[NameRecord], lex: &SyllableLexicon) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to score".into()));
    }
    let mut hits = 0usize;
    for r in records {
        if model.predict(&r.pinyin, lex)?.0 == r.gender {
            hits += 1;
        }
    }
    Ok(hits as f64 / records.len() as f64)
}

fn example_accuracy(student: &StudentModel, examples: &[TrainingExample]) -> Result<f64> {
    let mut hits = 0usize;
    for ex in examples {
        if classify(student, &ex.pinyin)?.0 == ex.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// Index form of `records`. Records whose pinyin cannot be aligned to their
/// characters are skipped and counted.
pub fn prepare_examples(
    records: &[NameRecord],
    encoder: &NameEncoder,
    lex: &SyllableLexicon,
    switches: LossSwitches,
) -> Result<(Vec<TrainingExample>, usize)> {
    let mut out = Vec::with_capacity(records.len());
    let mut skipped = 0;
    for (i, r) in records.iter().enumerate() {
        match encoder.training_example(r, lex, switches.needs_hanzi(), i + 1)? {
            Some(ex) => out.push(ex),
            None => skipped += 1,
        }
    }
    Ok((out, skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Record-weighted mean of the batch losses over the epoch.
    pub losses: LossBreakdown,
    pub val_acc: Option<f64>,
    pub train_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy (the
    /// earliest on ties), or the last epoch without validation data.
    pub model: GenderModel,
    pub best_epoch: usize,
    pub trace: Vec<EpochTrace>,
    /// Training records that could not be aligned.
    pub skipped: usize,
}

/// Builds vocabularies from `train_records`, initializes both models from
/// the seed and trains them jointly.
pub fn train(
    train_records: &[NameRecord],
    validation: &[NameRecord],
    config: &TrainConfig,
    lex: &SyllableLexicon,
) -> Result<TrainOutcome> {
    config.validate()?;
    let encoder = NameEncoder::build(
        train_records,
        config.tokenizer,
        lex,
        config.min_count,
        config.max_len,
    )?;
    let (examples, skipped) = prepare_examples(train_records, &encoder, lex, config.switches)?;
    let model = GenderModel::initialize(encoder, config.dim, config.seed);
    let mut outcome = train_models(model, &examples, validation, config, lex)?;
    outcome.skipped = skipped;
    Ok(outcome)
}

/// Trains an existing model pair on prepared examples.
pub fn train_models(
    mut model: GenderModel,
    examples: &[TrainingExample],
    validation: &[NameRecord],
    config: &TrainConfig,
    lex: &SyllableLexicon,
) -> Result<TrainOutcome> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidInput("no trainable records".into()));
    }
    let options = config.loss_options();
    let update_teacher = options.switches.needs_teacher();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5348_5546_464c_4531);
    let new_adam = || {
        Adam::new(
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.epsilon,
        )
    };
    let (mut opt_s, mut opt_t) = (new_adam(), new_adam());

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, GenderModel)> = None;
    let mut step = 0usize;
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sums = [0.0f64; 6];
        for chunk in order.chunks(config.batch_size) {
            step += 1;
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let (losses, gs, gt) =
                loss_and_gradients(&model.student, &model.teacher, &batch, options)?;
            if !losses.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    detail: format!("{losses:?}"),
                });
            }
            let w = batch.len() as f64;
            for (s, v) in sums.iter_mut().zip([
                losses.l_pre,
                losses.l_name,
                losses.l_feature,
                losses.l_response,
                losses.l_pinyin,
                losses.total,
            ]) {
                *s += v * w;
            }
            opt_s.step(&mut model.student, &gs);
            if update_teacher {
                opt_t.step(&mut model.teacher, &gt);
            }
        }
        let n = examples.len() as f64;
        let losses = LossBreakdown {
            l_pre: sums[0] / n,
            l_name: sums[1] / n,
            l_feature: sums[2] / n,
            l_response: sums[3] / n,
            l_pinyin: sums[4] / n,
            total: sums[5] / n,
        };
        let val_acc = if validation.is_empty() {
            None
        } else {
            Some(accuracy(&model, validation, lex)?)
        };
        let train_acc = if config.track_train_accuracy {
            Some(example_accuracy(&model.student, examples)?)
        } else {
            None
        };
        if let Some(acc) = val_acc {
            if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.clone()));
            }
        }
        trace.push(EpochTrace {
            epoch,
            losses,
            val_acc,
            train_acc,
        });
    }

    let (model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, config.epochs),
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        trace,
        skipped: 0,
    })
}

/// Writes the per-epoch trace as CSV.
pub fn write_trace<W: Write>(out: W, trace: &[EpochTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epoch",
        "l_pre",
        "l_name",
        "l_feature",
        "l_response",
        "l_pinyin",
        "total",
        "val_acc",
    ])?;
    for t in trace {
        let l = &t.losses;
        w.write_record([
            t.epoch.to_string(),
            l.l_pre.to_string(),
            l.l_name.to_string(),
            l.l_feature.to_string(),
            l.l_response.to_string(),
            l.l_pinyin.to_string(),
            l.total.to_string(),
            t.val_acc.map_or_else(String::new, |v| v.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthSpec};

    fn small_config() -> TrainConfig {
        TrainConfig {
            dim: 8,
            batch_size: 8,
            epochs: 2,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    fn records() -> Vec<NameRecord> {
        let spec = SynthSpec::ambiguous_mandarin(10, 30, 1);
        generate_synthetic(&spec, 2).unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        let lex = SyllableLexicon::mandarin();
        let data = records();
        let a = train(&data, &data[..5], &small_config(), &lex).unwrap();
        let b = train(&data, &data[..5], &small_config(), &lex).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.len(), 2);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let lex = SyllableLexicon::mandarin();
        let data = records();
        let config = TrainConfig {
            learning_rate: 0.0,
            ..small_config()
        };
        let encoder =
            NameEncoder::build(&data, TokenizerMode::Syllable, &lex, 1, config.max_len).unwrap();
        let (examples, _) = prepare_examples(&data, &encoder, &lex, config.switches).unwrap();
        let init = GenderModel::initialize(encoder, config.dim, config.seed);
        let out = train_models(init.clone(), &examples, &[], &config, &lex).unwrap();
        assert_eq!(out.model, init);
    }

    #[test]
    fn letter_tokenizer_requires_pre_off() {
        let mut config = TrainConfig {
            tokenizer: TokenizerMode::Letter,
            ..small_config()
        };
        assert!(config.validate().is_err());
        config.switches.pre = false;
        config.validate().unwrap();
    }

    #[test]
    fn probability_matches_label() {
        let lex = SyllableLexicon::mandarin();
        let data = records();
        let out = train(&data, &[], &small_config(), &lex).unwrap();
        for name in ["yan", "jianguo", "xyz", "Li Na"] {
            let (g, p) = out.model.predict(name, &lex).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(g == Gender::Female, p > 0.5);
        }
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "epoch,l_pre,l_name,l_feature,l_response,l_pinyin,total,val_acc"
        );
    }
}
