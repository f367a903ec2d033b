//! Scoring with an `unknown` outcome.
//!
//! Name-gender tools may decline to answer. Predictions are tallied into a
//! six-cell matrix (true male/female × predicted male/female/unknown) from
//! which four error rates are derived:
//!
//! | metric                | value                                      |
//! |-----------------------|--------------------------------------------|
//! | `errorCoded`          | (f_m + m_f + m_u + f_u) / N                |
//! | `errorCodedWithoutNA` | (f_m + m_f) / C                            |
//! | `naCoded`             | (m_u + f_u) / N                            |
//! | `errorGenderBias`     | (m_f − f_m) / C                            |
//!
//! where `N` counts every record and `C = N − m_u − f_u` only the classified
//! ones. A positive bias means men are misclassified more often than women.
//! Accuracy and macro precision / recall / F1 are computed on classified
//! records.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Gender, Reject};
use crate::error::{Error, Result};

/// A predicted label, possibly `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Male,
    Female,
    Unknown,
}

impl From<Gender> for Prediction {
    fn from(g: Gender) -> Self {
        match g {
            Gender::Male => Prediction::Male,
            Gender::Female => Prediction::Female,
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prediction::Male => "male",
            Prediction::Female => "female",
            Prediction::Unknown => "unknown",
        })
    }
}

impl FromStr for Prediction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Prediction::Male),
            "female" => Ok(Prediction::Female),
            "unknown" => Ok(Prediction::Unknown),
            other => Err(Error::InvalidInput(format!(
                "label {other:?} is not one of male, female, unknown"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub pinyin: String,
    pub predicted: Prediction,
}

impl PredictionRecord {
    pub fn new(pinyin: impl Into<String>, predicted: Prediction) -> Self {
        Self {
            pinyin: pinyin.into(),
            predicted,
        }
    }
}

/// Counts of the six outcomes; the first letter is the true class, the
/// second the prediction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix6 {
    pub m_m: u64,
    pub m_f: u64,
    pub m_u: u64,
    pub f_m: u64,
    pub f_f: u64,
    pub f_u: u64,
}

impl ConfusionMatrix6 {
    pub fn new(m_m: u64, m_f: u64, m_u: u64, f_m: u64, f_f: u64, f_u: u64) -> Self {
        Self {
            m_m,
            m_f,
            m_u,
            f_m,
            f_f,
            f_u,
        }
    }

    pub fn add(&mut self, truth: Gender, predicted: Prediction) {
        let cell = match (truth, predicted) {
            (Gender::Male, Prediction::Male) => &mut self.m_m,
            (Gender::Male, Prediction::Female) => &mut self.m_f,
            (Gender::Male, Prediction::Unknown) => &mut self.m_u,
            (Gender::Female, Prediction::Male) => &mut self.f_m,
            (Gender::Female, Prediction::Female) => &mut self.f_f,
            (Gender::Female, Prediction::Unknown) => &mut self.f_u,
        };
        *cell += 1;
    }

    pub fn total(&self) -> u64 {
        self.m_m + self.m_f + self.m_u + self.f_m + self.f_f + self.f_u
    }

    pub fn classified(&self) -> u64 {
        self.total() - self.m_u - self.f_u
    }

    /// The same matrix with the roles of the two genders exchanged.
    pub fn swap_genders(&self) -> Self {
        Self::new(self.f_f, self.f_m, self.f_u, self.m_f, self.m_m, self.m_u)
    }
}

/// Pairs every truth record with a prediction for the same name. Repeated
/// names are matched by order of appearance.
pub fn tally_confusion(
    truth: &[(String, Gender)],
    preds: &[PredictionRecord],
) -> Result<ConfusionMatrix6> {
    let mut queues: HashMap<&str, std::collections::VecDeque<Prediction>> = HashMap::new();
    for p in preds {
        queues
            .entry(p.pinyin.as_str())
            .or_default()
            .push_back(p.predicted);
    }
    let mut cm = ConfusionMatrix6::default();
    for (i, (name, gender)) in truth.iter().enumerate() {
        let predicted = queues
            .get_mut(name.as_str())
            .and_then(|q| q.pop_front())
            .ok_or(Error::MissingPrediction(i + 1))?;
        cm.add(*gender, predicted);
    }
    let extra: usize = queues.values().map(|q| q.len()).sum();
    if extra > 0 {
        return Err(Error::InvalidInput(format!(
            "{extra} predictions have no matching truth record"
        )));
    }
    Ok(cm)
}

/// The four abstention-aware error rates. The two rates over classified
/// records are `None` when nothing was classified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub error_coded: f64,
    pub error_coded_without_na: Option<f64>,
    pub na_coded: f64,
    pub error_gender_bias: Option<f64>,
}

pub fn compute_error_metrics(cm: &ConfusionMatrix6) -> Result<ErrorMetrics> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let n = n as f64;
    let c = cm.classified();
    let mis = (cm.f_m + cm.m_f) as f64;
    let (without_na, bias) = if c == 0 {
        (None, None)
    } else {
        let c = c as f64;
        (Some(mis / c), Some((cm.m_f as f64 - cm.f_m as f64) / c))
    };
    Ok(ErrorMetrics {
        error_coded: (mis + (cm.m_u + cm.f_u) as f64) / n,
        error_coded_without_na: without_na,
        na_coded: (cm.m_u + cm.f_u) as f64 / n,
        error_gender_bias: bias,
    })
}

/// Accuracy and macro-averaged precision / recall / F1 over classified
/// records, female as the positive class of the per-class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PrfMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-class quantities whose denominator was zero (counted as 0).
    pub flags: Vec<String>,
}

pub fn compute_prf(cm: &ConfusionMatrix6) -> Option<PrfMetrics> {
    let c = cm.classified();
    if c == 0 {
        return None;
    }
    let mut flags = Vec::new();
    let mut ratio = |num: u64, den: u64, what: &str| {
        if den == 0 {
            flags.push(what.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let p_male = ratio(cm.m_m, cm.m_m + cm.f_m, "precision[male]");
    let r_male = ratio(cm.m_m, cm.m_m + cm.m_f, "recall[male]");
    let p_female = ratio(cm.f_f, cm.f_f + cm.m_f, "precision[female]");
    let r_female = ratio(cm.f_f, cm.f_f + cm.f_m, "recall[female]");
    let f1 = |p: f64, r: f64| {
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    Some(PrfMetrics {
        accuracy: (cm.m_m + cm.f_f) as f64 / c as f64,
        precision: (p_male + p_female) / 2.0,
        recall: (r_male + r_female) / 2.0,
        f1: (f1(p_male, r_male) + f1(p_female, r_female)) / 2.0,
        flags,
    })
}

/// Everything reported for one set of predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub confusion: ConfusionMatrix6,
    pub errors: ErrorMetrics,
    pub prf: Option<PrfMetrics>,
}

impl MetricReport {
    pub fn from_confusion(cm: ConfusionMatrix6) -> Result<Self> {
        Ok(Self {
            confusion: cm,
            errors: compute_error_metrics(&cm)?,
            prf: compute_prf(&cm),
        })
    }

    /// `(metric, value)` rows; undefined values are `None`.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        let e = &self.errors;
        let p = self.prf.as_ref();
        vec![
            ("errorCoded", Some(e.error_coded)),
            ("errorCodedWithoutNA", e.error_coded_without_na),
            ("naCoded", Some(e.na_coded)),
            ("errorGenderBias", e.error_gender_bias),
            ("accuracy", p.map(|p| p.accuracy)),
            ("precision", p.map(|p| p.precision)),
            ("recall", p.map(|p| p.recall)),
            ("f1", p.map(|p| p.f1)),
        ]
    }

    /// Machine-readable `metric,value` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        for (name, value) in self.rows() {
            let v = value.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
            w.write_record([name, v.as_str()])?;
        }
        let cm = &self.confusion;
        for (name, v) in [
            ("m_m", cm.m_m),
            ("m_f", cm.m_f),
            ("m_u", cm.m_u),
            ("f_m", cm.f_m),
            ("f_f", cm.f_f),
            ("f_u", cm.f_u),
        ] {
            w.write_record([name, v.to_string().as_str()])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cm = &self.confusion;
        writeln!(f, "                predicted")?;
        writeln!(
            f,
            "true      {:>8} {:>8} {:>8}",
            "male", "female", "unknown"
        )?;
        writeln!(f, "male      {:>8} {:>8} {:>8}", cm.m_m, cm.m_f, cm.m_u)?;
        writeln!(f, "female    {:>8} {:>8} {:>8}", cm.f_m, cm.f_f, cm.f_u)?;
        writeln!(f)?;
        for (name, value) in self.rows() {
            match value {
                Some(v) => writeln!(f, "{name:<22}{v:>9.4}")?,
                None => writeln!(f, "{name:<22}{:>9}", "undefined")?,
            }
        }
        if let Some(p) = &self.prf {
            if !p.flags.is_empty() {
                writeln!(f, "zero denominators: {}", p.flags.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Predictions read from a `pinyin,predicted` CSV.
#[derive(Debug, Clone, Default)]
pub struct ImportedPredictions {
    pub predictions: Vec<PredictionRecord>,
    pub rejects: Vec<Reject>,
}

/// Reads third-party predictions. Labels are matched case-insensitively
/// against male / female / unknown; anything else (including `NA`) is
/// rejected with its data-row number.
pub fn import_predictions_from<R: Read>(input: R) -> Result<ImportedPredictions> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (name_col, label_col) = (col("pinyin")?, col("predicted")?);
    let mut out = ImportedPredictions::default();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let name = row.get(name_col).unwrap_or("").trim();
        let label = row.get(label_col).unwrap_or("");
        match label.parse::<Prediction>() {
            Ok(p) if !name.is_empty() => out.predictions.push(PredictionRecord::new(name, p)),
            Ok(_) => out.rejects.push(Reject {
                row: i + 1,
                reason: "empty name".into(),
            }),
            Err(e) => out.rejects.push(Reject {
                row: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

pub fn import_predictions(path: impl AsRef<Path>) -> Result<ImportedPredictions> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    import_predictions_from(file)
}

/// Writes predictions as `pinyin,predicted`.
pub fn write_predictions<W: Write>(out: W, preds: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pinyin", "predicted"])?;
    for p in preds {
        w.write_record([p.pinyin.as_str(), &p.predicted.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tally_cells() {
        let truth = vec![
            ("a".to_string(), Gender::Male),
            ("b".to_string(), Gender::Female),
        ];
        let preds = vec![
            PredictionRecord::new("b", Prediction::Unknown),
            PredictionRecord::new("a", Prediction::Male),
        ];
        let cm = tally_confusion(&truth, &preds).unwrap();
        assert_eq!(cm, ConfusionMatrix6::new(1, 0, 0, 0, 0, 1));
    }

    #[test]
    fn tally_sums_to_pairs() {
        let labels = [Prediction::Male, Prediction::Female, Prediction::Unknown];
        let truth: Vec<(String, Gender)> = (0..10)
            .map(|i| {
                (
                    format!("n{i}"),
                    if i % 2 == 0 {
                        Gender::Male
                    } else {
                        Gender::Female
                    },
                )
            })
            .collect();
        let preds: Vec<PredictionRecord> = (0..10)
            .map(|i| PredictionRecord::new(format!("n{i}"), labels[i % 3]))
            .collect();
        assert_eq!(tally_confusion(&truth, &preds).unwrap().total(), 10);
    }

    #[test]
    fn tally_requires_every_prediction() {
        let truth = vec![
            ("a".to_string(), Gender::Male),
            ("a".to_string(), Gender::Male),
        ];
        let preds = vec![PredictionRecord::new("a", Prediction::Male)];
        assert!(matches!(
            tally_confusion(&truth, &preds),
            Err(Error::MissingPrediction(2))
        ));
        let preds = vec![
            PredictionRecord::new("a", Prediction::Male),
            PredictionRecord::new("a", Prediction::Male),
            PredictionRecord::new("b", Prediction::Male),
        ];
        assert!(tally_confusion(&truth, &preds).is_err());
    }

    #[test]
    fn hand_computed_errors() {
        let e = compute_error_metrics(&ConfusionMatrix6::new(4, 1, 1, 1, 3, 0)).unwrap();
        assert!((e.error_coded - 0.3).abs() < 1e-12);
        assert!((e.error_coded_without_na.unwrap() - 2.0 / 9.0).abs() < 1e-12);
        assert!((e.na_coded - 0.1).abs() < 1e-12);
        assert_eq!(e.error_gender_bias, Some(0.0));
    }

    #[test]
    fn no_abstentions_means_equal_error_rates() {
        let e = compute_error_metrics(&ConfusionMatrix6::new(50, 7, 0, 13, 30, 0)).unwrap();
        assert_eq!(e.na_coded, 0.0);
        assert_eq!(Some(e.error_coded), e.error_coded_without_na);
    }

    #[test]
    fn all_correct() {
        let cm = ConfusionMatrix6::new(5, 0, 0, 0, 7, 0);
        let e = compute_error_metrics(&cm).unwrap();
        assert_eq!(
            (
                e.error_coded,
                e.error_coded_without_na,
                e.na_coded,
                e.error_gender_bias
            ),
            (0.0, Some(0.0), 0.0, Some(0.0))
        );
        let p = compute_prf(&cm).unwrap();
        assert_eq!(
            (p.accuracy, p.precision, p.recall, p.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn nothing_classified_is_undefined() {
        let cm = ConfusionMatrix6::new(0, 0, 3, 0, 0, 2);
        let e = compute_error_metrics(&cm).unwrap();
        assert_eq!(e.error_coded, 1.0);
        assert_eq!(e.error_coded_without_na, None);
        assert_eq!(e.error_gender_bias, None);
        assert!(compute_prf(&cm).is_none());
        assert!(compute_error_metrics(&ConfusionMatrix6::default()).is_err());
    }

    #[test]
    fn symmetric_prf() {
        let p = compute_prf(&ConfusionMatrix6::new(4, 1, 0, 1, 4, 0)).unwrap();
        for v in [p.accuracy, p.precision, p.recall, p.f1] {
            assert!((v - 0.8).abs() < 1e-12);
        }
        assert!(p.flags.is_empty());
    }

    #[test]
    fn one_sided_predictions_flag_zero_denominators() {
        // Everything predicted male.
        let p = compute_prf(&ConfusionMatrix6::new(6, 0, 0, 4, 0, 0)).unwrap();
        assert_eq!(p.flags, vec!["precision[female]".to_string()]);
        assert!((p.precision - 0.3).abs() < 1e-12);
        assert!((p.accuracy - 0.6).abs() < 1e-12);
    }

    #[test]
    fn import_labels() {
        let got = import_predictions_from(
            "pinyin,predicted\nyan,FEMALE\nli,Male\nqi,NA\nwu,unknown\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(
            got.predictions,
            vec![
                PredictionRecord::new("yan", Prediction::Female),
                PredictionRecord::new("li", Prediction::Male),
                PredictionRecord::new("wu", Prediction::Unknown),
            ]
        );
        assert_eq!(got.rejects.len(), 1);
        assert_eq!(got.rejects[0].row, 3);
    }

    #[test]
    fn import_empty_body() {
        let got = import_predictions_from("pinyin,predicted\n".as_bytes()).unwrap();
        assert!(got.predictions.is_empty() && got.rejects.is_empty());
        assert!(import_predictions_from("name,label\n".as_bytes()).is_err());
    }

    #[test]
    fn report_csv_marks_undefined() {
        let report = MetricReport::from_confusion(ConfusionMatrix6::new(0, 0, 1, 0, 0, 0)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("metric,value\nerrorCoded,1.000000\nerrorCodedWithoutNA,undefined\n")
        );
        assert!(report.to_string().contains("undefined"));
    }

    fn matrix() -> impl Strategy<Value = ConfusionMatrix6> {
        (0u64..50, 0u64..50, 0u64..50, 0u64..50, 0u64..50, 0u64..50)
            .prop_map(|(a, b, c, d, e, f)| ConfusionMatrix6::new(a, b, c, d, e, f))
    }

    proptest! {
        #[test]
        fn error_identity(cm in matrix()) {
            prop_assume!(cm.classified() > 0);
            let e = compute_error_metrics(&cm).unwrap();
            let rhs = e.na_coded + e.error_coded_without_na.unwrap() * (1.0 - e.na_coded);
            prop_assert!((e.error_coded - rhs).abs() <= 1e-12);
        }

        #[test]
        fn gender_swap_negates_bias(cm in matrix()) {
            prop_assume!(cm.classified() > 0);
            let a = compute_error_metrics(&cm).unwrap();
            let b = compute_error_metrics(&cm.swap_genders()).unwrap();
            prop_assert_eq!(a.error_coded, b.error_coded);
            prop_assert_eq!(a.error_coded_without_na, b.error_coded_without_na);
            prop_assert_eq!(a.na_coded, b.na_coded);
            prop_assert_eq!(a.error_gender_bias.unwrap(), -b.error_gender_bias.unwrap());
        }
    }
}
