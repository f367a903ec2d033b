//! Simplified consensus over several name-gender sources.
//!
//! Every source gets one competence `θ ∈ [0.01, 0.99]`. The consensus label
//! of a name is a vote of its reports weighted by `ln(θ / (1 − θ))`; each
//! competence is then re-estimated as the share of the source's reports that
//! agree with the consensus. The two steps alternate until competences stop
//! moving.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use crate::corpus::Gender;
use crate::error::{Error, Result};

pub const MIN_COMPETENCE: f64 = 0.01;
pub const MAX_COMPETENCE: f64 = 0.99;
/// Competences start slightly above chance so the first vote has weight.
pub const INITIAL_COMPETENCE: f64 = 0.51;

/// One source's label for one name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceReport {
    pub source: u32,
    pub name: String,
    pub gender: Gender,
}

impl SourceReport {
    pub fn new(source: u32, name: impl Into<String>, gender: Gender) -> Self {
        Self {
            source,
            name: name.into(),
            gender,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consensus {
    pub gender: Gender,
    /// Weighted share of the name's reports agreeing with `gender`.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CctModel {
    pub competences: BTreeMap<u32, f64>,
    pub consensus: BTreeMap<String, Consensus>,
    /// Label for names absent from the reports.
    pub na_policy: Gender,
    pub iterations: usize,
    /// Competences after each iteration.
    pub history: Vec<BTreeMap<u32, f64>>,
}

impl CctModel {
    pub fn with_na_policy(mut self, policy: Gender) -> Self {
        self.na_policy = policy;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CctConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CctConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

fn log_odds(theta: f64) -> f64 {
    (theta / (1.0 - theta)).ln()
}

/// Weighted vote over each name's reports. A zero margin goes to male.
fn consensus_step(
    by_name: &BTreeMap<&str, Vec<(u32, Gender)>>,
    competences: &BTreeMap<u32, f64>,
) -> BTreeMap<String, Consensus> {
    by_name
        .iter()
        .map(|(name, reports)| {
            let (mut female, mut male) = (0.0, 0.0);
            for (source, gender) in reports {
                let w = log_odds(competences[source]);
                match gender {
                    Gender::Female => female += w,
                    Gender::Male => male += w,
                }
            }
            let gender = if female > male {
                Gender::Female
            } else {
                Gender::Male
            };
            let total = female + male;
            let agree = if gender == Gender::Female {
                female
            } else {
                male
            };
            let confidence = if total.abs() > 0.0 {
                agree / total
            } else {
                0.5
            };
            (
                name.to_string(),
                Consensus {
                    gender,
                    confidence: confidence.clamp(0.0, 1.0),
                },
            )
        })
        .collect()
}

/// Alternates consensus and competence updates until the largest change
/// in competence drops below `tol` or `max_iters` is reached.
pub fn cct_fit(reports: &[SourceReport], config: CctConfig) -> Result<CctModel> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no source reports".into()));
    }
    let mut by_name: BTreeMap<&str, Vec<(u32, Gender)>> = BTreeMap::new();
    for r in reports {
        by_name
            .entry(r.name.as_str())
            .or_default()
            .push((r.source, r.gender));
    }
    let mut competences: BTreeMap<u32, f64> = reports
        .iter()
        .map(|r| (r.source, INITIAL_COMPETENCE))
        .collect();

    let mut history = Vec::new();
    let mut consensus = consensus_step(&by_name, &competences);
    for _ in 0..config.max_iters.max(1) {
        if !history.is_empty() {
            consensus = consensus_step(&by_name, &competences);
        }
        let mut agree: HashMap<u32, (u64, u64)> = HashMap::new();
        for r in reports {
            let e = agree.entry(r.source).or_default();
            e.1 += 1;
            if consensus[r.name.as_str()].gender == r.gender {
                e.0 += 1;
            }
        }
        let mut delta: f64 = 0.0;
        for (source, theta) in competences.iter_mut() {
            let (hits, n) = agree[source];
            let updated = (hits as f64 / n as f64).clamp(MIN_COMPETENCE, MAX_COMPETENCE);
            delta = delta.max((updated - *theta).abs());
            *theta = updated;
        }
        history.push(competences.clone());
        if delta < config.tol {
            break;
        }
    }
    Ok(CctModel {
        competences,
        consensus,
        na_policy: Gender::Male,
        iterations: history.len(),
        history,
    })
}

/// Consensus label for a fitted name, the NA policy otherwise.
pub fn cct_predict(model: &CctModel, name: &str) -> Gender {
    model
        .consensus
        .get(name)
        .map_or(model.na_policy, |c| c.gender)
}

/// Reads a `source,pinyin,gender` CSV.
pub fn read_reports_from<R: Read>(input: R) -> Result<Vec<SourceReport>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (s, p, g) = (col("source")?, col("pinyin")?, col("gender")?);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let field = |c: usize| row.get(c).unwrap_or("").trim();
        let source = field(s).parse::<u32>().map_err(|_| {
            Error::InvalidInput(format!("row {}: bad source {:?}", i + 1, field(s)))
        })?;
        let gender: Gender = field(g)
            .parse()
            .map_err(|e| Error::InvalidInput(format!("row {}: {e}", i + 1)))?;
        out.push(SourceReport::new(
            source,
            field(p).to_ascii_lowercase(),
            gender,
        ));
    }
    Ok(out)
}

pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<SourceReport>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_reports_from(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_sources() {
        let mut reports = Vec::new();
        for source in 0..3 {
            for name in ["yan", "li", "mei"] {
                reports.push(SourceReport::new(source, name, Gender::Female));
            }
        }
        let m = cct_fit(&reports, CctConfig::default()).unwrap();
        assert!(m.consensus.values().all(|c| c.gender == Gender::Female));
        assert!(m.competences.values().all(|&t| t == MAX_COMPETENCE));
        assert!(m.iterations <= 2);
    }

    #[test]
    fn majority_on_first_step() {
        let reports = vec![
            SourceReport::new(0, "yan", Gender::Female),
            SourceReport::new(1, "yan", Gender::Female),
            SourceReport::new(2, "yan", Gender::Male),
        ];
        let m = cct_fit(
            &reports,
            CctConfig {
                max_iters: 1,
                tol: 0.0,
            },
        )
        .unwrap();
        assert_eq!(cct_predict(&m, "yan"), Gender::Female);
    }

    #[test]
    fn single_source_is_taken_verbatim() {
        let reports = vec![
            SourceReport::new(7, "yan", Gender::Female),
            SourceReport::new(7, "guo", Gender::Male),
            SourceReport::new(7, "li", Gender::Female),
        ];
        let m = cct_fit(&reports, CctConfig::default()).unwrap();
        for r in &reports {
            assert_eq!(cct_predict(&m, &r.name), r.gender);
        }
    }

    #[test]
    fn na_policy() {
        let reports = vec![SourceReport::new(0, "yan", Gender::Female)];
        let m = cct_fit(&reports, CctConfig::default()).unwrap();
        assert_eq!(cct_predict(&m, "yan"), Gender::Female);
        assert_eq!(cct_predict(&m, "zhang"), Gender::Male);
        let m = m.with_na_policy(Gender::Female);
        assert_eq!(cct_predict(&m, "zhang"), Gender::Female);
    }

    #[test]
    fn unreliable_source_is_downweighted() {
        // Sources 0 and 1 agree everywhere; source 2 disagrees with them on
        // most names, so its competence ends below one half.
        let mut reports = Vec::new();
        for (i, name) in ["a", "b", "c", "d", "e"].iter().enumerate() {
            let g = if i % 2 == 0 {
                Gender::Female
            } else {
                Gender::Male
            };
            reports.push(SourceReport::new(0, *name, g));
            reports.push(SourceReport::new(1, *name, g));
            let other = if i == 0 { g } else { g.flip() };
            reports.push(SourceReport::new(2, *name, other));
        }
        let m = cct_fit(&reports, CctConfig::default()).unwrap();
        assert!(m.competences[&2] < 0.5);
        assert_eq!(m.competences[&0], MAX_COMPETENCE);
    }

    #[test]
    fn reads_reports_csv() {
        let r = read_reports_from("source,pinyin,gender\n1,Yan,1\n2,yan,0\n".as_bytes()).unwrap();
        assert_eq!(r[0], SourceReport::new(1, "yan", Gender::Female));
        assert_eq!(r.len(), 2);
        assert!(read_reports_from("source,pinyin,gender\nx,yan,1\n".as_bytes()).is_err());
    }
}
