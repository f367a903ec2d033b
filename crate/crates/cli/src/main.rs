mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinyin_gender::baselines::{
    cct_fit, cct_predict, conversion_predict, frequency_predict, nb_fit, nb_predict, read_reports,
    CctConfig, FrequencyTable,
};
use pinyin_gender::corpus::{
    build_statistics, build_statistics_from_file, fold_complement, generate_synthetic, kfold_split,
    read_records, write_records, write_rejects, Gender, NameRecord, SynthSpec,
};
use pinyin_gender::lexicon::{canonical_segment, segment_all, SyllableLexicon};
use pinyin_gender::metrics::{
    import_predictions, tally_confusion, write_predictions, MetricReport, Prediction,
    PredictionRecord,
};
use pinyin_gender::neural::{
    checkpoint, gradient_check, prepare_examples, train, write_trace, GenderModel, GradCheckConfig,
    LossOptions, LossSwitches, NameEncoder, TokenizerMode, TrainConfig,
};
use pinyin_gender::{Error, Result};

use config::{banner, resolve_train_config, ConfigFile, TrainOverrides};

#[derive(Parser)]
#[command(
    name = "pgender",
    version,
    about = "Gender inference for pinyin given names"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress the banner and progress on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Syllable inventory, one per line (defaults to the built-in list).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a pinyin name into syllables.
    Segment {
        name: String,
        /// Only splits into this many syllables.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Validate a records CSV and write the clean rows.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: Option<PathBuf>,
    },
    /// Stream a records CSV into name statistics.
    Stats {
        #[arg(long)]
        data: PathBuf,
        /// Write `pinyin,male,female,top_hanzi` rows here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic labeled corpus.
    Synth {
        /// Generator spec as JSON; a random ambiguous spec otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        syllables: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the student and teacher jointly.
    Train(TrainArgs),
    /// Score a checkpoint on labeled records.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Predict genders for names.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        names: Vec<String>,
        /// CSV with a `pinyin` column.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a non-neural comparator on a train/test pair.
    Baseline(BaselineArgs),
    /// k-fold cross-validation of the full training pipeline.
    Cv {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        /// Records to draw the batch from (synthetic when absent).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        batch: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Fail above this relative error.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Score third-party predictions against labeled records.
    ImportPreds {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        rejects: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Per-epoch loss CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_enum)]
    tokenizer: Option<TokenizerArg>,
    #[arg(long)]
    min_count: Option<usize>,
    /// Let the distillation terms update the teacher too.
    #[arg(long)]
    joint_teacher: bool,
    #[arg(long)]
    no_pre: bool,
    #[arg(long)]
    no_name: bool,
    #[arg(long)]
    no_feature: bool,
    #[arg(long)]
    no_response: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TokenizerArg {
    Syllable,
    Letter,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineKind {
    Freq,
    Nb,
    Cct,
    Conversion,
}

#[derive(Clone, Copy, ValueEnum)]
enum NaPolicy {
    Male,
    Female,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    kind: BaselineKind,
    /// Labeled records the comparator is fitted on.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// `source,pinyin,gender` reports for the consensus baseline.
    #[arg(long)]
    reports: Option<PathBuf>,
    /// Trained model whose character teacher judges converted names.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "male")]
    na_policy: NaPolicy,
    /// Laplace smoothing for Naive Bayes.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Ctx {
    seed: Option<u64>,
    file: ConfigFile,
    quiet: bool,
    lex: SyllableLexicon,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.seed.or(self.file.get("seed")?).unwrap_or(0))
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| self.file.path(key))
            .ok_or_else(|| Error::Config(format!("--{key} is required")))
    }

    fn optional_path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.path(key))
    }

    fn records(&self, path: &Path) -> Result<Vec<NameRecord>> {
        let ingested = read_records(path, &self.lex)?;
        if !ingested.rejects.is_empty() {
            self.note(format!(
                "{}: skipped {} invalid rows",
                path.display(),
                ingested.rejects.len()
            ));
        }
        Ok(ingested.records)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(io::stdout().lock(), $($arg)*).map_err(stdout_err)
    };
}

fn stdout_err(e: io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let lex_path = cli.lexicon.clone().or_else(|| file.path("lexicon"));
    let lex = match &lex_path {
        Some(p) => SyllableLexicon::from_file(p)?,
        None => SyllableLexicon::mandarin(),
    };
    let ctx = Ctx {
        seed: cli.seed,
        file,
        quiet: cli.quiet,
        lex,
    };
    match cli.command {
        Command::Segment { name, count } => cmd_segment(&ctx, &name, count),
        Command::Ingest { data, out, rejects } => cmd_ingest(&ctx, &data, &out, rejects),
        Command::Stats { data, out } => cmd_stats(&ctx, &data, out),
        Command::Synth {
            spec,
            syllables,
            count,
            out,
        } => cmd_synth(&ctx, spec, syllables, count, &out),
        Command::Train(args) => cmd_train(&ctx, &args),
        Command::Eval {
            checkpoint,
            test,
            report,
            predictions,
        } => cmd_eval(&ctx, &checkpoint, &test, report, predictions),
        Command::Predict {
            checkpoint,
            names,
            input,
            out,
        } => cmd_predict(&ctx, &checkpoint, names, input, out),
        Command::Baseline(args) => cmd_baseline(&ctx, &args),
        Command::Cv { train, k } => cmd_cv(&ctx, &train, k),
        Command::Gradcheck {
            data,
            batch,
            dim,
            eps,
            tolerance,
        } => cmd_gradcheck(&ctx, data, batch, dim, eps, tolerance),
        Command::ImportPreds {
            predictions,
            truth,
            rejects,
            report,
        } => cmd_import(&ctx, &predictions, &truth, rejects, report),
    }
}

fn cmd_segment(ctx: &Ctx, name: &str, count: Option<usize>) -> Result<()> {
    let all = segment_all(name, &ctx.lex)?;
    let mut out = io::stdout().lock();
    match canonical_segment(name, &ctx.lex, count)? {
        Some(seg) => writeln!(out, "{}", seg.key()).map_err(stdout_err)?,
        None => {
            return Err(Error::InvalidInput(format!(
                "{name:?} cannot be split into syllables{}",
                count.map_or(String::new(), |k| format!(" of count {k}"))
            )))
        }
    }
    writeln!(out, "alternatives: {}", all.len()).map_err(stdout_err)?;
    for seg in all.iter().filter(|s| count.map_or(true, |k| s.len() == k)) {
        writeln!(out, "  {}", seg.key()).map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_ingest(ctx: &Ctx, data: &Path, out: &Path, rejects: Option<PathBuf>) -> Result<()> {
    let ingested = read_records(data, &ctx.lex)?;
    write_records(create(out)?, &ingested.records)?;
    if let Some(path) = rejects {
        write_rejects(create(&path)?, &ingested.rejects)?;
    }
    say!(
        "rows={} accepted={} rejected={}",
        ingested.total_rows(),
        ingested.records.len(),
        ingested.rejects.len()
    )?;
    Ok(())
}

fn cmd_stats(ctx: &Ctx, data: &Path, out: Option<PathBuf>) -> Result<()> {
    let (stats, rejected) = build_statistics_from_file(data, &ctx.lex)?;
    say!(
        "names={} syllables={} rejected_rows={rejected}",
        stats.key_count(),
        stats.syllable_to_char_counts.len()
    )?;
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["pinyin", "male", "female", "top_hanzi"])?;
        for (key, c) in &stats.pinyin_name_gender_counts {
            w.write_record([
                key.as_str(),
                &c.male.to_string(),
                &c.female.to_string(),
                stats.most_frequent_hanzi(key).unwrap_or(""),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn cmd_synth(
    ctx: &Ctx,
    spec: Option<PathBuf>,
    syllables: usize,
    count: usize,
    out: &Path,
) -> Result<()> {
    let seed = ctx.seed()?;
    let spec = match spec {
        Some(p) => SynthSpec::from_json_file(p)?,
        None => SynthSpec::ambiguous_mandarin(syllables, count, seed),
    };
    ctx.note(format!(
        "# synth: seed={seed} characters={} count={}",
        spec.characters.len(),
        spec.count
    ));
    let records = generate_synthetic(&spec, seed)?;
    write_records(create(out)?, &records)?;
    say!("records={}", records.len())?;
    Ok(())
}

fn train_config(ctx: &Ctx, args: &TrainArgs) -> Result<TrainConfig> {
    let flags = TrainOverrides {
        seed: ctx.seed,
        dim: args.dim,
        max_len: args.max_len,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        tokenizer: args.tokenizer.map(|t| match t {
            TokenizerArg::Syllable => TokenizerMode::Syllable,
            TokenizerArg::Letter => TokenizerMode::Letter,
        }),
        min_count: args.min_count,
        joint_teacher: args.joint_teacher,
        no_pre: args.no_pre,
        no_name: args.no_name,
        no_feature: args.no_feature,
        no_response: args.no_response,
    };
    resolve_train_config(&ctx.file, &flags)
}

fn cmd_train(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    let config = train_config(ctx, args)?;
    let data = ctx.path(&args.data, "data")?;
    let ckpt = ctx.path(&args.checkpoint, "checkpoint")?;
    let val_path = ctx.optional_path(&args.val, "val");
    let trace_path = ctx.optional_path(&args.trace, "trace");
    let mut extra = vec![
        ("data", data.display().to_string()),
        ("checkpoint", ckpt.display().to_string()),
    ];
    if let Some(v) = &val_path {
        extra.push(("val", v.display().to_string()));
    }
    ctx.note(banner("train", &config, &extra));

    let records = ctx.records(&data)?;
    let validation = match &val_path {
        Some(p) => ctx.records(p)?,
        None => Vec::new(),
    };
    let outcome = train(&records, &validation, &config, &ctx.lex)?;
    for t in &outcome.trace {
        ctx.note(format!(
            "epoch {:>3}  total {:.5}  val_acc {}",
            t.epoch,
            t.losses.total,
            t.val_acc.map_or("-".to_string(), |a| format!("{a:.4}"))
        ));
    }
    checkpoint::save(&outcome.model, &ckpt)?;
    if let Some(p) = trace_path {
        write_trace(create(&p)?, &outcome.trace)?;
    }
    say!(
        "trained on {} records (skipped {}), kept epoch {}, wrote {}",
        records.len() - outcome.skipped,
        outcome.skipped,
        outcome.best_epoch,
        ckpt.display()
    )?;
    Ok(())
}

fn model_predictions(
    model: &GenderModel,
    records: &[NameRecord],
    lex: &SyllableLexicon,
) -> Result<Vec<PredictionRecord>> {
    records
        .iter()
        .map(|r| {
            let (g, _) = model.predict(&r.pinyin, lex)?;
            Ok(PredictionRecord::new(r.pinyin.clone(), g.into()))
        })
        .collect()
}

fn report_for(records: &[NameRecord], preds: &[PredictionRecord]) -> Result<MetricReport> {
    let truth: Vec<(String, Gender)> = records
        .iter()
        .map(|r| (r.pinyin.clone(), r.gender))
        .collect();
    MetricReport::from_confusion(tally_confusion(&truth, preds)?)
}

fn emit_report(
    report: &MetricReport,
    preds: &[PredictionRecord],
    report_path: Option<PathBuf>,
    preds_path: Option<PathBuf>,
) -> Result<()> {
    write!(io::stdout().lock(), "{report}").map_err(stdout_err)?;
    if let Some(p) = report_path {
        report.write_csv(create(&p)?)?;
    }
    if let Some(p) = preds_path {
        write_predictions(create(&p)?, preds)?;
    }
    Ok(())
}

fn cmd_eval(
    ctx: &Ctx,
    ckpt: &Option<PathBuf>,
    test: &Option<PathBuf>,
    report: Option<PathBuf>,
    predictions: Option<PathBuf>,
) -> Result<()> {
    let ckpt = ctx.path(ckpt, "checkpoint")?;
    let test = ctx.path(test, "test")?;
    ctx.note(format!(
        "# eval: checkpoint={} test={}",
        ckpt.display(),
        test.display()
    ));
    let model = checkpoint::load(&ckpt, None)?;
    let records = ctx.records(&test)?;
    let preds = model_predictions(&model, &records, &ctx.lex)?;
    let rep = report_for(&records, &preds)?;
    let preds_path = predictions.or_else(|| ctx.file.path("predictions"));
    emit_report(&rep, &preds, report, preds_path)
}

fn cmd_predict(
    ctx: &Ctx,
    ckpt: &Option<PathBuf>,
    mut names: Vec<String>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let ckpt = ctx.path(ckpt, "checkpoint")?;
    let model = checkpoint::load(&ckpt, None)?;
    if let Some(path) = input {
        let mut reader = csv::Reader::from_path(&path)?;
        let col = reader
            .headers()?
            .iter()
            .position(|h| h.trim() == "pinyin")
            .ok_or_else(|| Error::MissingColumn("pinyin".into()))?;
        for row in reader.records() {
            names.push(row?.get(col).unwrap_or("").to_string());
        }
    }
    if names.is_empty() {
        return Err(Error::InvalidInput("no names given".into()));
    }
    let sink: Box<dyn Write> = match &out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["pinyin", "predicted", "p_female"])?;
    for name in &names {
        let (g, p) = model.predict(name, &ctx.lex)?;
        w.write_record([name.as_str(), &g.to_string(), &format!("{p:.6}")])?;
    }
    w.flush().map_err(stdout_err)?;
    Ok(())
}

/// Pinyin-only syllables of a test name; letters when it cannot be split.
fn test_syllables(name: &str, lex: &SyllableLexicon) -> Vec<String> {
    match canonical_segment(name, lex, None) {
        Ok(Some(seg)) => seg.into_parts(),
        _ => name.chars().map(String::from).collect(),
    }
}

fn cmd_baseline(ctx: &Ctx, args: &BaselineArgs) -> Result<()> {
    let test_path = ctx.path(&args.test, "test")?;
    let test = ctx.records(&test_path)?;
    let lex = &ctx.lex;
    let preds: Vec<PredictionRecord> = match args.kind {
        BaselineKind::Cct => {
            let reports_path = args
                .reports
                .clone()
                .ok_or_else(|| Error::Config("--reports is required for cct".into()))?;
            let policy = match args.na_policy {
                NaPolicy::Male => Gender::Male,
                NaPolicy::Female => Gender::Female,
            };
            ctx.note(format!(
                "# baseline cct: reports={} na_policy={policy}",
                reports_path.display()
            ));
            let model = cct_fit(&read_reports(&reports_path)?, CctConfig::default())?
                .with_na_policy(policy);
            ctx.note(format!("converged after {} iterations", model.iterations));
            test.iter()
                .map(|r| {
                    PredictionRecord::new(r.pinyin.clone(), cct_predict(&model, &r.pinyin).into())
                })
                .collect()
        }
        kind => {
            let train_path = ctx.path(&args.train, "data")?;
            let train = ctx.records(&train_path)?;
            let stats = build_statistics(&train, lex);
            match kind {
                BaselineKind::Freq => {
                    ctx.note(format!("# baseline freq: train={}", train_path.display()));
                    let table = FrequencyTable::from_statistics(&stats);
                    test.iter()
                        .map(|r| {
                            let key = test_syllables(&r.pinyin, lex).join(" ");
                            PredictionRecord::new(
                                r.pinyin.clone(),
                                frequency_predict(&table, &key).0,
                            )
                        })
                        .collect()
                }
                BaselineKind::Nb => {
                    ctx.note(format!(
                        "# baseline nb: train={} alpha={}",
                        train_path.display(),
                        args.alpha
                    ));
                    let mut examples = Vec::new();
                    for r in &train {
                        if let Some(seg) = r.segmentation(lex)? {
                            examples.push((seg.into_parts(), r.gender));
                        }
                    }
                    let model = nb_fit(&examples, args.alpha)?;
                    test.iter()
                        .map(|r| {
                            let (g, _) = nb_predict(&model, &test_syllables(&r.pinyin, lex));
                            PredictionRecord::new(r.pinyin.clone(), g.into())
                        })
                        .collect()
                }
                _ => {
                    let ckpt = ctx.path(&args.checkpoint, "checkpoint")?;
                    ctx.note(format!(
                        "# baseline conversion: train={} checkpoint={}",
                        train_path.display(),
                        ckpt.display()
                    ));
                    let model = checkpoint::load(&ckpt, None)?;
                    let mut unmapped = 0usize;
                    let mut preds = Vec::with_capacity(test.len());
                    for r in &test {
                        let predicted = match conversion_predict(
                            &stats,
                            &model,
                            &test_syllables(&r.pinyin, lex),
                        ) {
                            Ok((g, _)) => g.into(),
                            Err(Error::UnknownMapping(_)) => {
                                unmapped += 1;
                                Prediction::Unknown
                            }
                            Err(e) => return Err(e),
                        };
                        preds.push(PredictionRecord::new(r.pinyin.clone(), predicted));
                    }
                    if unmapped > 0 {
                        ctx.note(format!("{unmapped} names had an unmapped syllable"));
                    }
                    preds
                }
            }
        }
    };
    let rep = report_for(&test, &preds)?;
    emit_report(&rep, &preds, args.report.clone(), args.predictions.clone())
}

fn cmd_cv(ctx: &Ctx, args: &TrainArgs, k: usize) -> Result<()> {
    let config = train_config(ctx, args)?;
    let data = ctx.path(&args.data, "data")?;
    ctx.note(banner(
        "cv",
        &config,
        &[("data", data.display().to_string()), ("k", k.to_string())],
    ));
    let records = ctx.records(&data)?;
    let folds = kfold_split(&records, k, config.seed)?;
    let mut accs = Vec::with_capacity(k);
    say!("fold,accuracy,error_coded")?;
    for (i, held) in folds.iter().enumerate() {
        let train_set = fold_complement(&folds, i);
        let outcome = train(&train_set, &[], &config, &ctx.lex)?;
        let preds = model_predictions(&outcome.model, held, &ctx.lex)?;
        let rep = report_for(held, &preds)?;
        let acc = rep.prf.map_or(0.0, |p| p.accuracy);
        say!("{},{acc:.4},{:.4}", i + 1, rep.errors.error_coded)?;
        accs.push(acc);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let sd = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64).sqrt();
    say!("mean,{mean:.4},sd={sd:.4}")?;
    Ok(())
}

fn cmd_gradcheck(
    ctx: &Ctx,
    data: Option<PathBuf>,
    batch: usize,
    dim: usize,
    eps: f64,
    tolerance: f64,
) -> Result<()> {
    let seed = ctx.seed()?;
    let records = match &data {
        Some(p) => ctx.records(p)?,
        None => generate_synthetic(&SynthSpec::ambiguous_mandarin(8, 60, seed), seed)?,
    };
    ctx.note(format!(
        "# gradcheck: seed={seed} batch={batch} dim={dim} eps={eps} tolerance={tolerance}"
    ));
    let encoder = NameEncoder::build(&records, TokenizerMode::Syllable, &ctx.lex, 1, 3)?;
    let (examples, _) = prepare_examples(&records, &encoder, &ctx.lex, LossSwitches::full())?;
    if examples.len() < batch {
        return Err(Error::InvalidInput(format!(
            "need {batch} trainable records, found {}",
            examples.len()
        )));
    }
    let model = GenderModel::initialize(encoder, dim, seed);
    let batch = &examples[..batch];
    let variants = [
        ("full", LossSwitches::full()),
        ("w/o logits", LossSwitches::without_logits()),
        ("w/o logits&feat", LossSwitches::without_logits_and_feat()),
        (
            "w/o distill&namepre",
            LossSwitches::without_distill_and_namepre(),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, switches) in variants {
        let report = gradient_check(
            &model.student,
            &model.teacher,
            batch,
            LossOptions {
                switches,
                detach_teacher: true,
            },
            GradCheckConfig {
                eps,
                seed,
                ..GradCheckConfig::default()
            },
        )?;
        say!(
            "{name:<20} max_rel_error={:.3e} coordinates={}/{} worst={}",
            report.max_relative_error,
            report.coordinates,
            report.parameters,
            report.worst
        )?;
        worst = worst.max(report.max_relative_error);
    }
    if worst < tolerance {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "gradient check failed: {worst:.3e} >= {tolerance:e}"
        )))
    }
}

fn cmd_import(
    ctx: &Ctx,
    predictions: &Path,
    truth: &Path,
    rejects: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<()> {
    let imported = import_predictions(predictions)?;
    if !imported.rejects.is_empty() {
        ctx.note(format!(
            "{}: rejected {} rows",
            predictions.display(),
            imported.rejects.len()
        ));
    }
    if let Some(p) = rejects {
        write_rejects(create(&p)?, &imported.rejects)?;
    }
    let records = ctx.records(truth)?;
    let rep = report_for(&records, &imported.predictions)?;
    emit_report(&rep, &imported.predictions, report, None)
}
