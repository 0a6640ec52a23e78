//! Command-line front end: `summary`, `train`, `evaluate`, `score` and
//! `reproduce`.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 data or model file
//! error, 3 training or evaluation failure, 64 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{self, split_sizes, Subset, SubsetSummary};
use crate::error::{DataError, ModelIoError};
use crate::evaluation::ThresholdRule;
use crate::loss::{self, ClassWeights};
use crate::model_io::{self, ModelBundle};
use crate::pipeline::{self, OrderChoice, PipelineError, RunConfig, MODEL_FILE};
use crate::trainer::TrainingConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "lmnet",
    version,
    about = "Levenberg-Marquardt trained screening classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print instance counts, the partition and class balance.
    Summary(SummaryArgs),
    /// Train a network and save the model file.
    Train(TrainArgs),
    /// Evaluate a saved model on one subset of a dataset.
    Evaluate(EvaluateArgs),
    /// Score the rows of a CSV file with a saved model.
    Score(ScoreArgs),
    /// Split, encode, weight, select the order, evaluate and write a report.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Comma-separated data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Seed of the partition and of the weight initialization.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Exclude the `result` column (the sum of the ten screening answers).
    #[arg(long)]
    pub no_result_feature: bool,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Train only this hidden-layer size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1000), conflicts_with = "order_select")]
    pub order: Option<u64>,
    /// Select the hidden-layer size (the default).
    #[arg(long)]
    pub order_select: bool,
    /// Largest hidden-layer size tried by order selection.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=1000))]
    pub max_order: u64,
    /// Independently initialized trainings per order.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=1000))]
    pub trials: u64,
    /// Concurrent trainings; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Iteration limit of each training.
    #[arg(long, default_value_t = TrainingConfig::default().max_iterations)]
    pub max_iterations: usize,
    /// Write the per-iteration log of the selected network to this file.
    #[arg(long)]
    pub train_log: Option<PathBuf>,
    /// Write the per-order losses to this file.
    #[arg(long)]
    pub order_history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Model file path; defaults to `<out>/model.lmnet.json`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Comma-separated data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Model file written by `train` or `reproduce`.
    #[arg(long)]
    pub model: PathBuf,
    /// Partition seed; defaults to the seed stored in the model file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Subset to evaluate.
    #[arg(long, default_value = "testing")]
    pub subset: Subset,
    /// Decision threshold on the positive-class probability.
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    pub threshold: f64,
    /// Pick the ROC threshold by Youden's index instead of corner distance.
    #[arg(long)]
    pub youden: bool,
    /// Also write roc/gain/lift CSV files to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG charts (requires --out).
    #[arg(long, requires = "out")]
    pub svg: bool,
    /// Print the full metrics as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Model file written by `train` or `reproduce`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of records to score; the class column may be absent.
    #[arg(long)]
    pub rows: PathBuf,
    /// Decision threshold on the positive-class probability.
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Decision threshold of the confusion table.
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    pub threshold: f64,
    /// Also write SVG charts of the ROC, gain and lift curves.
    #[arg(long)]
    pub svg: bool,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold must lie in [0, 1], got {v}"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Data(_) | PipelineError::Model(_) => EXIT_DATA,
        PipelineError::Train(_) | PipelineError::Evaluation(_) => EXIT_TRAINING,
        PipelineError::Output { .. } => EXIT_OUTPUT,
    }
}

fn execute(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::Summary(a) => cmd_summary(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Reproduce(a) => cmd_reproduce(&a),
    }
}

fn stdout_write(text: &str) -> Result<(), PipelineError> {
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|source| PipelineError::Output {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn run_config(data: &DataArgs, fit: &FitArgs, threshold: f64, svg: bool) -> RunConfig {
    RunConfig {
        seed: data.seed,
        include_result_feature: !data.no_result_feature,
        threshold,
        threshold_rule: ThresholdRule::CornerDistance,
        order: match fit.order {
            Some(n) => OrderChoice::Fixed(n as usize),
            None => OrderChoice::Select {
                max_order: fit.max_order as usize,
            },
        },
        trials: fit.trials as usize,
        jobs: fit.jobs,
        trainer: TrainingConfig {
            max_iterations: fit.max_iterations,
            ..TrainingConfig::default()
        },
        svg,
    }
}

#[derive(Serialize)]
struct DatasetSummary {
    n_total: usize,
    n_missing_rows: usize,
    n_features: usize,
    partition_sizes: PartitionSizes,
    partition: Vec<SubsetSummary>,
    class_weights: Option<ClassWeights>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct PartitionSizes {
    training: usize,
    selection: usize,
    testing: usize,
}

fn cmd_summary(a: &SummaryArgs) -> Result<(), PipelineError> {
    let schema = pipeline::schema_for(!a.data.no_result_feature);
    let (raw, ds) = pipeline::load_dataset(&a.data.data, &schema, a.data.seed)?;
    let (training, selection, testing) = split_sizes(raw.len());
    let (_, y_train) = ds.subset_view(Subset::Training);
    let summary = DatasetSummary {
        n_total: raw.len(),
        n_missing_rows: raw.n_missing_rows,
        n_features: ds.n_features(),
        partition_sizes: PartitionSizes {
            training,
            selection,
            testing,
        },
        partition: dataset::summarize(&ds),
        class_weights: loss::class_weights(&y_train).ok(),
        warnings: ds.warnings.clone(),
    };
    if a.json {
        let mut text = serde_json::to_string_pretty(&summary).map_err(ModelIoError::from)?;
        text.push('\n');
        return stdout_write(&text);
    }
    let mut s = format!(
        "instances: {} total, {} with missing values, {} features after encoding\n",
        summary.n_total, summary.n_missing_rows, summary.n_features
    );
    s.push_str(&format!(
        "partition (seed {}): {training}/{selection}/{testing}\n",
        a.data.seed
    ));
    s.push_str(&format!(
        "  {:<10} {:>8} {:>8} {:>9} {:>9}\n",
        "subset", "assigned", "used", "positive", "negative"
    ));
    for (p, assigned) in summary.partition.iter().zip([training, selection, testing]) {
        s.push_str(&format!(
            "  {:<10} {:>8} {:>8} {:>9} {:>9}\n",
            p.subset.name(),
            assigned,
            p.n,
            p.n_positive,
            p.n_negative
        ));
    }
    if let Some(w) = summary.class_weights {
        s.push_str(&format!(
            "class weights: positive {:.4}, negative {:.4}\n",
            w.positive, w.negative
        ));
    }
    stdout_write(&s)
}

fn write_optional_logs(fit: &FitArgs, out: &pipeline::RunOutput) -> Result<(), PipelineError> {
    if let Some(path) = &fit.train_log {
        pipeline::write_file(path, &out.train_log_csv)?;
    }
    if let Some(path) = &fit.order_history {
        pipeline::write_file(path, &out.order_history_csv)?;
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<(), PipelineError> {
    let schema = pipeline::schema_for(!a.data.no_result_feature);
    let raw = dataset::parse_csv(&a.data.data, &schema)?;
    let cfg = run_config(&a.data, &a.fit, 0.5, false);
    let out = pipeline::run_on_table(&raw, &cfg)?;
    let model_path = a.model.clone().unwrap_or_else(|| a.out.join(MODEL_FILE));
    pipeline::write_file(
        &model_path,
        out.file(MODEL_FILE).expect("model is always rendered"),
    )?;
    if a.fit.order_history.is_none() {
        pipeline::write_file(&a.out.join("order_history.csv"), &out.order_history_csv)?;
    }
    write_optional_logs(&a.fit, &out)?;
    let fs = &out.fitted.log.final_state;
    stdout_write(&format!(
        "order {} trained: loss {:.4e}, {} iterations, stopping: {}\nmodel written to {}\n",
        out.fitted.order_selection.optimal_order,
        fs.final_loss,
        fs.iterations,
        fs.stopping_reason,
        model_path.display()
    ))
}

fn load_model(path: &Path) -> Result<ModelBundle, PipelineError> {
    Ok(model_io::load(path)?)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), PipelineError> {
    let bundle = load_model(&a.model)?;
    let raw = dataset::parse_csv(&a.data, &bundle.schema)?;
    let seed = a.seed.unwrap_or(bundle.training_summary.split_seed);
    let assignment = dataset::split(raw.len(), seed)?;
    let ds = dataset::encode_with(&bundle.encoder(), &raw, &assignment)?;
    let rule = if a.youden {
        ThresholdRule::Youden
    } else {
        ThresholdRule::CornerDistance
    };
    let metrics = pipeline::evaluate_subset(
        &bundle.network(),
        &ds,
        bundle.class_weights,
        a.subset,
        a.threshold,
        rule,
    )?;

    if let Some(dir) = &a.out {
        let mut files = Vec::new();
        if let Some(roc) = &metrics.roc {
            let mut buf = Vec::new();
            roc.write_csv(&mut buf).expect("in-memory write");
            files.push((
                "roc.csv".to_string(),
                String::from_utf8(buf).expect("UTF-8"),
            ));
            if a.svg {
                files.push(("roc.svg".to_string(), crate::svg::roc_svg(roc)));
            }
        }
        if let Some(g) = &metrics.gain_lift {
            let (mut gain, mut lift) = (Vec::new(), Vec::new());
            g.write_gain_csv(&mut gain).expect("in-memory write");
            g.write_lift_csv(&mut lift).expect("in-memory write");
            files.push((
                "gain.csv".to_string(),
                String::from_utf8(gain).expect("UTF-8"),
            ));
            files.push((
                "lift.csv".to_string(),
                String::from_utf8(lift).expect("UTF-8"),
            ));
            if a.svg {
                let down = g.downsample(100);
                files.push(("gain.svg".to_string(), crate::svg::gain_svg(&down)));
                files.push(("lift.svg".to_string(), crate::svg::lift_svg(&down)));
            }
        }
        pipeline::write_files(dir, &files)?;
    }

    if a.json {
        let mut text = serde_json::to_string_pretty(&metrics).map_err(ModelIoError::from)?;
        text.push('\n');
        return stdout_write(&text);
    }
    let c = metrics.confusion.counts;
    let mut s = format!(
        "subset {} ({} instances)\n",
        metrics.subset.name(),
        metrics.n
    );
    s.push_str(&format!(
        "confusion at {}: tp {} fn {} fp {} tn {}\naccuracy {:.3}%\n",
        metrics.confusion.threshold, c.tp, c.fn_, c.fp, c.tn, metrics.accuracy_percent
    ));
    if let Some(roc) = &metrics.roc {
        s.push_str(&format!(
            "AUC {:.6}, optimal threshold {:.4}\n",
            roc.auc, roc.optimal_threshold
        ));
    }
    if let Some(g) = &metrics.gain_lift {
        s.push_str(&format!(
            "max gain score {:.4} at ratio {:.4}\n",
            g.max_gain_score, g.max_gain_ratio
        ));
    }
    if let Some(e) = &metrics.errors {
        for (name, v) in loss::ErrorReport::NAMES.iter().zip(e.values()) {
            s.push_str(&format!("{name:<26} {v:.6e}\n"));
        }
    }
    stdout_write(&s)
}

fn cmd_score(a: &ScoreArgs) -> Result<(), PipelineError> {
    let bundle = load_model(&a.model)?;
    let file = File::open(&a.rows).map_err(|source| DataError::Io {
        path: a.rows.clone(),
        source,
    })?;
    let raw = dataset::parse_unlabeled_reader(file, &bundle.schema)?;
    let scorer = bundle.scorer();
    let target = bundle.schema.target_index();
    let mut s = String::from("row,probability,prediction\n");
    for (i, row) in raw.rows.iter().enumerate() {
        let predictors_missing = row
            .iter()
            .enumerate()
            .any(|(j, c)| j != target && c.is_none());
        let line = match scorer.score(row, a.threshold) {
            Ok((p, pred)) => format!("{},{},{pred}\n", i + 1, model_io::exact_f64::format(p)),
            Err(_) if predictors_missing => format!("{},,REFUSED(missing)\n", i + 1),
            Err(e) => {
                log::warn!("row {}: {e}", i + 1);
                format!("{},,REFUSED(invalid)\n", i + 1)
            }
        };
        s.push_str(&line);
    }
    stdout_write(&s)
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<(), PipelineError> {
    let schema = pipeline::schema_for(!a.data.no_result_feature);
    let raw = dataset::parse_csv(&a.data.data, &schema)?;
    let cfg = run_config(&a.data, &a.fit, a.threshold, a.svg);
    let out = pipeline::run_on_table(&raw, &cfg)?;
    pipeline::write_files(&a.out, &out.files)?;
    write_optional_logs(&a.fit, &out)?;
    stdout_write(&out.summary)?;
    stdout_write(&format!("outputs written to {}\n", a.out.display()))
}
