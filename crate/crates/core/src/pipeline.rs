//! End-to-end runs: split, encode, weight, select order, evaluate, and render
//! every output file in memory before anything touches the disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{self, EncodedDataset, RawTable, Schema, Subset, SubsetSummary};
use crate::error::{DataError, ModelIoError, NumericError, TrainError};
use crate::evaluation::{self, ConfusionTable, GainLiftCurves, RocCurve, ThresholdRule};
use crate::loss::{self, ClassWeights, ErrorReport};
use crate::model_io::{ModelBundle, TrainingSummary, FILE_EXTENSION};
use crate::network::Network;
use crate::order_selection::{select_order, OrderSelectionConfig, OrderSelectionResult};
use crate::svg;
use crate::trainer::{StoppingReason, TrainingConfig, TrainingLog};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelIoError),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] NumericError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderChoice {
    /// Train only this hidden-layer size.
    Fixed(usize),
    /// Sweep `1..=max_order`.
    Select { max_order: usize },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub include_result_feature: bool,
    pub threshold: f64,
    pub threshold_rule: ThresholdRule,
    pub order: OrderChoice,
    pub trials: usize,
    pub jobs: usize,
    pub trainer: TrainingConfig,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            include_result_feature: true,
            threshold: 0.5,
            threshold_rule: ThresholdRule::CornerDistance,
            order: OrderChoice::Select { max_order: 10 },
            trials: 3,
            jobs: 0,
            trainer: TrainingConfig::default(),
            svg: false,
        }
    }
}

pub fn schema_for(include_result_feature: bool) -> Schema {
    let schema = Schema::asd_adult();
    if include_result_feature {
        schema
    } else {
        schema
            .ignoring("result")
            .expect("default schema has a result column")
    }
}

/// Split and encode a parsed table.
pub fn prepare(raw: &RawTable, schema: &Schema, seed: u64) -> Result<EncodedDataset, DataError> {
    let assignment = dataset::split(raw.len(), seed)?;
    dataset::encode(raw, schema, &assignment)
}

pub fn load_dataset(
    path: &Path,
    schema: &Schema,
    seed: u64,
) -> Result<(RawTable, EncodedDataset), DataError> {
    let raw = dataset::parse_csv(path, schema)?;
    let ds = prepare(&raw, schema, seed)?;
    Ok((raw, ds))
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub net: Network,
    pub class_weights: ClassWeights,
    pub order_selection: OrderSelectionResult,
    pub log: TrainingLog,
}

/// Class weights from the training subset, then order selection.
pub fn fit(ds: &EncodedDataset, cfg: &RunConfig) -> Result<FittedModel, PipelineError> {
    let (_, y_train) = ds.subset_view(Subset::Training);
    let class_weights = loss::class_weights(&y_train).map_err(|_| TrainError::SingleClass)?;
    let (min_order, max_order) = match cfg.order {
        OrderChoice::Fixed(n) => (n, n),
        OrderChoice::Select { max_order } => (1, max_order),
    };
    let sel_cfg = OrderSelectionConfig {
        min_order,
        max_order,
        trials_per_order: cfg.trials,
        trainer: cfg.trainer.clone(),
        seed: cfg.seed,
        jobs: cfg.jobs,
    };
    let (net, mut order_selection) = select_order(ds, class_weights, &sel_cfg)?;
    let log = order_selection
        .selected_log
        .take()
        .expect("selection keeps the winner's log");
    Ok(FittedModel {
        net,
        class_weights,
        order_selection,
        log,
    })
}

/// Metrics of one subset.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub subset: Subset,
    pub n: usize,
    pub errors: Option<ErrorReport>,
    pub confusion: ConfusionTable,
    pub accuracy_percent: f64,
    pub roc: Option<RocCurve>,
    pub gain_lift: Option<GainLiftCurves>,
}

pub fn evaluate_subset(
    net: &Network,
    ds: &EncodedDataset,
    weights: ClassWeights,
    subset: Subset,
    threshold: f64,
    rule: ThresholdRule,
) -> Result<MetricsReport, NumericError> {
    let (x, y) = ds.subset_view(subset);
    if y.is_empty() {
        return Err(NumericError::Empty);
    }
    let out = net.predict(&x)?;
    let confusion = evaluation::confusion(&out, &y, threshold)?;
    let two_classes = y.iter().any(|&t| t > 0.5) && y.iter().any(|&t| t < 0.5);
    Ok(MetricsReport {
        subset,
        n: y.len(),
        errors: loss::error_report(&out, &y, weights).ok(),
        accuracy_percent: evaluation::accuracy(&confusion)?,
        confusion,
        roc: two_classes
            .then(|| evaluation::roc_with_rule(&out, &y, rule))
            .transpose()?,
        gain_lift: two_classes
            .then(|| evaluation::gain_lift(&out, &y))
            .transpose()?,
    })
}

#[derive(Debug, Clone, Serialize)]
struct DatasetSection {
    n_total: usize,
    n_missing_rows: usize,
    n_features: usize,
    include_result_feature: bool,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct TrainingSection {
    parameters_norm: f64,
    final_loss: f64,
    final_selection_loss: Option<f64>,
    final_gradient_norm: f64,
    iterations: usize,
    stopping_reason: StoppingReason,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorsSection {
    training: Option<ErrorReport>,
    selection: Option<ErrorReport>,
    testing: Option<ErrorReport>,
}

#[derive(Debug, Clone, Serialize)]
struct ConfusionSection {
    #[serde(flatten)]
    table: ConfusionTable,
    accuracy_percent: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RocSection {
    auc: f64,
    optimal_threshold: f64,
    threshold_rule: ThresholdRule,
    n_points: usize,
}

#[derive(Debug, Clone, Serialize)]
struct GainSection {
    max_gain_score: f64,
    max_gain_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct LiftSection {
    lift_at_10_percent: f64,
    max_lift: f64,
}

/// The `report.json` document.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    dataset: DatasetSection,
    partition: Vec<SubsetSummary>,
    class_weights: ClassWeights,
    order_selection: OrderSelectionResult,
    training: TrainingSection,
    errors: ErrorsSection,
    confusion: ConfusionSection,
    accuracy_percent: f64,
    roc: RocSection,
    gain: GainSection,
    lift: LiftSection,
}

impl Report {
    pub fn accuracy_percent(&self) -> f64 {
        self.accuracy_percent
    }

    pub fn auc(&self) -> f64 {
        self.roc.auc
    }

    pub fn max_gain_score(&self) -> f64 {
        self.gain.max_gain_score
    }

    pub fn optimal_order(&self) -> usize {
        self.order_selection.optimal_order
    }

    pub fn positive_weight(&self) -> f64 {
        self.class_weights.positive
    }
}

/// All files of one run, rendered.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(String, String)>,
    pub bundle: ModelBundle,
    pub train_log_csv: String,
    pub order_history_csv: String,
    pub fitted: FittedModel,
    pub summary: String,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }
}

pub const MODEL_FILE: &str = "model.lmnet.json";

/// Full reproduction run on an already parsed table.
pub fn run_on_table(raw: &RawTable, cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    let schema = schema_for(cfg.include_result_feature);
    let ds = prepare(raw, &schema, cfg.seed)?;
    let fitted = fit(&ds, cfg)?;
    let testing = evaluate_subset(
        &fitted.net,
        &ds,
        fitted.class_weights,
        Subset::Testing,
        cfg.threshold,
        cfg.threshold_rule,
    )?;
    let (Some(roc), Some(gain)) = (testing.roc.clone(), testing.gain_lift.clone()) else {
        return Err(NumericError::SingleClass.into());
    };

    let errors_for = |s| -> Result<Option<ErrorReport>, NumericError> {
        let (x, y) = ds.subset_view(s);
        if y.is_empty() {
            return Ok(None);
        }
        Ok(loss::error_report(&fitted.net.predict(&x)?, &y, fitted.class_weights).ok())
    };
    let fs = &fitted.log.final_state;
    let lift_at = |r: f64| {
        let n = gain.lift.len();
        let k = ((r * n as f64).ceil() as usize).clamp(1, n) - 1;
        gain.lift[k].lift
    };
    let report = Report {
        dataset: DatasetSection {
            n_total: raw.len(),
            n_missing_rows: raw.n_missing_rows,
            n_features: ds.n_features(),
            include_result_feature: cfg.include_result_feature,
            seed: cfg.seed,
        },
        partition: dataset::summarize(&ds),
        class_weights: fitted.class_weights,
        order_selection: fitted.order_selection.clone(),
        training: TrainingSection {
            parameters_norm: fs.parameters_norm,
            final_loss: fs.final_loss,
            final_selection_loss: fs.final_selection_loss,
            final_gradient_norm: fs.final_gradient_norm,
            iterations: fs.iterations,
            stopping_reason: fs.stopping_reason,
        },
        errors: ErrorsSection {
            training: errors_for(Subset::Training)?,
            selection: errors_for(Subset::Selection)?,
            testing: errors_for(Subset::Testing)?,
        },
        confusion: ConfusionSection {
            table: testing.confusion,
            accuracy_percent: testing.accuracy_percent,
        },
        accuracy_percent: testing.accuracy_percent,
        roc: RocSection {
            auc: roc.auc,
            optimal_threshold: roc.optimal_threshold,
            threshold_rule: cfg.threshold_rule,
            n_points: roc.points.len(),
        },
        gain: GainSection {
            max_gain_score: gain.max_gain_score,
            max_gain_ratio: gain.max_gain_ratio,
        },
        lift: LiftSection {
            lift_at_10_percent: lift_at(0.1),
            max_lift: gain.lift.iter().map(|l| l.lift).fold(0.0, f64::max),
        },
    };

    let encoder = ds.encoder.as_ref().expect("encoded from a schema");
    let bundle = ModelBundle::new(
        encoder,
        &fitted.net,
        fitted.class_weights,
        TrainingSummary {
            final_loss: fs.final_loss,
            stopping_reason: fs.stopping_reason,
            optimal_order: fitted.order_selection.optimal_order,
            split_seed: cfg.seed,
        },
    )?;

    let mut report_json = serde_json::to_string_pretty(&report).map_err(ModelIoError::from)?;
    report_json.push('\n');
    let mut roc_csv = Vec::new();
    let mut gain_csv = Vec::new();
    let mut lift_csv = Vec::new();
    let mut gain100_csv = Vec::new();
    let mut lift100_csv = Vec::new();
    let mut history = Vec::new();
    let mut train_log = Vec::new();
    let down = gain.downsample(100);
    roc.write_csv(&mut roc_csv).expect("in-memory write");
    gain.write_gain_csv(&mut gain_csv).expect("in-memory write");
    gain.write_lift_csv(&mut lift_csv).expect("in-memory write");
    down.write_gain_csv(&mut gain100_csv)
        .expect("in-memory write");
    down.write_lift_csv(&mut lift100_csv)
        .expect("in-memory write");
    fitted
        .order_selection
        .write_history_csv(&mut history)
        .expect("in-memory write");
    fitted
        .log
        .write_csv(&mut train_log)
        .expect("in-memory write");
    let utf8 = |b: Vec<u8>| String::from_utf8(b).expect("CSV writers emit UTF-8");
    let order_history_csv = utf8(history);

    let mut files = vec![
        ("report.json".to_string(), report_json),
        (
            "report.txt".to_string(),
            render_text_report(&report, &testing),
        ),
        ("roc.csv".to_string(), utf8(roc_csv)),
        ("gain.csv".to_string(), utf8(gain_csv)),
        ("lift.csv".to_string(), utf8(lift_csv)),
        ("gain_100.csv".to_string(), utf8(gain100_csv)),
        ("lift_100.csv".to_string(), utf8(lift100_csv)),
        ("order_history.csv".to_string(), order_history_csv.clone()),
        (MODEL_FILE.to_string(), bundle.to_json()?),
    ];
    if cfg.svg {
        files.push(("roc.svg".to_string(), svg::roc_svg(&roc)));
        files.push(("gain.svg".to_string(), svg::gain_svg(&down)));
        files.push(("lift.svg".to_string(), svg::lift_svg(&down)));
    }
    let summary = render_summary(&report, fitted.log.final_state.elapsed_seconds);
    debug_assert!(MODEL_FILE.ends_with(FILE_EXTENSION));

    Ok(RunOutput {
        report,
        files,
        bundle,
        train_log_csv: utf8(train_log),
        order_history_csv,
        fitted,
        summary,
    })
}

/// Writes every rendered file under `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, text) in files {
        write_file(&dir.join(name), text)?;
    }
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| PipelineError::Output {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4e}"))
}

fn render_summary(r: &Report, elapsed: f64) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "instances: {} ({} with missing values)",
        r.dataset.n_total, r.dataset.n_missing_rows
    )
    .unwrap();
    for p in &r.partition {
        writeln!(
            s,
            "  {:<9} {:>4} used, {:>3} dropped",
            p.subset.name(),
            p.n,
            p.n_missing_dropped
        )
        .unwrap();
    }
    writeln!(
        s,
        "positive weight {:.3}; optimal order {}; stopping: {}; final training time {elapsed:.3} s",
        r.class_weights.positive, r.order_selection.optimal_order, r.training.stopping_reason
    )
    .unwrap();
    writeln!(
        s,
        "testing: accuracy {:.3}%  AUC {:.4}  optimal threshold {:.3}  max gain {:.3} at {:.2}",
        r.accuracy_percent,
        r.roc.auc,
        r.roc.optimal_threshold,
        r.gain.max_gain_score,
        r.gain.max_gain_ratio
    )
    .unwrap();
    s
}

/// Plain-text tables mirroring the partition, training, order selection,
/// error, confusion, ROC, gain and loss-index summaries.
pub fn render_text_report(r: &Report, testing: &MetricsReport) -> String {
    let mut s = String::new();
    writeln!(s, "Data partition (seed {})", r.dataset.seed).unwrap();
    writeln!(
        s,
        "  {:<10} {:>6} {:>9} {:>9} {:>9}",
        "subset", "n", "positive", "negative", "dropped"
    )
    .unwrap();
    for p in &r.partition {
        writeln!(
            s,
            "  {:<10} {:>6} {:>9} {:>9} {:>9}",
            p.subset.name(),
            p.n,
            p.n_positive,
            p.n_negative,
            p.n_missing_dropped
        )
        .unwrap();
    }
    writeln!(
        s,
        "  total instances {}, rows with missing values {}",
        r.dataset.n_total, r.dataset.n_missing_rows
    )
    .unwrap();
    writeln!(s).unwrap();

    let t = &r.training;
    writeln!(s, "Levenberg-Marquardt training").unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Final parameters norm", t.parameters_norm
    )
    .unwrap();
    writeln!(s, "  {:<26} {:.4e}", "Final loss", t.final_loss).unwrap();
    writeln!(
        s,
        "  {:<26} {}",
        "Final selection loss",
        opt(t.final_selection_loss)
    )
    .unwrap();
    writeln!(
        s,
        "  {:<26} {:.4e}",
        "Final gradient norm", t.final_gradient_norm
    )
    .unwrap();
    writeln!(s, "  {:<26} {}", "Iteration number", t.iterations).unwrap();
    writeln!(s, "  {:<26} {}", "Stopping criterion", t.stopping_reason).unwrap();
    writeln!(s).unwrap();

    let o = &r.order_selection;
    writeln!(s, "Incremental order selection").unwrap();
    writeln!(s, "  {:>5} {:>14} {:>14}", "order", "training", "selection").unwrap();
    for rec in &o.records {
        writeln!(
            s,
            "  {:>5} {:>14.4e} {:>14.4e}",
            rec.order, rec.best_training_loss, rec.best_selection_loss
        )
        .unwrap();
    }
    writeln!(s, "  {:<26} {}", "Optimal order", o.optimal_order).unwrap();
    writeln!(
        s,
        "  {:<26} {:.4e}",
        "Optimum training loss", o.optimum_training_loss
    )
    .unwrap();
    writeln!(
        s,
        "  {:<26} {:.4e}",
        "Optimum selection loss", o.optimum_selection_loss
    )
    .unwrap();
    writeln!(s, "  {:<26} {}", "Iteration number", o.total_iterations).unwrap();
    writeln!(s).unwrap();

    writeln!(s, "Errors").unwrap();
    writeln!(
        s,
        "  {:<26} {:>12} {:>12} {:>12}",
        "", "Training", "Selection", "Testing"
    )
    .unwrap();
    let cols = [&r.errors.training, &r.errors.selection, &r.errors.testing];
    for (i, name) in ErrorReport::NAMES.iter().enumerate() {
        let cells: Vec<String> = cols
            .iter()
            .map(|e| {
                e.as_ref()
                    .map_or_else(|| "n/a".to_string(), |e| format!("{:.4e}", e.values()[i]))
            })
            .collect();
        writeln!(
            s,
            "  {:<26} {:>12} {:>12} {:>12}",
            name, cells[0], cells[1], cells[2]
        )
        .unwrap();
    }
    writeln!(s).unwrap();

    let c = testing.confusion.counts;
    writeln!(
        s,
        "Confusion table (testing, threshold {})",
        testing.confusion.threshold
    )
    .unwrap();
    writeln!(
        s,
        "  {:<16} {:>18} {:>18}",
        "", "Predicted positive", "Predicted negative"
    )
    .unwrap();
    writeln!(s, "  {:<16} {:>18} {:>18}", "Actual positive", c.tp, c.fn_).unwrap();
    writeln!(s, "  {:<16} {:>18} {:>18}", "Actual negative", c.fp, c.tn).unwrap();
    writeln!(s, "  accuracy {:.3}%", testing.accuracy_percent).unwrap();
    writeln!(s).unwrap();

    writeln!(s, "ROC").unwrap();
    writeln!(s, "  {:<26} {:.6}", "Area under curve", r.roc.auc).unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Optimal threshold", r.roc.optimal_threshold
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "Cumulative gain").unwrap();
    writeln!(s, "  {:<26} {:.4}", "Instance ratio", r.gain.max_gain_ratio).unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Maximum gain score", r.gain.max_gain_score
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "Lift").unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Lift at 10% of instances", r.lift.lift_at_10_percent
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "Loss index: weighted squared error").unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Positive weight", r.class_weights.positive
    )
    .unwrap();
    writeln!(
        s,
        "  {:<26} {:.4}",
        "Negative weight", r.class_weights.negative
    )
    .unwrap();
    s
}
