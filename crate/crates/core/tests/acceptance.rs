//! Exit criteria. Runs every check, prints one PASS/FAIL line per criterion
//! and exits nonzero when any criterion fails.
//!
//! The reproduction check reads the adult screening table from the path in
//! `LMNET_ADULT_CSV` (or `data/Autism-Adult-Data.csv` at the workspace root).
//! When neither exists it runs on the bundled synthetic stand-in and says so.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lmnet::dataset::{self, split, surrogate, EncodedDataset, Schema, Subset};
use lmnet::evaluation::{accuracy, roc, ConfusionCounts, ConfusionTable};
use lmnet::loss::{class_weights, weighted_squared_error, ClassWeights};
use lmnet::model_io::{self, exact_f64};
use lmnet::network::{Architecture, Network};
use lmnet::order_selection::{select_order, OrderSelectionConfig};
use lmnet::pipeline::{self, RunConfig};
use lmnet::trainer::{lm_step, train, TrainingConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const JACOBIAN_TOL: f64 = 1e-6;
const JACOBIAN_CASES: usize = 20;
const LM_STEP_TOL: f64 = 1e-12;
const AUC_TOL: f64 = 1e-12;
const AUC_CASES: usize = 100;
const SEPARABLE_LOSS: f64 = 1e-3;
const SEPARABLE_MAX_ITERATIONS: usize = 200;
const SEPARABLE_MIN_SEEDS: usize = 9;
const XOR_ORDER_RATIO: f64 = 5.0;
const REPRO_SEEDS: u64 = 10;
const REPRO_MIN_ACCURACY: f64 = 95.0;
const REPRO_MIN_AUC: f64 = 0.99;
const REPRO_MIN_GAIN: f64 = 0.90;
const REPRO_MAX_ORDER: f64 = 3.0;
const REPRO_WEIGHT_RANGE: (f64, f64) = (1.5, 4.0);

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.2} s]", o.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {} s limit", o.detail, limit.as_secs());
        }
    }
    o
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn jacobian_matches_finite_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..JACOBIAN_CASES {
        let d = rng.random_range(1..=5);
        let order = rng.random_range(1..=3);
        let n = rng.random_range(1..=10);
        let net = Network::init(Architecture::new(d, order).unwrap(), case as u64);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0));
        let y: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.4))))
            .collect();
        let w = vec![1.0; n];
        let analytic = net.residual_jacobian(&x, &y, &w).unwrap().1;
        let h = 1e-6;
        for p in 0..net.n_params() {
            let mut plus = net.weights().clone();
            let mut minus = net.weights().clone();
            plus[p] += h;
            minus[p] -= h;
            let ep = Network::from_weights(net.arch(), plus)
                .unwrap()
                .residuals(&x, &y, &w)
                .unwrap();
            let em = Network::from_weights(net.arch(), minus)
                .unwrap()
                .residuals(&x, &y, &w)
                .unwrap();
            for i in 0..n {
                let fd = (ep[i] - em[i]) / (2.0 * h);
                worst = worst.max((fd - analytic[(i, p)]).abs());
            }
        }
    }
    outcome(
        worst <= JACOBIAN_TOL,
        format!("max |analytic - central difference| = {worst:.3e} over {JACOBIAN_CASES} cases"),
    )
}

fn lm_step_closed_form() -> Outcome {
    let jac = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
    let e = DVector::from_vec(vec![-1.0, -2.0]);
    let step = lm_step(&e, &jac, 1.0).unwrap()[0];
    let err = (step - 5.0 / 6.0).abs();
    outcome(
        err <= LM_STEP_TOL,
        format!("step = {step:.15}, |step - 5/6| = {err:.1e}"),
    )
}

fn auc_matches_pair_counting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < AUC_CASES {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(2..=20);
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..levels)) / f64::from(levels))
            .collect();
        let labels: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.4))))
            .collect();
        let pos: Vec<f64> = scores
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l > 0.5)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l < 0.5)
            .map(|(&s, _)| s)
            .collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut pairs = 0.0;
        for &p in &pos {
            for &q in &neg {
                pairs += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let oracle = pairs / (pos.len() * neg.len()) as f64;
        let auc = roc(&scores, &labels).unwrap().auc;
        worst = worst.max((auc - oracle).abs());
        cases += 1;
    }
    outcome(
        worst <= AUC_TOL,
        format!("max |trapezoid - pair count| = {worst:.1e} over {AUC_CASES} tied score sets"),
    )
}

fn accuracy_arithmetic() -> Outcome {
    let table = ConfusionTable {
        counts: ConfusionCounts {
            tp: 33,
            fn_: 0,
            fp: 1,
            tn: 28,
        },
        threshold: 0.5,
    };
    let acc = accuracy(&table).unwrap();
    // 61 of 62 correct; exact value 6100/62 percent
    let correct = table.counts.tp + table.counts.tn;
    let exact = correct == 61 && table.total() == 62 && acc == 100.0 * 61.0 / 62.0;
    let shown = format!("{acc:.3}");
    outcome(
        exact && shown == "98.387",
        format!("{correct}/{} correct, accuracy {shown}%", table.total()),
    )
}

fn separable_points(seed: u64) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 20;
    let mut x = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let side = if label == 1 { 1.0 } else { -1.0 };
        // distance from the line x0 + x1 = 0 is at least one
        let along: f64 = rng.random_range(-2.0..2.0);
        let off: f64 = side * rng.random_range(1.0..2.5);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        x[(i, 0)] = s * (along + off);
        x[(i, 1)] = s * (off - along);
        y.push(label as f64);
    }
    EncodedDataset::from_matrix(x, y, vec![Subset::Training; n]).unwrap()
}

fn separable_convergence() -> Outcome {
    let mut hits = 0;
    let mut report = Vec::new();
    for seed in 0..10u64 {
        let data = separable_points(seed);
        let net = Network::init(Architecture::new(2, 1).unwrap(), seed);
        let (trained, log) = train(
            &net,
            &data,
            ClassWeights::BALANCED,
            &TrainingConfig::default(),
        )
        .unwrap();
        let (x, y) = data.subset_view(Subset::Training);
        let loss =
            weighted_squared_error(&trained.predict(&x).unwrap(), &y, ClassWeights::BALANCED)
                .unwrap();
        let iterations = log.final_state.iterations;
        let ok = loss < SEPARABLE_LOSS && iterations <= SEPARABLE_MAX_ITERATIONS;
        hits += usize::from(ok);
        report.push(format!("{loss:.1e}/{iterations}"));
    }
    outcome(
        hits >= SEPARABLE_MIN_SEEDS,
        format!(
            "{hits}/10 seeds below {SEPARABLE_LOSS:e} (loss/iterations: {})",
            report.join(" ")
        ),
    )
}

fn xor_data() -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corners = [
        (0.0, 0.0, 0.0),
        (0.0, 1.0, 1.0),
        (1.0, 0.0, 1.0),
        (1.0, 1.0, 0.0),
    ];
    let n = 100;
    let mut x = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    let mut subset = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, t) = corners[i % 4];
        x[(i, 0)] = a + rng.random_range(-0.05..0.05);
        x[(i, 1)] = b + rng.random_range(-0.05..0.05);
        y.push(t);
        // every corner appears in both subsets
        subset.push(if (i / 4) % 5 == 0 {
            Subset::Selection
        } else {
            Subset::Training
        });
    }
    EncodedDataset::from_matrix(x, y, subset).unwrap()
}

fn linear_data() -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 100;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| f64::from(u8::from(x[(i, 0)] - 0.5 * x[(i, 1)] > 0.0)))
        .collect();
    let subset = split(n, 12).unwrap();
    EncodedDataset::from_matrix(x, y, subset).unwrap()
}

fn order_selection_sanity() -> Outcome {
    let cfg = OrderSelectionConfig::default();
    let (_, xor) = select_order(&xor_data(), ClassWeights::BALANCED, &cfg).unwrap();
    let sel = |r: &lmnet::order_selection::OrderSelectionResult, order: usize| {
        r.records
            .iter()
            .find(|rec| rec.order == order)
            .unwrap()
            .best_selection_loss
    };
    let ratio = sel(&xor, 1) / sel(&xor, 2);
    let lin_data = linear_data();
    let (_, y_train) = lin_data.subset_view(Subset::Training);
    let (_, lin) = select_order(&lin_data, class_weights(&y_train).unwrap(), &cfg).unwrap();
    outcome(
        xor.optimal_order >= 2 && ratio >= XOR_ORDER_RATIO && lin.optimal_order == 1,
        format!(
            "xor optimal order {} (order1/order2 selection loss ratio {ratio:.3e}); linear optimal order {}",
            xor.optimal_order, lin.optimal_order
        ),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The real table when available, otherwise the synthetic stand-in.
fn adult_table(schema: &Schema) -> (String, dataset::RawTable) {
    let candidates = std::env::var_os("LMNET_ADULT_CSV")
        .map(PathBuf::from)
        .into_iter()
        .chain([workspace_root().join("data/Autism-Adult-Data.csv")]);
    for path in candidates {
        if path.is_file() {
            let raw = dataset::parse_csv(&path, schema).expect("adult screening table parses");
            return (path.display().to_string(), raw);
        }
    }
    let raw = dataset::parse_reader(surrogate::generate(1).as_bytes(), schema).unwrap();
    ("synthetic stand-in (real table not found)".to_string(), raw)
}

fn reproduction() -> Outcome {
    let cfg = RunConfig::default();
    let (source, raw) = adult_table(&pipeline::schema_for(cfg.include_result_feature));
    let (mut acc, mut auc, mut gain, mut order, mut weight) =
        (vec![], vec![], vec![], vec![], vec![]);
    for seed in 1..=REPRO_SEEDS {
        let out = match pipeline::run_on_table(
            &raw,
            &RunConfig {
                seed,
                ..cfg.clone()
            },
        ) {
            Ok(out) => out,
            Err(e) => return outcome(false, format!("seed {seed} failed: {e}")),
        };
        acc.push(out.report.accuracy_percent());
        auc.push(out.report.auc());
        gain.push(out.report.max_gain_score());
        order.push(out.report.optimal_order() as f64);
        weight.push(out.report.positive_weight());
    }
    let orders = order
        .iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let (acc, auc, gain, order, weight) = (
        median(acc),
        median(auc),
        median(gain),
        median(order),
        median(weight),
    );
    let checks = [
        acc >= REPRO_MIN_ACCURACY,
        auc >= REPRO_MIN_AUC,
        gain >= REPRO_MIN_GAIN,
        order <= REPRO_MAX_ORDER,
        (REPRO_WEIGHT_RANGE.0..=REPRO_WEIGHT_RANGE.1).contains(&weight),
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "{source}; medians over {REPRO_SEEDS} seeds: accuracy {acc:.3}% auc {auc:.4} max gain {gain:.3} \
             order {order} (orders {orders}) positive weight {weight:.3}"
        ),
    )
}

fn run_cli(data: &Path, out: &Path) -> i32 {
    let args = ["lmnet", "reproduce", "--seed", "1", "--data"];
    lmnet::cli::run(args.iter().map(|s| s.into()).chain([
        data.as_os_str().to_owned(),
        "--out".into(),
        out.as_os_str().to_owned(),
    ]))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("adult.csv");
    std::fs::write(&data, surrogate::generate(3)).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let codes = (run_cli(&data, &a), run_cli(&data, &b));
    if codes != (0, 0) {
        return outcome(false, format!("exit codes {codes:?}"));
    }
    let files = [
        "report.json",
        "roc.csv",
        "gain.csv",
        "lift.csv",
        "order_history.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap())
        .collect();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} identical", files.join(", "))
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn round_trip() -> Outcome {
    let schema = Schema::asd_adult();
    let raw = dataset::parse_reader(surrogate::generate(4).as_bytes(), &schema).unwrap();
    let out = pipeline::run_on_table(
        &raw,
        &RunConfig {
            seed: 4,
            ..RunConfig::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(pipeline::MODEL_FILE);
    model_io::save(&out.bundle, &path).unwrap();
    let loaded = model_io::load(&path).unwrap();
    let bits = |w: &DVector<f64>| w.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let weights_exact = bits(&loaded.w) == bits(out.fitted.net.weights());

    let ds = pipeline::prepare(&raw, &schema, 4).unwrap();
    let scorer = loaded.scorer();
    let mut complete = 0;
    let mut mismatches = 0;
    for (i, row) in raw.rows.iter().enumerate() {
        if raw.row_has_missing(i) {
            continue;
        }
        complete += 1;
        let (p, _) = scorer.score(row, model_io::DEFAULT_THRESHOLD).unwrap();
        let features: Vec<f64> = ds.x.row(i).iter().copied().collect();
        let (q, _) = out.fitted.net.forward(&features).unwrap();
        if p.to_bits() != q.to_bits() {
            mismatches += 1;
            eprintln!(
                "row {i}: loaded {} vs trained {}",
                exact_f64::format(p),
                exact_f64::format(q)
            );
        }
    }
    outcome(
        weights_exact && mismatches == 0 && complete > 0,
        format!(
            "weights bit-exact: {weights_exact}; {mismatches} scoring mismatches over {complete} complete rows"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "1 jacobian vs finite differences",
            Some(Duration::from_secs(1)),
            jacobian_matches_finite_differences,
        ),
        ("2 damped step closed form", None, lm_step_closed_form),
        ("3 auc vs pair counting", None, auc_matches_pair_counting),
        ("4 accuracy arithmetic", None, accuracy_arithmetic),
        (
            "5 separable convergence",
            Some(Duration::from_secs(5)),
            separable_convergence,
        ),
        (
            "6 order selection sanity",
            Some(Duration::from_secs(30)),
            order_selection_sanity,
        ),
        (
            "7 screening reproduction",
            Some(Duration::from_secs(120)),
            reproduction,
        ),
        ("8 determinism", None, determinism),
        ("9 model round trip", None, round_trip),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let o = timed(limit, check);
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
