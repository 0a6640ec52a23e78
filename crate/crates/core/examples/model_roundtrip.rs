//! Trains a small model, saves it, reloads it and scores a few records.

use lmnet::dataset::{self, surrogate, Schema};
use lmnet::model_io;
use lmnet::pipeline::{self, OrderChoice, RunConfig};

fn main() -> anyhow::Result<()> {
    let schema = Schema::asd_adult();
    let raw = dataset::parse_reader(surrogate::generate(2).as_bytes(), &schema)?;
    let cfg = RunConfig {
        order: OrderChoice::Fixed(1),
        ..RunConfig::default()
    };
    let out = pipeline::run_on_table(&raw, &cfg)?;

    let path = std::env::temp_dir().join("lmnet-example.lmnet.json");
    model_io::save(&out.bundle, &path)?;
    let loaded = model_io::load(&path)?;
    assert_eq!(loaded, out.bundle);

    let scorer = loaded.scorer();
    for (i, row) in raw.rows.iter().enumerate().take(8) {
        match scorer.score(row, model_io::DEFAULT_THRESHOLD) {
            Ok((p, decision)) => println!("row {i}: p = {p:.4} -> {decision}"),
            Err(e) => println!("row {i}: refused ({e})"),
        }
    }
    println!("model saved to {}", path.display());
    Ok(())
}
