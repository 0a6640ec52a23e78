//! Parses a screening table, partitions it and prints what the encoder built.
//!
//! cargo run --example dataset_summary -- [path.csv] [seed]

use lmnet::dataset::{self, surrogate, Schema};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next();
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let schema = Schema::asd_adult();
    let raw = match &path {
        Some(p) => dataset::parse_csv(p, &schema)?,
        None => dataset::parse_reader(surrogate::generate(seed).as_bytes(), &schema)?,
    };
    let assignment = dataset::split(raw.len(), seed)?;
    let ds = dataset::encode(&raw, &schema, &assignment)?;

    println!(
        "{} rows, {} with a missing value",
        raw.len(),
        raw.n_missing_rows
    );
    for s in dataset::summarize(&ds) {
        println!(
            "{:<9} {:>4} used ({} positive, {} negative), {} dropped",
            s.subset.name(),
            s.n,
            s.n_positive,
            s.n_negative,
            s.n_missing_dropped
        );
    }
    println!("{} features:", ds.n_features());
    for name in &ds.feature_names {
        println!("  {name}");
    }
    for s in &ds.scaling().columns {
        println!(
            "scaling {}: mean {:.3}, std {:.3}",
            s.column, s.mean, s.std_dev
        );
    }
    Ok(())
}
