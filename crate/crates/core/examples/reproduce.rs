//! Full run: partition, encode, weight, select the order, evaluate, and write
//! the report files.
//!
//! cargo run --release --example reproduce -- [path.csv] [out-dir]

use std::path::PathBuf;

use lmnet::dataset::{self, surrogate};
use lmnet::pipeline::{self, RunConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let data = args.next().filter(|a| a != "-");
    let out_dir = PathBuf::from(args.next().unwrap_or_else(|| "out".to_string()));
    let cfg = RunConfig {
        svg: true,
        ..RunConfig::default()
    };
    let schema = pipeline::schema_for(cfg.include_result_feature);
    let raw = match data {
        Some(path) => dataset::parse_csv(path, &schema)?,
        None => {
            eprintln!("no data file given; using the synthetic stand-in");
            dataset::parse_reader(surrogate::generate(1).as_bytes(), &schema)?
        }
    };
    let out = pipeline::run_on_table(&raw, &cfg)?;
    pipeline::write_files(&out_dir, &out.files)?;
    print!("{}", out.summary);
    println!("wrote {} files to {}", out.files.len(), out_dir.display());
    Ok(())
}
