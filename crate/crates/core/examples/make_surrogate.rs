//! Writes a synthetic screening table with the same columns, size and
//! missing-value pattern as the public adult screening file.
//!
//! cargo run --example make_surrogate -- [path] [seed]

use std::path::PathBuf;

use lmnet::dataset::surrogate;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "surrogate.csv".to_string()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    std::fs::write(&path, surrogate::generate(seed))?;
    println!("wrote {} rows to {}", surrogate::N_ROWS, path.display());
    Ok(())
}
