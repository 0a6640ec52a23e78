//! Confusion table, ROC, cumulative gain and lift for a fixed set of scores.
//! Writes SVG charts to the directory given as the first argument.

use std::path::PathBuf;

use lmnet::evaluation::{accuracy, confusion, gain_lift, roc};
use lmnet::svg;

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "curves".to_string()),
    );
    let scores = [
        0.97, 0.91, 0.88, 0.85, 0.74, 0.66, 0.61, 0.45, 0.40, 0.33, 0.21, 0.18, 0.12, 0.05,
    ];
    let labels = [
        1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ];

    let table = confusion(&scores, &labels, 0.5)?;
    println!("{:?} accuracy {:.2}%", table.counts, accuracy(&table)?);
    let curve = roc(&scores, &labels)?;
    println!(
        "AUC {:.4}, optimal threshold {}",
        curve.auc, curve.optimal_threshold
    );
    let gl = gain_lift(&scores, &labels)?;
    println!(
        "max gain score {:.3} at ratio {:.3}",
        gl.max_gain_score, gl.max_gain_ratio
    );

    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("roc.svg"), svg::roc_svg(&curve))?;
    std::fs::write(dir.join("gain.svg"), svg::gain_svg(&gl))?;
    std::fs::write(dir.join("lift.svg"), svg::lift_svg(&gl))?;
    println!("charts written to {}", dir.display());
    Ok(())
}
