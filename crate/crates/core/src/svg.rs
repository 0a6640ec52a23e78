//! Minimal standalone SVG line charts for the ROC, gain and lift curves.

use std::fmt::Write as _;

use crate::evaluation::{GainLiftCurves, RocCurve};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Renders series over `[0, 1] x [0, y_max]`. `baseline` is drawn in grey.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    y_max: f64,
    series: &[Series],
    baseline: &[(f64, f64)],
) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y / y_max) * plot_h;
    let path = |pts: &[(f64, f64)]| {
        pts.iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                format!(
                    "{}{:.2},{:.2}",
                    if i == 0 { "M" } else { "L" },
                    sx(x),
                    sy(y)
                )
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            sx(t),
            HEIGHT - MARGIN + 16.0
        )
        .unwrap();
        let yv = t * y_max;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2}</text>"#,
            MARGIN - 6.0,
            sy(yv) + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();
    if !baseline.is_empty() {
        writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="grey" stroke-dasharray="4 3"/>"#,
            path(baseline)
        )
        .unwrap();
    }
    for (i, ser) in series.iter().enumerate() {
        writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path(&ser.points),
            ser.color
        )
        .unwrap();
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" fill="{}">{}</text>"#,
            WIDTH - MARGIN - 8.0,
            ser.color,
            ser.label
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn roc_svg(roc: &RocCurve) -> String {
    let points = roc.points.iter().map(|p| (p.fpr, p.tpr)).collect();
    line_chart(
        &format!("ROC (AUC = {:.4})", roc.auc),
        "false positive rate",
        "true positive rate",
        1.0,
        &[Series {
            label: "ROC",
            color: "#1f4e9c",
            points,
        }],
        &[(0.0, 0.0), (1.0, 1.0)],
    )
}

pub fn gain_svg(curves: &GainLiftCurves) -> String {
    let origin = std::iter::once((0.0, 0.0));
    let pos = origin
        .clone()
        .chain(curves.gain.iter().map(|g| (g.ratio, g.positive_gain)))
        .collect();
    let neg = origin
        .chain(curves.gain.iter().map(|g| (g.ratio, g.negative_gain)))
        .collect();
    line_chart(
        &format!(
            "Cumulative gain (max score {:.3} at {:.2})",
            curves.max_gain_score, curves.max_gain_ratio
        ),
        "instance ratio",
        "fraction found",
        1.0,
        &[
            Series {
                label: "positive",
                color: "#1f4e9c",
                points: pos,
            },
            Series {
                label: "negative",
                color: "#c0392b",
                points: neg,
            },
        ],
        &[(0.0, 0.0), (1.0, 1.0)],
    )
}

pub fn lift_svg(curves: &GainLiftCurves) -> String {
    let points: Vec<(f64, f64)> = curves.lift.iter().map(|l| (l.ratio, l.lift)).collect();
    let top = points.iter().map(|p| p.1).fold(1.0, f64::max);
    let y_max = (top * 1.1).ceil();
    line_chart(
        "Lift",
        "instance ratio",
        "lift",
        y_max,
        &[Series {
            label: "lift",
            color: "#1f4e9c",
            points,
        }],
        &[(0.0, 1.0), (1.0, 1.0)],
    )
}
