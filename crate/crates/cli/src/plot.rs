//! Static SVG line charts of sweep aggregates: log-scaled x-axis (n or λ),
//! one mean line with a ±std band per (kernel, model) series.

use std::fmt::Write as _;

use smcal::format::fmt_f64;
use smcal::sweep::{AggregateRow, Split, AGG_METRICS};
use smcal::{Error, KernelFamily, LossFamily, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Chart {
    pub file_name: String,
    pub svg: String,
}

struct Point {
    x: f64,
    mean: f64,
    std: f64,
}

struct Series {
    label: String,
    points: Vec<Point>,
}

/// One chart per requested metric and split present in `rows`.
pub fn charts(rows: &[AggregateRow], metrics: &[String]) -> Result<Vec<Chart>> {
    if rows.is_empty() {
        return Err(Error::Input("aggregates file has no rows".into()));
    }
    for m in metrics {
        if !AGG_METRICS.contains(&m.as_str()) {
            return Err(Error::Input(format!(
                "unknown metric `{m}` (expected one of {})",
                AGG_METRICS.join(", ")
            )));
        }
    }
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let by_n = ns.len() > 1;
    let mut out = Vec::new();
    for metric in metrics {
        for split in [Split::Train, Split::Test] {
            let series = collect(rows, metric, split, by_n);
            if series.is_empty() {
                continue;
            }
            out.push(Chart {
                file_name: format!("{metric}_{split}.svg"),
                svg: render(metric, split, if by_n { "n" } else { "lambda" }, &series),
            });
        }
    }
    Ok(out)
}

fn collect(rows: &[AggregateRow], metric: &str, split: Split, by_n: bool) -> Vec<Series> {
    let mut keys: Vec<(KernelFamily, LossFamily)> = Vec::new();
    for r in rows.iter().filter(|r| r.split == split) {
        if !keys.contains(&(r.kernel, r.model)) {
            keys.push((r.kernel, r.model));
        }
    }
    keys.into_iter()
        .map(|(kernel, model)| {
            let mut points: Vec<Point> = rows
                .iter()
                .filter(|r| r.split == split && r.kernel == kernel && r.model == model)
                .filter_map(|r| {
                    let s = r.stat(metric)?;
                    let x = if by_n { r.n as f64 } else { r.lambda };
                    (s.mean.is_finite() && x > 0.0).then_some(Point {
                        x,
                        mean: s.mean,
                        std: if s.std.is_finite() { s.std } else { 0.0 },
                    })
                })
                .collect();
            points.sort_by(|a, b| a.x.total_cmp(&b.x));
            Series {
                label: format!("{kernel}/{model}"),
                points,
            }
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

fn tick_label(v: f64) -> String {
    if (1.0..1e6).contains(&v) && v.fract() == 0.0 {
        format!("{v}")
    } else {
        format!("{v:.0e}")
    }
}

fn render(metric: &str, split: Split, x_name: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.x))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (mut lx0, mut lx1) = (xs[0].log10(), xs[xs.len() - 1].log10());
    if lx1 - lx0 < 1e-12 {
        lx0 -= 0.5;
        lx1 += 0.5;
    }
    let lo = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.mean - p.std))
        .fold(f64::INFINITY, f64::min);
    let hi = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.mean + p.std))
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        lo.abs().max(1e-3) * 0.1
    };
    let (y0, y1) = (lo - pad, hi + pad);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - lx0) / (lx1 - lx0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<title>{metric} ({split}) vs {x_name}</title>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{metric} ({split})</text>"#,
        LEFT + pw / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(s, r#"<g class="xticks">"#).unwrap();
    for &x in &xs {
        let xp = px(x);
        writeln!(
            s,
            r#"<g class="xtick"><line x1="{xp:.2}" y1="{b:.2}" x2="{xp:.2}" y2="{t:.2}" stroke="black"/><text x="{xp:.2}" y="{l:.2}" text-anchor="middle">{}</text></g>"#,
            tick_label(x),
            b = TOP + ph,
            t = TOP + ph + 5.0,
            l = TOP + ph + 18.0
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g class="yticks">"#).unwrap();
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let yp = py(y);
        writeln!(
            s,
            r#"<g class="ytick"><line x1="{a:.2}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/><text x="{t:.2}" y="{yt:.2}" text-anchor="end">{y:.4}</text></g>"#,
            a = LEFT - 5.0,
            t = LEFT - 8.0,
            yt = yp + 4.0
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_name} (log scale)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{c:.2}" text-anchor="middle" transform="rotate(-90 18 {c:.2})">{metric}</text>"#,
        c = TOP + ph / 2.0
    )
    .unwrap();
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = ser
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.mean + p.std)));
        let lower = ser
            .points
            .iter()
            .rev()
            .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.mean - p.std)));
        let band: Vec<String> = upper.chain(lower).collect();
        let line: Vec<String> = ser
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.mean)))
            .collect();
        writeln!(s, r#"<g class="series" data-label="{}">"#, ser.label).unwrap();
        writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        )
        .unwrap();
        writeln!(
            s,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        )
        .unwrap();
        for p in &ser.points {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>{}: {} ± {}</title></circle>"#,
                px(p.x),
                py(p.mean),
                tick_label(p.x),
                fmt_f64(p.mean),
                fmt_f64(p.std)
            )
            .unwrap();
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            ser.label
        )
        .unwrap();
        writeln!(s, "</g>").unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use smcal::sweep::Stat;

    fn row(n: usize, lambda: f64, split: Split, mean: f64) -> AggregateRow {
        AggregateRow {
            n,
            lambda,
            kernel: KernelFamily::Gaussian,
            model: LossFamily::Squared,
            split,
            seeds: 3,
            failed: 0,
            single_seed: false,
            stats: AGG_METRICS
                .iter()
                .map(|_| Some(Stat { mean, std: 0.01 }))
                .collect(),
        }
    }

    #[test]
    fn one_tick_per_grid_point() {
        let rows: Vec<AggregateRow> = (0..10)
            .flat_map(|i| {
                let n = 100 * (i + 1);
                [
                    row(n, 0.1, Split::Train, 0.1 / (i + 1) as f64),
                    row(n, 0.1, Split::Test, 0.2),
                ]
            })
            .collect();
        let charts = charts(&rows, &["smce".to_string()]).unwrap();
        assert_eq!(charts.len(), 2);
        assert_eq!(charts[0].file_name, "smce_train.svg");
        assert_eq!(charts[0].svg.matches(r#"class="xtick""#).count(), 10);
        assert!(charts[0].svg.contains("n (log scale)"));
    }

    #[test]
    fn single_n_uses_lambda_axis() {
        let rows: Vec<AggregateRow> = [1e-2, 1e-1, 1.0]
            .iter()
            .map(|&l| row(500, l, Split::Test, l))
            .collect();
        let charts = charts(&rows, &["mmce".to_string()]).unwrap();
        assert_eq!(charts.len(), 1);
        assert!(charts[0].svg.contains("lambda (log scale)"));
        assert!(charts[0].svg.contains(">1e-2<"));
    }

    #[test]
    fn unknown_metric_rejected() {
        let rows = vec![row(10, 1.0, Split::Test, 0.1)];
        assert!(charts(&rows, &["nope".to_string()]).is_err());
    }
}
