//! Static SVG charts of simulation results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use goflab_core::dataset::Dataset;

use crate::error::{CliError, Result};
use crate::results::{sig6, ResultRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

/// Half-width of the guide band drawn around the nominal level.
pub const LEVEL_GUIDE: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub band: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line with an optional guide band half-width.
    pub reference: Option<(f64, Option<f64>)>,
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let start = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = start;
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        r - l,
        b - t
    );
    for x in ticks(f.x0, f.x1) {
        let px = f.px(x);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="#444"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"##,
            b + 5.0,
            b + 18.0,
            sig6(x)
        );
    }
    for y in ticks(f.y0, f.y1) {
        let py = f.py(y);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="#444"/><line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            sig6(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

impl LineChart {
    pub fn to_svg(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in pts {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            let (lo, hi) = p.band.unwrap_or((p.y, p.y));
            y0 = y0.min(lo.min(p.y));
            y1 = y1.max(hi.max(p.y));
        }
        if let Some((r, guide)) = self.reference {
            let g = guide.unwrap_or(0.0);
            y0 = y0.min(r - g);
            y1 = y1.max(r + g);
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        let f = Frame { x0, x1, y0, y1 };

        let mut out = String::new();
        svg_open(&mut out, &self.title);
        axes(&mut out, &f, &self.x_label, &self.y_label);

        if let Some((r, guide)) = self.reference {
            if let Some(g) = guide {
                let _ = writeln!(
                    out,
                    r##"<rect x="{LEFT}" y="{:.2}" width="{}" height="{:.2}" fill="#999" fill-opacity="0.15"/>"##,
                    f.py(r + g),
                    WIDTH - LEFT - RIGHT,
                    f.py(r - g) - f.py(r + g)
                );
            }
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#666" stroke-dasharray="6,4"/>"##,
                WIDTH - RIGHT,
                y = f.py(r)
            );
        }

        for s in &self.series {
            let banded: Vec<&Point> = s.points.iter().filter(|p| p.band.is_some()).collect();
            if banded.len() >= 2 {
                let mut d = String::new();
                for (k, p) in banded.iter().enumerate() {
                    let (_, hi) = p.band.unwrap();
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2} ",
                        if k == 0 { "M" } else { "L" },
                        f.px(p.x),
                        f.py(hi)
                    );
                }
                for p in banded.iter().rev() {
                    let (lo, _) = p.band.unwrap();
                    let _ = write!(d, "L{:.2},{:.2} ", f.px(p.x), f.py(lo));
                }
                let _ = writeln!(
                    out,
                    r#"<path d="{}Z" fill="{}" fill-opacity="0.18" stroke="none"/>"#,
                    d, s.color
                );
            }
            let path: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", f.px(p.x), f.py(p.y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                path.join(" "),
                s.color
            );
            for p in &s.points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                    f.px(p.x),
                    f.py(p.y),
                    s.color
                );
            }
        }

        for (k, s) in self.series.iter().enumerate() {
            let y = TOP + 14.0 + 20.0 * k as f64;
            let x = WIDTH - RIGHT + 14.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x + 22.0,
                s.color,
                x + 28.0,
                y + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    /// Long-format table of the plotted values.
    pub fn to_csv(&self, metric: &str) -> String {
        let mut out = String::from("metric,series,x,value,lo,hi\n");
        for s in &self.series {
            for p in &s.points {
                let (lo, hi) = p.band.map(|(a, b)| (sig6(a), sig6(b))).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{metric},{},{},{},{lo},{hi}",
                    s.name,
                    sig6(p.x),
                    sig6(p.y)
                );
            }
        }
        out
    }
}

/// Scatter of the first two non-intercept covariates.
pub fn covariate_scatter(data: &Dataset, title: &str) -> Result<String> {
    if data.d() < 3 {
        return Err(CliError::Usage(
            "scatter needs at least two covariates besides the intercept".into(),
        ));
    }
    let x = data.x();
    let xs: Vec<f64> = x.column(1).iter().copied().collect();
    let ys: Vec<f64> = x.column(2).iter().copied().collect();
    let (x0, x1) = padded(
        xs.iter().copied().fold(f64::MAX, f64::min),
        xs.iter().copied().fold(f64::MIN, f64::max),
    );
    let (y0, y1) = padded(
        ys.iter().copied().fold(f64::MAX, f64::min),
        ys.iter().copied().fold(f64::MIN, f64::max),
    );
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    svg_open(&mut out, title);
    axes(&mut out, &f, "x1", "x2");
    for (i, (&a, &b)) in xs.iter().zip(&ys).enumerate() {
        let color = if data.y()[i] == 1.0 {
            "#c0392b"
        } else {
            "#2471a3"
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#,
            f.px(a),
            f.py(b)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Metric {
    Mean,
    Variance,
    Rejection,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Mean => "mean",
            Metric::Variance => "variance",
            Metric::Rejection => "rejection",
        }
    }
    fn label(self) -> &'static str {
        match self {
            Metric::Mean => "sample mean of statistic",
            Metric::Variance => "sample variance of statistic",
            Metric::Rejection => "estimated type 1 error rate",
        }
    }
}

fn method_color(method: &str) -> &'static str {
    match method {
        "HL" => "#1f77b4",
        "GHL" => "#d62728",
        _ => "#2ca02c",
    }
}

/// Builds every chart for a results table: one per metric and per panel,
/// where a panel is a distinct `(G, sigma2_e, m)`.
pub fn charts(rows: &[ResultRow], alpha: f64) -> Result<Vec<(String, LineChart, &'static str)>> {
    if rows.is_empty() {
        return Err(CliError::Schema("results table has no data rows".into()));
    }
    type Key = (usize, u64, usize);
    let mut panels: BTreeMap<Key, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        panels
            .entry((r.groups, r.sigma2_e.to_bits(), r.m))
            .or_default()
            .push(r);
    }
    let many_g = panels
        .keys()
        .map(|k| k.0)
        .collect::<std::collections::BTreeSet<_>>()
        .len()
        > 1;
    let many_e = panels
        .keys()
        .map(|k| k.1)
        .collect::<std::collections::BTreeSet<_>>()
        .len()
        > 1;

    let mut out = Vec::new();
    for ((g, e_bits, m), prow) in &panels {
        let sigma2_e = f64::from_bits(*e_bits);
        let mut stem = format!("m{m}");
        if many_g {
            stem.push_str(&format!("_G{g}"));
        }
        if many_e {
            stem.push_str(&format!("_e{}", sig6(sigma2_e)));
        }
        let n = prow[0].n;
        for metric in [Metric::Mean, Metric::Variance, Metric::Rejection] {
            let mut by_method: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
            for r in prow {
                by_method.entry(r.method.as_str()).or_default().push(r);
            }
            let series = by_method
                .into_iter()
                .map(|(method, mut rs)| {
                    rs.sort_by_key(|r| r.d);
                    Series {
                        name: method.to_string(),
                        color: method_color(method),
                        points: rs
                            .iter()
                            .map(|r| match metric {
                                Metric::Mean => Point {
                                    x: r.d as f64,
                                    y: r.mean,
                                    band: Some(r.mean_ci),
                                },
                                Metric::Variance => Point {
                                    x: r.d as f64,
                                    y: r.var,
                                    band: None,
                                },
                                Metric::Rejection => Point {
                                    x: r.d as f64,
                                    y: r.rejection,
                                    band: Some(r.rej_ci),
                                },
                            })
                            .collect(),
                    }
                })
                .collect();
            let chart = LineChart {
                title: format!(
                    "{} (n={n}, m={m}, G={g}, sigma2_e={})",
                    metric.name(),
                    sig6(sigma2_e)
                ),
                x_label: "number of parameters d".into(),
                y_label: metric.label().into(),
                series,
                reference: (metric == Metric::Rejection).then_some((alpha, Some(LEVEL_GUIDE))),
            };
            out.push((format!("{}_{stem}", metric.name()), chart, metric.name()));
        }
    }
    Ok(out)
}

/// Writes `<name>.svg` and `<name>.csv` for every chart; returns the SVG paths.
pub fn write_charts(rows: &[ResultRow], outdir: &Path, alpha: f64) -> Result<Vec<PathBuf>> {
    let charts = charts(rows, alpha)?;
    std::fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let mut written = Vec::new();
    for (name, chart, metric) in charts {
        let svg = outdir.join(format!("{name}.svg"));
        std::fs::write(&svg, chart.to_svg()).map_err(|e| CliError::io(&svg, e))?;
        let csv = outdir.join(format!("{name}.csv"));
        std::fs::write(&csv, chart.to_csv(metric)).map_err(|e| CliError::io(&csv, e))?;
        written.push(svg);
    }
    Ok(written)
}
