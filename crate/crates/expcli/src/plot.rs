//! Minimal SVG line and scatter plots of CSV columns.
//!
//! A plot spec is a `key = value` file:
//!
//! ```text
//! x = hz
//! y = r_bar_H, r_bar_tH
//! output = rbar.svg
//! title = level spacing ratio
//! kind = line
//! width = 640
//! height = 400
//! ```
//!
//! Only `x`, `y` and `output` are required. Output is byte-for-byte
//! deterministic for a given table and spec.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::table::{Table, TableError};

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("plot spec line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("plot spec: {0}")]
    Value(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("nothing to plot: no finite points in the selected columns")]
    Empty,
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Scatter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub output: PathBuf,
    pub title: String,
    pub kind: PlotKind,
    pub width: u32,
    pub height: u32,
}

impl PlotSpec {
    pub fn parse(text: &str) -> Result<Self, PlotError> {
        let (mut x, mut y, mut output, mut title) = (None, None, None, String::new());
        let (mut kind, mut width, mut height) = (PlotKind::Line, 640u32, 400u32);
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| PlotError::Syntax {
                line,
                msg: format!("expected 'key = value', got '{content}'"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if seen.contains(&k) {
                return Err(PlotError::Syntax {
                    line,
                    msg: format!("key '{k}' given twice"),
                });
            }
            seen.push(k);
            let size = |v: &str| match v.parse::<u32>() {
                Ok(s) if (100..=10_000).contains(&s) => Ok(s),
                _ => Err(PlotError::Syntax {
                    line,
                    msg: format!("'{k}' must be an integer in 100..=10000"),
                }),
            };
            match k {
                "x" => x = Some(v.to_string()),
                "y" => y = Some(v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>()),
                "output" => output = Some(PathBuf::from(v)),
                "title" => title = v.to_string(),
                "kind" => {
                    kind = match v {
                        "line" => PlotKind::Line,
                        "scatter" => PlotKind::Scatter,
                        _ => {
                            return Err(PlotError::Syntax {
                                line,
                                msg: format!("kind must be 'line' or 'scatter', got '{v}'"),
                            })
                        }
                    }
                }
                "width" => width = size(v)?,
                "height" => height = size(v)?,
                _ => {
                    return Err(PlotError::Syntax {
                        line,
                        msg: format!("unknown key '{k}'"),
                    })
                }
            }
        }
        let x = x.filter(|s| !s.is_empty()).ok_or_else(|| PlotError::Value("missing 'x'".into()))?;
        let y = y.filter(|v| !v.is_empty()).ok_or_else(|| PlotError::Value("missing 'y'".into()))?;
        let output = output
            .filter(|p| !p.as_os_str().is_empty())
            .ok_or_else(|| PlotError::Value("missing 'output'".into()))?;
        Ok(Self {
            x,
            y,
            output,
            title,
            kind,
            width,
            height,
        })
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const MARGIN: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Renders the plot; fails without output when no point is finite.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String, PlotError> {
    let xs = table.numeric_column(&spec.x)?;
    let series: Vec<(String, Vec<(f64, f64)>)> = spec
        .y
        .iter()
        .map(|name| {
            let ys = table.numeric_column(name)?;
            let pts = xs
                .iter()
                .zip(&ys)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (*x, *y))
                .collect();
            Ok((name.clone(), pts))
        })
        .collect::<Result<_, PlotError>>()?;
    let all = || series.iter().flat_map(|(_, p)| p.iter().copied());
    let (x0, x1) = range(all().map(|p| p.0)).ok_or(PlotError::Empty)?;
    let (y0, y1) = range(all().map(|p| p.1)).ok_or(PlotError::Empty)?;

    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let (pw, ph) = (w - 2.0 * MARGIN, h - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| h - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            h - MARGIN + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 12.0,
        escape(&spec.x)
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24.00" font-size="15" text-anchor="middle">{}</text>"#,
            w / 2.0,
            escape(&spec.title)
        );
    }
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match spec.kind {
            PlotKind::Line if pts.len() > 1 => {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
            _ => {
                for &(x, y) in pts {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
        }
        let ly = MARGIN + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
            w - MARGIN - 6.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Reads the CSV, renders it and writes `spec.output`. Nothing is written on error.
pub fn plot_files(csv_path: &std::path::Path, spec_path: &std::path::Path) -> Result<PathBuf, PlotError> {
    let read = |p: &std::path::Path| std::fs::read_to_string(p).map_err(|e| PlotError::Io(format!("{}: {e}", p.display())));
    let spec = PlotSpec::parse(&read(spec_path)?)?;
    let table = Table::parse(&read(csv_path)?)?;
    let svg = render_svg(&table, &spec)?;
    let out = if spec.output.is_relative() {
        spec_path.parent().unwrap_or(std::path::Path::new(".")).join(&spec.output)
    } else {
        spec.output.clone()
    };
    std::fs::write(&out, svg).map_err(|e| PlotError::Io(format!("{}: {e}", out.display())))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "hz,a,b\n0,0.39,0.40\n0.5,0.45,NaN\n1,0.53,0.52\n2,0.50,0.51\n";
    const SPEC: &str = "x = hz\ny = a, b\noutput = golden.svg\ntitle = r <bar>\nkind = line\nwidth = 320\nheight = 240\n";

    #[test]
    fn golden_svg() {
        let t = Table::parse(CSV).unwrap();
        let spec = PlotSpec::parse(SPEC).unwrap();
        let svg = render_svg(&t, &spec).unwrap();
        assert_eq!(svg, include_str!("../tests/fixtures/golden.svg"));
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(PlotSpec::parse("y = a\noutput = o.svg"), Err(PlotError::Value(_))));
        assert!(matches!(PlotSpec::parse("x = a\nx = b"), Err(PlotError::Syntax { .. })));
        assert!(matches!(PlotSpec::parse("x = a\ncolour = red"), Err(PlotError::Syntax { .. })));
        assert!(matches!(PlotSpec::parse("kind = bars"), Err(PlotError::Syntax { .. })));
        assert!(matches!(PlotSpec::parse("width = 5"), Err(PlotError::Syntax { .. })));
        let s = PlotSpec::parse("x=a\ny=b\noutput=o.svg\nkind=scatter").unwrap();
        assert_eq!((s.kind, s.width, s.height), (PlotKind::Scatter, 640, 400));
    }

    #[test]
    fn empty_data_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("d.csv");
        let spec = dir.path().join("p.spec");
        std::fs::write(&csv, "x,y\n1,NaN\n").unwrap();
        std::fs::write(&spec, "x = x\ny = y\noutput = out.svg\n").unwrap();
        assert_eq!(plot_files(&csv, &spec), Err(PlotError::Empty));
        assert!(!dir.path().join("out.svg").exists());
        std::fs::write(&csv, "x,y\n1,2\n3,4\n").unwrap();
        let out = plot_files(&csv, &spec).unwrap();
        assert!(std::fs::read_to_string(out).unwrap().starts_with("<svg"));
    }

    #[test]
    fn missing_column_is_reported() {
        let t = Table::parse(CSV).unwrap();
        let spec = PlotSpec::parse("x = hz\ny = zz\noutput = o.svg").unwrap();
        assert!(matches!(render_svg(&t, &spec), Err(PlotError::Table(TableError::MissingColumn(_)))));
    }
}
