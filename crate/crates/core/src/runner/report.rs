//! Experiment reports and their on-disk form: `report.json`, one CSV per
//! series or table, and SVG line plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{FelabError, Result};
use crate::observables::{MomentSeries, SeriesSummary};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Pass/fail outcome of one check, naming the property it tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// The invariant or theorem the check targets.
    pub target: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, target: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            target: target.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildStamp {
    pub package: String,
    pub version: String,
    pub git: String,
}

impl BuildStamp {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            git: option_env!("FELAB_GIT_REV").unwrap_or("unknown").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRef {
    pub name: String,
    pub csv: String,
    pub summary: SeriesSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallClock {
    pub seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub build: BuildStamp,
    pub series: Vec<SeriesRef>,
    /// CSV file names of auxiliary tables.
    pub tables: Vec<String>,
    pub plots: Vec<String>,
    pub fits: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub wall_clock: WallClock,
    pub all_pass: bool,
}

impl ExperimentReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Line plot: one x axis, several named curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub lines: Vec<PlotLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotLine {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dashed: bool,
}

impl PlotLine {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h) = (640.0, 400.0);
        let (l, r, t, b) = (70.0, 160.0, 30.0, 45.0);
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .lines
            .iter()
            .flat_map(|ln| ln.x.iter().zip(&ln.y).map(|(&x, &y)| (x, ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo <= 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
        let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
        let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            (w - r + l) / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - l - r,
            h - t - b
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let ylab = if self.log_y {
                format!("1e{yv:.1}")
            } else {
                format!("{yv:.3e}")
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#,
                sx(xv),
                h - b + 15.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#,
                l - 4.0,
                sy(yv) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (w - r + l) / 2.0,
            h - 8.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            xml_escape(&self.y_label)
        );
        for (i, ln) in self.lines.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = ln
                .x
                .iter()
                .zip(&ln.y)
                .map(|(&x, &y)| (x, ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if ln.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            let ly = t + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
                w - r + 10.0,
                w - r + 30.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                w - r + 35.0,
                ly + 4.0,
                xml_escape(&ln.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Everything an experiment produces, before it is written out.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub series: Vec<MomentSeries>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl ExperimentOutput {
    pub fn series(&self, name: &str) -> Option<&MomentSeries> {
        self.series.iter().find(|s| s.name == name)
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| FelabError::io(path, e))
}

/// Writes all artifacts into `dir` and returns the report path.
///
/// Series and tables are written before the report, so a failing verdict or
/// a later I/O error never loses data.
pub fn emit_report(output: &mut ExperimentOutput, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| FelabError::io(dir, e))?;
    let mut refs = Vec::new();
    for s in &output.series {
        let file = format!("{}.csv", s.name);
        write(&dir.join(&file), &s.to_csv())?;
        refs.push(SeriesRef {
            name: s.name.clone(),
            csv: file,
            summary: s.summary(),
        });
    }
    let mut tables = Vec::new();
    for t in &output.tables {
        let file = format!("{}.csv", t.name);
        write(&dir.join(&file), &t.to_csv())?;
        tables.push(file);
    }
    let mut plots = Vec::new();
    for p in &output.plots {
        let file = format!("{}.svg", p.name);
        write(&dir.join(&file), &p.to_svg())?;
        plots.push(file);
    }
    output.report.series = refs;
    output.report.tables = tables;
    output.report.plots = plots;
    let path = dir.join("report.json");
    write(&path, &output.report.to_json()?)?;
    Ok(path)
}

/// One-line-per-verdict human summary.
pub fn summary_text(report: &ExperimentReport) -> String {
    let mut s = format!(
        "{} ({:.1} s): {}\n",
        report.experiment,
        report.wall_clock.seconds,
        if report.all_pass { "PASS" } else { "FAIL" }
    );
    for v in &report.verdicts {
        let _ = writeln!(
            s,
            "  [{}] {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    for n in &report.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s
}
