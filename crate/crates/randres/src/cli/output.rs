//! Run artifacts: CSV tables, the run report, and static SVG plots.
//!
//! CSV files are UTF-8 with `\n` line endings and `.` decimal separators.
//! Floating-point cells use Rust's shortest round-trip formatting, so a
//! rerun from the same config writes byte-identical files. The SVG chart is
//! a small hand-rolled log-log plot with the fitted slope in the legend; it
//! exists so a convergence sweep can be eyeballed without a plotting stack.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::Result;
use crate::stats::fit_rate;

/// Everything a run leaves behind, echoed to stdout and the report file.
///
/// The `config` echo lists every effective setting including defaults, so
/// the report alone suffices to reproduce the run bit-exactly: write the
/// echoed lines to a file and pass it back through `--config`.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: &'static str,
    pub version: String,
    pub seed: u64,
    pub config: Vec<(&'static str, String)>,
    pub dry_run: bool,
    pub rows: usize,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    /// The CSV lines as written (header first), replayed in the report.
    pub table: Vec<String>,
    pub wall: Duration,
}

impl RunReport {
    /// The human-readable report text.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("command: {}\n", self.command));
        s.push_str(&format!("version: {}\n", self.version));
        s.push_str(&format!("seed: {}\n", self.seed));
        s.push_str("config:\n");
        for (k, v) in &self.config {
            s.push_str(&format!("  {k} = {v}\n"));
        }
        if self.dry_run {
            s.push_str("dry run: config validated, nothing computed\n");
            return s;
        }
        s.push_str(&format!("rows: {}\n", self.rows));
        if let Some(p) = &self.csv {
            s.push_str(&format!("csv: {}\n", p.display()));
        }
        if let Some(p) = &self.svg {
            s.push_str(&format!("svg: {}\n", p.display()));
        }
        if let Some(p) = &self.report_path {
            s.push_str(&format!("report: {}\n", p.display()));
        }
        s.push_str(&format!("wall_clock_s: {:.3}\n", self.wall.as_secs_f64()));
        s.push_str("results:\n");
        for line in &self.table {
            s.push_str("  ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

/// Deletes the tracked files on drop unless disarmed, so a run that fails
/// halfway does not leave partial output behind.
#[derive(Debug, Default)]
pub struct OutputGuard {
    paths: Vec<PathBuf>,
    disarmed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a path for cleanup before it is written.
    pub fn track(&mut self, path: &Path) {
        self.paths.push(path.to_path_buf());
    }

    /// Keeps the files; call once the run has fully succeeded.
    pub fn disarm(mut self) {
        self.disarmed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.disarmed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Writes the lines joined by `\n` with a trailing newline.
pub fn write_csv(path: &Path, lines: &[String]) -> Result<()> {
    let mut body = lines.join("\n");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// One labeled line of a log-log plot.
#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A log-log chart description, produced by the convergence commands and
/// rendered by [`write_loglog_svg`] when `--plot` is set.
#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
}

const PALETTE: [&str; 4] = ["#1f6feb", "#d1242f", "#2da44e", "#8250df"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 460.0;
const BOX_X0: f64 = 76.0;
const BOX_X1: f64 = 616.0;
const BOX_Y0: f64 = 44.0;
const BOX_Y1: f64 = 396.0;

/// Renders the chart. Points with a nonpositive coordinate cannot be placed
/// on log axes and are dropped; a legend line per series quotes the fitted
/// log-log slope when at least three points survive.
pub fn write_loglog_svg(path: &Path, plot: &PlotSpec) -> Result<()> {
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        (BOX_X0 + BOX_X1) / 2.0,
        plot.title
    ));

    // Log-transform, dropping whatever cannot be drawn.
    let logged: Vec<(usize, Vec<(f64, f64)>)> = plot
        .series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                .map(|(x, y)| (x.log10(), y.log10()))
                .collect();
            (i, pts)
        })
        .collect();

    let xs: Vec<f64> = logged.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    let ys: Vec<f64> = logged.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).collect();
    if xs.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">no positive \
             data to draw</text>\n</svg>\n",
            (BOX_X0 + BOX_X1) / 2.0,
            (BOX_Y0 + BOX_Y1) / 2.0
        ));
        fs::write(path, svg)?;
        return Ok(());
    }
    let (lx_min, lx_max) = padded_range(&xs);
    let (ly_min, ly_max) = padded_range(&ys);
    let px = |lx: f64| BOX_X0 + (lx - lx_min) / (lx_max - lx_min) * (BOX_X1 - BOX_X0);
    let py = |ly: f64| BOX_Y1 - (ly - ly_min) / (ly_max - ly_min) * (BOX_Y1 - BOX_Y0);

    // Gridlines and tick labels at integer powers of ten (axis endpoints
    // when the range spans less than one decade).
    for t in ticks(lx_min, lx_max) {
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{BOX_Y0}\" x2=\"{x:.1}\" y2=\"{BOX_Y1}\" \
             stroke=\"#dddddd\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            BOX_Y1 + 16.0,
            tick_label(t)
        ));
    }
    for t in ticks(ly_min, ly_max) {
        let y = py(t);
        svg.push_str(&format!(
            "<line x1=\"{BOX_X0}\" y1=\"{y:.1}\" x2=\"{BOX_X1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            BOX_X0 - 6.0,
            y + 4.0,
            tick_label(t)
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{BOX_X0}\" y=\"{BOX_Y0}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333333\"/>\n",
        BOX_X1 - BOX_X0,
        BOX_Y1 - BOX_Y0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (BOX_X0 + BOX_X1) / 2.0,
        BOX_Y1 + 38.0,
        plot.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        (BOX_Y0 + BOX_Y1) / 2.0,
        (BOX_Y0 + BOX_Y1) / 2.0,
        plot.y_label
    ));

    // Series: polyline, markers, legend entry with the fitted slope.
    let mut legend_y = BOX_Y0 + 16.0;
    for (i, pts) in &logged {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> =
            pts.iter().map(|(lx, ly)| format!("{:.1},{:.1}", px(*lx), py(*ly))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        ));
        for (lx, ly) in pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(*lx),
                py(*ly)
            ));
        }
        let raw: Vec<(f64, f64)> =
            pts.iter().map(|(lx, ly)| (10f64.powf(*lx), 10f64.powf(*ly))).collect();
        let label = match fit_rate(&raw) {
            Ok(fit) => format!("{} (slope {:.3})", plot.series[*i].label, fit.slope),
            Err(_) => plot.series[*i].label.clone(),
        };
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n",
            BOX_X1 - 190.0,
            legend_y - 4.0,
            BOX_X1 - 170.0,
            legend_y - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            BOX_X1 - 164.0,
            legend_y,
            label
        ));
        legend_y += 16.0;
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Tick positions in log10 coordinates: all integer powers inside the range
/// when there are at least two, otherwise the range endpoints.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let powers: Vec<f64> =
        (lo.ceil() as i64..=hi.floor() as i64).map(|k| k as f64).collect();
    if powers.len() >= 2 {
        powers
    } else {
        vec![lo, hi]
    }
}

fn tick_label(log_value: f64) -> String {
    if (log_value - log_value.round()).abs() < 1e-9 {
        let k = log_value.round() as i64;
        match k {
            -2 => "0.01".into(),
            -1 => "0.1".into(),
            0 => "1".into(),
            1 => "10".into(),
            2 => "100".into(),
            3 => "1000".into(),
            _ => format!("1e{k}"),
        }
    } else {
        format!("{:.3}", 10f64.powf(log_value))
    }
}
