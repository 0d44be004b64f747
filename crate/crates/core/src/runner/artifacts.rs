use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::matrix::fmt_f64;

use super::report::{ExperimentReport, Plot, SeriesData, Summary, Table};

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_table<W: Write>(table: &Table, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(summary: &Summary, mut out: W) -> std::io::Result<()> {
    let mut header = vec!["variant".to_string()];
    header.extend(summary.columns.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for row in &summary.rows {
        let mut line = row.variant.clone();
        for v in &row.values {
            line.push(',');
            if let Some(v) = v {
                line.push_str(&fmt_f64(*v));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes the report's files into `dir` and returns their paths:
/// `trace_<variant>.csv`, `summary.csv`, `config_echo.json`,
/// `plot_<metric>.svg`, any extra `<table>.csv`, and with `keep_trials` the
/// per-trial traces under `trials/`.
pub fn emit_artifacts(report: &ExperimentReport, dir: &Path, keep_trials: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in &report.series {
        let path = dir.join(format!("trace_{}.csv", s.name));
        written.push(match &s.data {
            SeriesData::Trace(t) => write_file(&path, |w| t.write_csv(w))?,
            SeriesData::Table(t) => write_file(&path, |w| write_table(t, w))?,
        });
    }
    written.push(write_file(&dir.join("summary.csv"), |w| write_summary(&report.summary, w))?);
    let echo = json!({
        "version": report.version,
        "seed": report.config.seed,
        "config": report.config,
    });
    written.push(write_file(&dir.join("config_echo.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &echo)?;
        writeln!(w)
    })?);
    for plot in &report.plots {
        let svg = render_svg(plot);
        written.push(write_file(&dir.join(format!("plot_{}.svg", plot.metric)), |w| {
            w.write_all(svg.as_bytes())
        })?);
    }
    for (name, table) in &report.tables {
        written.push(write_file(&dir.join(format!("{name}.csv")), |w| write_table(table, w))?);
    }
    if keep_trials {
        let tdir = dir.join("trials");
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for (variant, traces) in &report.trial_traces {
            for (t, trace) in traces.iter().enumerate() {
                let path = tdir.join(format!("trace_{variant}_{t:04}.csv"));
                written.push(write_file(&path, |w| trace.write_csv(w))?);
            }
        }
    }
    Ok(written)
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#393b79", "#637939",
];

/// A polyline chart with a legend. Log-scale plots drop non-positive values.
pub fn render_svg(plot: &Plot) -> String {
    const W: f64 = 760.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 190.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 50.0;
    let ty = |y: f64| if plot.log_y { y.log10() } else { y };
    let usable = |y: f64| y.is_finite() && (!plot.log_y || y > 0.0);

    let points = plot.lines.iter().flat_map(|l| l.points.iter()).filter(|(_, y)| usable(*y));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let px = LEFT + f * pw;
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            tick_label(xv)
        );
        let yv = y0 + f * (y1 - y0);
        let py = TOP + (1.0 - f) * ph;
        let label = if plot.log_y { format!("1e{yv:.1}") } else { tick_label(yv) };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            py + 4.0
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label),
        if plot.log_y { " (log)" } else { "" }
    );
    for (i, line) in plot.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = line
            .points
            .iter()
            .filter(|(_, y)| usable(*y))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&line.label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 || a == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::super::report::Line;
    use super::*;

    #[test]
    fn empty_summary_is_header_only() {
        let mut buf = Vec::new();
        write_summary(&Summary::new(&["accuracy_percent", "approx_error"]), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "variant,accuracy_percent,approx_error\n");
    }

    #[test]
    fn summary_cells() {
        let mut s = Summary::new(&["a", "b"]);
        s.push("x", vec![Some(0.5), None]);
        let mut buf = Vec::new();
        write_summary(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "variant,a,b\nx,5.0000000000000000e-1,\n");
        assert_eq!(s.value("x", "a"), Some(0.5));
        assert_eq!(s.value("x", "b"), None);
    }

    #[test]
    fn svg_is_deterministic_and_skips_nonpositive_on_log_scale() {
        let plot = Plot {
            metric: "approx_error".into(),
            x_label: "iteration".into(),
            y_label: "error".into(),
            log_y: true,
            lines: vec![Line {
                label: "a<b".into(),
                points: vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1e-3)],
            }],
        };
        let a = render_svg(&plot);
        assert_eq!(a, render_svg(&plot));
        assert!(a.contains("a&lt;b"));
        let poly = a.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
    }
}
