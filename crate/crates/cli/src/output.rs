//! CSV tables and minimal SVG line charts.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use thinset_core::signal::Signal;

use crate::CliError;

/// A header row plus data rows, written as RFC 4180 CSV with LF endings.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_to(&self, w: impl Write, with_header: bool) -> Result<(), CliError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        if with_header {
            out.write_record(&self.header).map_err(io_csv)?;
        }
        for r in &self.rows {
            out.write_record(r).map_err(io_csv)?;
        }
        out.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_csv(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Writes to `path`, or to standard output when no path is given.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout().lock()))),
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = sink(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::Io(e.to_string()))
}

/// Reads a signal from CSV with columns `x,value` (header required).
pub fn read_signal(path: &Path) -> Result<Signal, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
        return Err(CliError::Config(format!("{}: expected header `x,value`", path.display())));
    }
    let mut pts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let bad = || CliError::Config(format!("{}: bad number on data row {}", path.display(), i + 1));
        let x: i64 = rec[0].trim().parse().map_err(|_| bad())?;
        let v: f64 = rec[1].trim().parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        pts.push((x, v));
    }
    Ok(Signal::from_sparse(&pts))
}

/// A polyline chart of one or more series; axes are linear unless `log_x`
/// or `log_y` is set, in which case non-positive points are dropped.
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(&'a str, Vec<(f64, f64)>)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Chart<'_> {
    pub fn render(&self) -> String {
        let (w, h, m) = (640.0, 400.0, 60.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let keep = |&(x, y): &(f64, f64)| (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0) && x.is_finite() && y.is_finite();
        let pts: Vec<Vec<(f64, f64)>> =
            self.series.iter().map(|(_, s)| s.iter().filter(|p| keep(p)).map(|&(x, y)| (tx(x), ty(y))).collect()).collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        s += &format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
        s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        s += &format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", w / 2.0, escape(self.title));
        s += &format!(
            "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            w - 2.0 * m,
            h - 2.0 * m
        );
        let axis = |log: bool, name: &str| if log { format!("log10 {name}") } else { name.to_string() };
        s += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            w / 2.0,
            h - 15.0,
            escape(&axis(self.log_x, self.x_label))
        );
        s += &format!(
            "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 {})\">{}</text>\n",
            h / 2.0,
            h / 2.0,
            escape(&axis(self.log_y, self.y_label))
        );
        for (v, anchor, x, y) in [(x0, "start", m, h - m + 15.0), (x1, "end", w - m, h - m + 15.0)] {
            s += &format!("<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-size=\"10\">{}</text>\n", tick(v));
        }
        for (v, y) in [(y0, h - m), (y1, m + 10.0)] {
            s += &format!("<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"10\">{}</text>\n", m - 4.0, tick(v));
        }
        for (i, ((name, _), p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            s += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" "));
            s += &format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
                m + 8.0,
                m + 16.0 + 14.0 * i as f64,
                escape(name)
            );
        }
        s += "</svg>\n";
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_line_endings() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        t.push(vec!["2".into(), "say \"hi\"".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn chart_is_well_formed() {
        let c = Chart {
            title: "t < 1",
            x_label: "N",
            y_label: "err",
            log_x: true,
            log_y: true,
            series: vec![("a", vec![(1.0, 1.0), (10.0, 0.1), (0.0, 5.0)]), ("b", vec![])],
        };
        let s = c.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("t &lt; 1"));
        assert_eq!(s.matches("<polyline").count(), 2);
    }
}
