//! CSV, SVG and manifest writers. All files are written atomically.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::checkpoint::write_atomic;
use crate::config::config_digest;
use crate::energy::EnergySample;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// C's `%.17g`: enough digits to round-trip any `f64`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header line plus one `%.17g` row per entry.
pub fn csv_string<S: AsRef<str>>(header: &[S], rows: &[Vec<f64>]) -> String {
    let mut out = header.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_g17(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<f64>]) -> Result<()> {
    write_atomic(path, csv_string(header, rows).as_bytes())
}

pub fn energy_csv<T: Real>(samples: &[EnergySample<T>]) -> String {
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.csv_row().iter().map(|x| x.as_f64()).collect()).collect();
    csv_string(&EnergySample::<T>::CSV_HEADER, &rows)
}

pub fn write_energy_csv<T: Real>(path: &Path, samples: &[EnergySample<T>]) -> Result<()> {
    write_atomic(path, energy_csv(samples).as_bytes())
}

/// A parsed numeric CSV: header plus rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_owned())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("CSV row {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::InvalidArgument(format!(
                    "CSV row {} has {} cells, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidArgument(format!("no column {name:?}; available: {}", self.header.join(", ")))
        })?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 70.0;

/// Line plot of `y` against `x` columns of `table`. Output depends only on the data.
pub fn plot_svg(table: &Table, x: &str, ys: &[&str], xscale: AxisScale, yscale: AxisScale) -> Result<String> {
    if ys.is_empty() {
        return Err(Error::InvalidArgument("plot needs at least one y column".into()));
    }
    let xs = table.column(x)?;
    let series: Vec<(&str, Vec<f64>)> = ys.iter().map(|y| Ok((*y, table.column(y)?))).collect::<Result<_>>()?;
    let tx = |v: f64, s: AxisScale| if s == AxisScale::Log { v.log10() } else { v };
    let usable = |v: f64, s: AxisScale| v.is_finite() && (s == AxisScale::Linear || v > 0.0);
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for (_, col) in &series {
        pts.push(
            xs.iter()
                .zip(col)
                .filter(|(a, b)| usable(**a, xscale) && usable(**b, yscale))
                .map(|(a, b)| (tx(*a, xscale), tx(*b, yscale)))
                .collect(),
        );
    }
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    if all.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot: no finite points on the requested axes".into()));
    }
    let range = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = range(&|p| p.0);
    let (y0, y1) = range(&|p| p.1);
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let label = |v: f64, s: AxisScale| fmt_short(if s == AxisScale::Log { 10f64.powf(v) } else { v });

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            px(xv),
            HEIGHT - MARGIN + 18.0,
            label(xv, xscale)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            py(yv) + 4.0,
            label(yv, yscale)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x)
    );
    for (i, ((name, _), line)) in series.iter().zip(&pts).enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = line.iter().map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 18.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_short(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub wall_time_unix_s: f64,
    pub command: String,
    pub config: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_text: &str, files: Vec<String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config_sha256: config_digest(config_text),
            wall_time_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            command: command.to_owned(),
            config: config_text.to_owned(),
            files,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (0.0001, "0.0001"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g17(x), s, "{x}");
        }
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip() {
        let text = csv_string(&["a", "b"], &[vec![0.1, 2.0], vec![1.0 / 3.0, -4e-9]]);
        let t = Table::parse(&text).unwrap();
        assert_eq!(t.column("a").unwrap(), vec![0.1, 1.0 / 3.0]);
        assert!(t.column("c").is_err());
    }

    #[test]
    fn plot_is_deterministic() {
        let t = Table::parse("t,e\n0,1\n1,10\n2,100\n").unwrap();
        let a = plot_svg(&t, "t", &["e"], AxisScale::Linear, AxisScale::Log).unwrap();
        let b = plot_svg(&t, "t", &["e"], AxisScale::Linear, AxisScale::Log).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.contains("polyline"));
        assert!(plot_svg(&t, "t", &["missing"], AxisScale::Linear, AxisScale::Linear).is_err());
    }
}
