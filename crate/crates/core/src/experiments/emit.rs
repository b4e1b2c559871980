use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::MetricKey;
use crate::network::Discipline;

use super::runner::SchemeResult;

pub const CSV_HEADER: [&str; 15] = [
    "scheme",
    "discipline",
    "security",
    "c",
    "N",
    "pu_rate",
    "su_rate",
    "scv_arrival",
    "scv_service",
    "metric_name",
    "class_scope",
    "station_scope",
    "mean",
    "ci95_half_width",
    "reps",
];

/// One aggregated metric at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub scheme: String,
    pub discipline: Discipline,
    pub security: bool,
    pub c: usize,
    pub n: usize,
    pub pu_rate: f64,
    pub su_rate: f64,
    pub scv_arrival: f64,
    pub scv_service: f64,
    pub metric: MetricKey,
    pub mean: f64,
    pub ci95_half_width: f64,
    pub reps: usize,
}

impl OutputRow {
    fn series_label(&self) -> String {
        format!(
            "{}_SEC-{}_c{}_pu{}_scv{}x{}",
            self.discipline,
            on_off(self.security),
            self.c,
            fmt_g(self.pu_rate),
            fmt_g(self.scv_arrival),
            fmt_g(self.scv_service)
        )
    }

    fn record(&self) -> [String; 15] {
        [
            self.scheme.clone(),
            self.discipline.to_string(),
            on_off(self.security).to_string(),
            self.c.to_string(),
            self.n.to_string(),
            fmt_g(self.pu_rate),
            fmt_g(self.su_rate),
            fmt_g(self.scv_arrival),
            fmt_g(self.scv_service),
            self.metric.metric.name().to_string(),
            self.metric.class.to_string(),
            self.metric.station.to_string(),
            fmt_g(self.mean),
            fmt_g(self.ci95_half_width),
            self.reps.to_string(),
        ]
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "ON"
    } else {
        "OFF"
    }
}

/// Formats like C's `%g`: six significant digits, trailing zeros removed,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("`e` format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Flattens aggregated results into rows, grid order first, then metric order.
/// Failed grid points and non-finite summaries contribute no rows.
pub fn rows(result: &SchemeResult) -> Vec<OutputRow> {
    let s = &result.scheme;
    let mut out = Vec::new();
    for (p, agg) in result.succeeded() {
        for (key, sum) in &agg.metrics {
            if !(sum.mean.is_finite() && sum.half_width.is_finite()) {
                continue;
            }
            out.push(OutputRow {
                scheme: s.id.to_string(),
                discipline: p.discipline,
                security: p.security,
                c: p.servers,
                n: p.capacity,
                pu_rate: p.pu_rate,
                su_rate: p.su_rate,
                scv_arrival: p.scv_arrival,
                scv_service: p.scv_service,
                metric: *key,
                mean: sum.mean,
                ci95_half_width: sum.half_width,
                reps: sum.n,
            });
        }
    }
    out
}

pub fn write_csv<W: Write>(rows: &[OutputRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in rows {
        wtr.write_record(r.record())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[OutputRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Plot tables keyed by file name `{scheme}_{metric}.dat`.
///
/// Column 1 is the SU arrival rate; every other column is one series (a
/// configuration with everything but the SU rate fixed). Missing cells are
/// written as `nan`.
pub fn plot_files(rows: &[OutputRow]) -> BTreeMap<String, String> {
    // (scheme, plot name) -> (series in first-seen order, su rates, cells)
    struct Table {
        scheme: String,
        plot: String,
        series: Vec<String>,
        su: Vec<f64>,
        cells: BTreeMap<(usize, usize), f64>,
    }
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();
    for r in rows {
        let plot = r.metric.plot_name();
        let file = format!("{}_{}.dat", r.scheme, plot);
        let t = tables.entry(file).or_insert_with(|| Table {
            scheme: r.scheme.clone(),
            plot,
            series: Vec::new(),
            su: Vec::new(),
            cells: BTreeMap::new(),
        });
        let label = r.series_label();
        let col = t.series.iter().position(|s| *s == label).unwrap_or_else(|| {
            t.series.push(label);
            t.series.len() - 1
        });
        let row = t.su.iter().position(|&s| s == r.su_rate).unwrap_or_else(|| {
            t.su.push(r.su_rate);
            t.su.len() - 1
        });
        t.cells.insert((row, col), r.mean);
    }

    tables
        .into_iter()
        .map(|(file, t)| {
            let mut order: Vec<usize> = (0..t.su.len()).collect();
            order.sort_by(|&a, &b| t.su[a].total_cmp(&t.su[b]));
            let mut text = format!("# scheme {} metric {}\n# su_rate", t.scheme, t.plot);
            for s in &t.series {
                text.push(' ');
                text.push_str(s);
            }
            text.push('\n');
            for row in order {
                text.push_str(&fmt_g(t.su[row]));
                for col in 0..t.series.len() {
                    text.push(' ');
                    text.push_str(&t.cells.get(&(row, col)).map_or("nan".into(), |&v| fmt_g(v)));
                }
                text.push('\n');
            }
            (file, text)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Plotdata,
    Both,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "plotdata" => Ok(Self::Plotdata),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown format `{other}` (expected csv, plotdata or both)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Plotdata => "plotdata",
            Self::Both => "both",
        })
    }
}

/// Writes rows to `dir` and returns the created paths in write order.
/// The CSV lands in `{scheme}.csv`.
pub fn emit(rows: &[OutputRow], format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(first) = rows.first() else {
        return Err(Error::Domain("nothing to emit: no rows".into()));
    };
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join(format!("{}.csv", first.scheme));
        std::fs::write(&path, csv_string(rows)?)?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Plotdata | OutputFormat::Both) {
        for (name, text) in plot_files(rows) {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}
