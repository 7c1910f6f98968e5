//! Per-replicate rows, group aggregates and their CSV / JSON-lines forms.
//!
//! Detail CSV header: `replicate,seed,group,<metric columns...>`.
//! Aggregate CSV header: `group,metric,count,mean,median,q25,q75`.
//! JSON lines: one `header` object, then `row` and `aggregate` objects, each
//! tagged by `kind`. Floats use the shortest representation that parses back
//! to the same value. Non-finite values are skipped by the aggregates.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use super::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub replicate: u64,
    pub seed: u64,
    /// Scenario parameters of the row, e.g. `beta=0.5;k0=30`.
    pub group: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// Solves that hit the iteration cap.
    #[serde(default)]
    pub non_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub group: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Linear-interpolation quantile of sorted data (NaN when empty).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median of the finite entries (NaN when none).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

impl Report {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one metric, optionally restricted to a group.
    pub fn column(&self, name: &str, group: Option<&str>) -> Vec<f64> {
        let Some(idx) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| group.is_none_or(|g| r.group == g))
            .map(|r| r.values[idx])
            .collect()
    }

    /// Groups in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.group) && !out.contains(&r.group) {
                out.push(r.group.clone());
            }
        }
        out
    }

    pub fn aggregates(&self) -> Vec<AggregateRow> {
        let mut out = Vec::new();
        for group in self.groups() {
            for metric in &self.columns {
                let mut v: Vec<f64> = self
                    .column(metric, Some(&group))
                    .into_iter()
                    .filter(|x| x.is_finite())
                    .collect();
                v.sort_by(f64::total_cmp);
                let mean = if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                };
                out.push(AggregateRow {
                    group: group.clone(),
                    metric: metric.clone(),
                    count: v.len(),
                    mean,
                    median: quantile(&v, 0.5),
                    q25: quantile(&v, 0.25),
                    q75: quantile(&v, 0.75),
                });
            }
        }
        out
    }
}

pub fn write_detail_csv(report: &Report, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["replicate".to_string(), "seed".into(), "group".into()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header)?;
    for row in &report.rows {
        let mut rec = vec![row.replicate.to_string(), row.seed.to_string(), row.group.clone()];
        rec.extend(row.values.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "metric", "count", "mean", "median", "q25", "q75"])?;
    for a in rows {
        w.write_record([
            a.group.clone(),
            a.metric.clone(),
            a.count.to_string(),
            a.mean.to_string(),
            a.median.to_string(),
            a.q25.to_string(),
            a.q75.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a detail CSV back into a report.
pub fn parse_detail_csv(input: impl Read, scenario: &str) -> Result<Report> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "replicate" || &headers[1] != "seed" || &headers[2] != "group" {
        return Err(HarnessError::Parse("detail header must start with replicate,seed,group".into()));
    }
    let columns: Vec<String> = headers.iter().skip(3).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| HarnessError::Parse(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<u64>().map_err(|_| HarnessError::Parse(format!("bad integer {s:?}")));
        rows.push(ReportRow {
            replicate: int(&rec[0])?,
            seed: int(&rec[1])?,
            group: rec[2].to_string(),
            values: rec.iter().skip(3).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(Report {
        scenario: scenario.to_string(),
        columns,
        rows,
        non_converged: 0,
    })
}

/// Reads an aggregate CSV.
pub fn parse_aggregate_csv(input: impl Read) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| HarnessError::Parse(format!("bad number {:?}", &rec[i])))
        };
        out.push(AggregateRow {
            group: rec[0].to_string(),
            metric: rec[1].to_string(),
            count: rec[2].parse().map_err(|_| HarnessError::Parse("bad count".into()))?,
            mean: num(3)?,
            median: num(4)?,
            q25: num(5)?,
            q75: num(6)?,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header {
        scenario: String,
        columns: Vec<String>,
    },
    Row {
        replicate: u64,
        seed: u64,
        group: String,
        values: BTreeMap<String, Option<f64>>,
    },
    Aggregate {
        group: String,
        metric: String,
        count: usize,
        mean: Option<f64>,
        median: Option<f64>,
        q25: Option<f64>,
        q75: Option<f64>,
    },
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn write_json_lines(report: &Report, mut out: impl Write) -> Result<()> {
    let mut emit = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
        Ok(())
    };
    emit(&Line::Header {
        scenario: report.scenario.clone(),
        columns: report.columns.clone(),
    })?;
    for row in &report.rows {
        emit(&Line::Row {
            replicate: row.replicate,
            seed: row.seed,
            group: row.group.clone(),
            values: report
                .columns
                .iter()
                .cloned()
                .zip(row.values.iter().map(|&v| finite(v)))
                .collect(),
        })?;
    }
    for a in report.aggregates() {
        emit(&Line::Aggregate {
            group: a.group,
            metric: a.metric,
            count: a.count,
            mean: finite(a.mean),
            median: finite(a.median),
            q25: finite(a.q25),
            q75: finite(a.q75),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the header and rows of a JSON-lines report; aggregate lines are
/// skipped since they are recomputable. `null` values read back as NaN.
pub fn parse_json_lines(input: impl Read) -> Result<Report> {
    let mut report = Report::default();
    let mut seen_header = false;
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Line>(&line)? {
            Line::Header { scenario, columns } => {
                report.scenario = scenario;
                report.columns = columns;
                seen_header = true;
            }
            Line::Row { replicate, seed, group, values } => {
                if !seen_header {
                    return Err(HarnessError::Parse("row before header".into()));
                }
                let values = report
                    .columns
                    .iter()
                    .map(|c| values.get(c).copied().flatten().unwrap_or(f64::NAN))
                    .collect();
                report.rows.push(ReportRow { replicate, seed, group, values });
            }
            Line::Aggregate { .. } => {}
        }
    }
    Ok(report)
}

/// `foo.csv` becomes `foo.<tag>.csv`; other names get `.<tag>.csv` appended.
pub fn sibling_path(path: &Path, tag: &str) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => path.with_extension(format!("{tag}.csv")),
        _ => {
            let mut s = path.as_os_str().to_owned();
            s.push(format!(".{tag}.csv"));
            PathBuf::from(s)
        }
    }
}

/// Writes the report and returns the files produced: detail plus aggregate
/// CSV, or a single JSON-lines file.
pub fn emit_report(report: &Report, path: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    match format {
        OutputFormat::Csv => {
            write_detail_csv(report, BufWriter::new(File::create(path)?))?;
            let agg_path = sibling_path(path, "aggregate");
            write_aggregate_csv(&report.aggregates(), BufWriter::new(File::create(&agg_path)?))?;
            Ok(vec![path.to_path_buf(), agg_path])
        }
        OutputFormat::JsonLines => {
            write_json_lines(report, BufWriter::new(File::create(path)?))?;
            Ok(vec![path.to_path_buf()])
        }
    }
}
