//! CSV, JSON-lines and summary JSON output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::experiment::{summarize, ResultRow, SummaryEntry};

pub const CSV_HEADER: [&str; 14] = [
    "setting",
    "mechanism",
    "replication",
    "seed",
    "n",
    "revenue",
    "welfare",
    "success",
    "cost",
    "m",
    "m_h",
    "D_I",
    "realized_revenue",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            _ => Err(Error::InvalidConfig(format!("unknown output format {s:?}"))),
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::JsonLines => {
            let mut w = BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes the table to `path`.
pub fn emit_results(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    write_rows(rows, format, File::create(path)?)
}

pub fn read_rows(path: &Path, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            r.deserialize().map(|row| row.map_err(Error::from)).collect()
        }
        Format::JsonLines => BufReader::new(File::open(path)?)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect(),
    }
}

pub fn write_summary(summary: &[SummaryEntry], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Mean revenue by `n` for each mechanism of one setting, for revenue-vs-n
/// curves: `(mechanism, [(n, mean, se)])`.
pub fn revenue_by_n(rows: &[ResultRow], setting: &str) -> Vec<(String, Vec<(usize, f64, f64)>)> {
    let summary_rows: Vec<ResultRow> = rows
        .iter()
        .filter(|r| r.setting == setting)
        .map(|r| ResultRow { setting: format!("{}", r.n), ..r.clone() })
        .collect();
    let mut mechanisms: Vec<String> = vec![];
    for r in &summary_rows {
        if !mechanisms.contains(&r.mechanism) {
            mechanisms.push(r.mechanism.clone());
        }
    }
    let summary = summarize(&summary_rows);
    mechanisms
        .into_iter()
        .map(|m| {
            let mut points: Vec<(usize, f64, f64)> = summary
                .iter()
                .filter(|e| e.mechanism == m)
                .filter_map(|e| Some((e.setting.parse().ok()?, e.revenue?.mean, e.revenue?.se)))
                .collect();
            points.sort_by_key(|p| p.0);
            (m, points)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            setting: "setting1".into(),
            mechanism: "wgpa".into(),
            replication: 3,
            seed: 42,
            n: 4,
            revenue: Some(1.25),
            welfare: Some(2.5),
            success: Some(0.875),
            cost: Some(0.5),
            m: Some(2),
            m_h: Some(1.5),
            d_i: Some(0.3),
            realized_revenue: None,
            error: None,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = vec![];
        write_rows(&[], Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::JsonLines] {
            let path = dir.path().join("rows");
            emit_results(&[row()], format, &path).unwrap();
            assert_eq!(read_rows(&path, format).unwrap(), vec![row()]);
        }
    }

    #[test]
    fn formats_parse() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn unwritable_path() {
        assert!(emit_results(&[row()], Format::Csv, Path::new("/nonexistent/dir/x.csv")).is_err());
    }
}
