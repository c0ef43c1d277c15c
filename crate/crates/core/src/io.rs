//! File formats: returns CSV, problem and solution JSON, trace and weight CSVs.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, ReturnsMatrix};
use crate::solution::TraceRecord;

/// Returns CSV contents: the matrix plus the date column.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsTable {
    pub dates: Vec<String>,
    pub returns: ReturnsMatrix,
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    match b.len() {
        7 => digits(0..4) && b[4] == b'-' && digits(5..7),
        10 => digits(0..4) && b[4] == b'-' && digits(5..7) && b[7] == b'-' && digits(8..10),
        _ => false,
    }
}

/// Parses `date,T1,...,Tn` followed by one row per period. Row and column
/// numbers in errors are 1-based file positions (the header is row 1).
pub fn read_returns_csv<R: Read>(reader: R, period_label: &str) -> Result<ReturnsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
        return Err(Error::BadData {
            row: 1,
            col: 1,
            reason: "first header cell must be 'date'".into(),
        });
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(Error::BadData {
            row: 1,
            col: 2,
            reason: "no ticker columns".into(),
        });
    }
    let n = tickers.len();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::BadData {
                row,
                col: rec.len().min(n + 1),
                reason: format!("expected {} cells, found {}", n + 1, rec.len()),
            });
        }
        let date = &rec[0];
        if !is_iso_date(date) {
            return Err(Error::BadData {
                row,
                col: 1,
                reason: format!("'{date}' is not an ISO date"),
            });
        }
        dates.push(date.to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::BadData {
                row,
                col: j + 2,
                reason: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadData {
                    row,
                    col: j + 2,
                    reason: format!("'{cell}' is not finite"),
                });
            }
            values.push(v);
        }
    }
    let t = dates.len();
    let returns = ReturnsMatrix::new(
        DMatrix::from_row_slice(t, n, &values),
        tickers,
        period_label,
    )?;
    Ok(ReturnsTable { dates, returns })
}

pub fn read_returns_csv_file(path: impl AsRef<Path>, period_label: &str) -> Result<ReturnsTable> {
    read_returns_csv(BufReader::new(File::open(path)?), period_label)
}

pub fn write_returns_csv<W: Write>(writer: W, table: &ReturnsTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(table.returns.tickers().iter().cloned());
    w.write_record(&header)?;
    for (date, row) in table.dates.iter().zip(table.returns.values().row_iter()) {
        let mut rec = vec![date.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize, W: Write>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}

/// Reads a problem JSON `{"A": [[..]], "mu": [..], "tau": t, "k": k}`.
pub fn read_problem_json(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let spec: ProblemSpec = read_json(path)?;
    Ok(spec)
}

pub fn write_trace_csv<W: Write>(writer: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in trace {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per window, one column per ticker.
pub fn write_weights_csv<'a, W: Write>(
    writer: W,
    tickers: &[String],
    rows: impl IntoIterator<Item = (String, &'a nalgebra::DVector<f64>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend(tickers.iter().cloned());
    w.write_record(&header)?;
    for (label, weights) in rows {
        let mut rec = vec![label];
        rec.extend(weights.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_returns() {
        let text = "date,AAA,BBB\n2016-01-31,0.01,-0.02\n2016-02-29,0.03,0.00\n";
        let t = read_returns_csv(text.as_bytes(), "monthly").unwrap();
        assert_eq!(t.dates, vec!["2016-01-31", "2016-02-29"]);
        assert_eq!(t.returns.tickers(), ["AAA", "BBB"]);
        assert_eq!(t.returns.values()[(1, 0)], 0.03);
        assert_eq!(t.returns.period_label(), "monthly");
    }

    #[test]
    fn non_numeric_cell_names_position() {
        let text = "date,AAA,BBB\n2016-01-31,0.01,-0.02\n2016-02-29,0.03,oops\n";
        match read_returns_csv(text.as_bytes(), "monthly") {
            Err(Error::BadData { row, col, .. }) => assert_eq!((row, col), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_header_and_dates() {
        assert!(
            read_returns_csv("when,A\n2016-01-31,0.1\n2016-02-29,0.2\n".as_bytes(), "m").is_err()
        );
        assert!(matches!(
            read_returns_csv("date,A\nyesterday,0.1\n2016-02-29,0.2\n".as_bytes(), "m"),
            Err(Error::BadData { row: 2, col: 1, .. })
        ));
        assert!(matches!(
            read_returns_csv("date,A\n2016-02-29,0.2\n".as_bytes(), "m"),
            Err(Error::InsufficientData(1))
        ));
        assert!(
            read_returns_csv("date,A\n2016-01-31,NaN\n2016-02-29,0.2\n".as_bytes(), "m").is_err()
        );
    }

    #[test]
    fn problem_json_schema() {
        let text = r#"{"A": [[1.0, 0.0], [0.0, 2.0]], "mu": [0.1, 0.2], "tau": 0.5, "k": 1}"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.a[(1, 1)], 2.0);
        assert_eq!(spec.k, 1);
        let back: serde_json::Value = serde_json::to_value(&spec).unwrap();
        assert_eq!(back["A"][1][1], 2.0);
        let ragged = r#"{"A": [[1.0, 0.0], [0.0]], "mu": [0.1, 0.2], "tau": 0.5, "k": 1}"#;
        assert!(serde_json::from_str::<ProblemSpec>(ragged).is_err());
    }
}
