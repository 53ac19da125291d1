//! CSV ingestion and canonical JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Parses comma-separated numeric rows. A first row containing any
/// non-numeric field is treated as a header and skipped; blank lines are
/// ignored.
pub fn parse_csv(text: &str) -> Result<Sample> {
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed: Vec<std::result::Result<f64, _>> = fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        if dim.is_none() && data.is_empty() && parsed.iter().any(|p| p.is_err()) {
            // Header row.
            continue;
        }
        match dim {
            None => dim = Some(fields.len()),
            Some(d) if d != fields.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    column: fields.len().min(d) + 1,
                    message: format!("expected {d} fields, found {}", fields.len()),
                })
            }
            Some(_) => {}
        }
        for (col, (p, raw)) in parsed.into_iter().zip(&fields).enumerate() {
            match p {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        column: col + 1,
                        message: format!("not a finite number: `{}`", raw.trim()),
                    })
                }
            }
        }
    }
    let dim = dim.ok_or(Error::EmptySample { required: 1, found: 0 })?;
    Sample::new(data, dim)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Sample> {
    parse_csv(&fs::read_to_string(path)?)
}

/// One `0` or `1` per line; `1` marks an outlier.
pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("label must be 0 or 1, got `{other}`"),
            }),
        })
        .collect()
}

/// Labels aligned with a sample of `n` rows.
pub fn load_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<bool>> {
    let labels = parse_labels(&fs::read_to_string(path)?)?;
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    Ok(labels)
}

/// JSON with sorted keys, two-space indentation, and every float written with
/// 17 significant digits, so equal values always produce equal bytes.
/// Non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn write_canonical_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                emit(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                emit(&map[*k], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_rows() {
        let s = parse_csv("1,2\n3,4\n").unwrap();
        assert_eq!((s.len(), s.dim()), (2, 2));
        assert_eq!(s.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn header_skipped() {
        let s = parse_csv("x,y\n1,2\n").unwrap();
        assert_eq!((s.len(), s.dim()), (1, 2));
    }

    #[test]
    fn ragged_row_reports_line() {
        match parse_csv("1,2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("1,2\n3,abc\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(parse_labels("0\n1\n\n0\n").unwrap(), vec![false, true, false]);
        assert!(matches!(parse_labels("0\n2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn canonical_json_is_sorted_and_round_trips() {
        #[derive(Serialize)]
        struct T {
            zeta: f64,
            alpha: Vec<f64>,
            n: usize,
            inf: f64,
        }
        let x = 0.1 + 0.2;
        let s = to_canonical_json(&T {
            zeta: x,
            alpha: vec![1.0, -2.5e-300],
            n: 3,
            inf: f64::INFINITY,
        })
        .unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"inf\": null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["zeta"].as_f64().unwrap().to_bits(), x.to_bits());
        assert_eq!(back["alpha"][1].as_f64().unwrap(), -2.5e-300);
    }
}
