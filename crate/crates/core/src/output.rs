//! Number formatting and tabular output shared by the CLI and exporters.

use std::io::Write;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// `%.17g`: 17 significant digits with trailing zeros removed, which
/// round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// A cell of a result table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Missing,
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Missing => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => {
                serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null)
            }
            Cell::Num(v) => Value::String(fmt_f64(*v)),
            Cell::Missing => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Named columns with rows of cells, written as CSV or JSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV preceded by `# key: value` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[(String, String)]) -> Result<()> {
        for (k, v) in comments {
            writeln!(out, "# {k}: {v}").map_err(io_err)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// `{"manifest": {...}, "columns": [...], "rows": [{col: value}, ...]}`.
    pub fn to_json(&self, comments: &[(String, String)]) -> Value {
        let manifest: Map<String, Value> =
            comments.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect())
            })
            .collect();
        serde_json::json!({ "manifest": manifest, "columns": self.columns, "rows": rows })
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Domain(format!("write failed: {e}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Domain(format!("write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(1.5), "1.5");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(-2.0 / 3.0), "-0.66666666666666663");
        assert_eq!(fmt_f64(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_f64(1e300), "1.0000000000000001e+300");
        assert_eq!(fmt_f64(12345678.0), "12345678");
        assert_eq!(fmt_f64(0.0001), "0.0001");
        assert_eq!(fmt_f64(1e17), "1e+17");
    }

    #[test]
    fn round_trips() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 6.02e23, -4.9e-324, 0.3 - 0.1] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(["x", "se"]);
        t.push(vec![0.5.into(), None.into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[("seed".into(), "3".into())]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# seed: 3\nx,se\n0.5,\n");
        let j = t.to_json(&[]);
        assert_eq!(j["rows"][0]["x"], 0.5);
        assert!(j["rows"][0]["se"].is_null());
    }
}
