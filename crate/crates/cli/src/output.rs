use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Column-named table, emitted as CSV or JSON.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", num(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Non-finite cells become strings, as JSON has no inf/nan.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|&v| real(v)).collect()))
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(num(x))
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": real(z.re), "im": real(z.im) })
}

pub fn complex_matrix(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex(z)).collect()))
            .collect(),
    )
}

pub fn real_matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|&v| real(v)).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
        let x = std::f64::consts::PI;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![0.0, 2.5]);
        assert_eq!(
            t.to_csv(),
            "a,b\n0.0000000000000000e0,2.5000000000000000e0\n"
        );
    }
}
