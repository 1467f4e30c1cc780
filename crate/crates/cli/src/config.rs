//! Circuit files.
//!
//! ```json
//! {"n": 1, "L": [[1]], "K": [[1]], "hbar": 1,
//!  "lines": [{"kind": "ohmic", "R": 1}]}
//! ```
//!
//! Line kinds: `ohmic {R}`, `drude {R, omega_c}`, `cutoff_ohmic {R, omega_c}`,
//! `tabulated {omega, J}`.

use std::path::Path;

use nalgebra::DMatrix;
use qtl_core::{CircuitSpec, SpectralDensity};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
    hbar: Option<f64>,
    lines: Vec<RawLine>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawLine {
    Ohmic {
        #[serde(rename = "R")]
        r: f64,
    },
    Drude {
        #[serde(rename = "R")]
        r: f64,
        omega_c: f64,
    },
    CutoffOhmic {
        #[serde(rename = "R")]
        r: f64,
        omega_c: f64,
    },
    Tabulated {
        omega: Vec<f64>,
        #[serde(rename = "J")]
        j: Vec<f64>,
    },
}

impl From<RawLine> for SpectralDensity {
    fn from(raw: RawLine) -> Self {
        match raw {
            RawLine::Ohmic { r } => Self::Ohmic { r },
            RawLine::Drude { r, omega_c } => Self::Drude { r, omega_c },
            RawLine::CutoffOhmic { r, omega_c } => Self::CutoffOhmic { r, omega_c },
            RawLine::Tabulated { omega, j } => Self::Tabulated { omega, values: j },
        }
    }
}

fn matrix(name: &'static str, n: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Validation {
            kind: "DimensionMismatch",
            message: format!("{name} must be {n}x{n}"),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Parses and validates a circuit description.
pub fn parse_config(text: &str) -> Result<CircuitSpec, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    let l = matrix("L", raw.n, &raw.l)?;
    let k = matrix("K", raw.n, &raw.k)?;
    let lines = raw.lines.into_iter().map(SpectralDensity::from).collect();
    let spec = CircuitSpec::new(l, k, lines).map_err(CliError::validation)?;
    match raw.hbar {
        Some(h) => spec.with_hbar(h).map_err(CliError::validation),
        None => Ok(spec),
    }
}

pub fn load_config(path: &Path) -> Result<CircuitSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scalar() {
        let spec = parse_config(r#"{"n":1,"L":[[1]],"K":[[1]],"lines":[{"kind":"ohmic","R":1}]}"#)
            .unwrap();
        assert_eq!(spec.n, 1);
        assert_eq!(spec.hbar, 1.0);
        assert_eq!(spec.lines, vec![SpectralDensity::Ohmic { r: 1.0 }]);
    }

    #[test]
    fn every_kind() {
        let text = r#"{"n":4,"hbar":0.5,
            "L":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
            "K":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
            "lines":[{"kind":"ohmic","R":1},{"kind":"drude","R":1,"omega_c":2},
                     {"kind":"cutoff_ohmic","R":1,"omega_c":3},
                     {"kind":"tabulated","omega":[0,1,2],"J":[0,1,0.5]}]}"#;
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.hbar, 0.5);
        assert_eq!(spec.lines[3].kind(), "tabulated");
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let err = parse_config(r#"{"n":1,"L":[[1]],"lines":[]}"#).unwrap_err();
        match err {
            CliError::Parse { message, line, .. } => {
                assert!(message.contains("`K`"), "{message}");
                assert_eq!(line, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_config("{\n  \"n\": 1,\n  \"L\": [[1]] oops\n}").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn singular_inductance() {
        let err = parse_config(r#"{"n":1,"L":[[0]],"K":[[1]],"lines":[{"kind":"ohmic","R":1}]}"#)
            .unwrap_err();
        assert_eq!(err.kind(), "NotPositiveDefinite");
    }

    #[test]
    fn wrong_shape() {
        let err = parse_config(r#"{"n":2,"L":[[1]],"K":[[1]],"lines":[]}"#).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
    }
}
