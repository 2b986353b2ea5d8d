//! Result rows and their CSV form.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Method, Metric, ProblemConfig};
use crate::error::CliError;

/// Column order of the result table. Changing it breaks downstream readers.
pub const HEADER: [&str; 7] = ["lambda", "t", "order", "method_a", "method_b", "metric", "value"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Number(f64),
    /// Every error in a slope fit sat at the numerical floor.
    Floor,
}

impl Value {
    fn render(self) -> String {
        match self {
            Value::Number(v) => format!("{v:e}"),
            Value::Floor => "floor".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// `None` on fitted rows that span all strengths.
    pub lambda: Option<f64>,
    pub t: f64,
    pub order: usize,
    pub method_a: Method,
    /// `None` when the metric involves one method only.
    pub method_b: Option<Method>,
    pub metric: Metric,
    pub value: Value,
}

impl ResultRow {
    pub fn record(&self) -> [String; 7] {
        [
            self.lambda.map_or_else(|| "fit".into(), |l| l.to_string()),
            self.t.to_string(),
            self.order.to_string(),
            self.method_a.to_string(),
            self.method_b.map_or_else(|| "-".into(), |m| m.to_string()),
            self.metric.to_string(),
            self.value.render(),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `table.csv` → `table.json`; a `.json` table gets `.config.json` instead.
pub fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("config.json")
    } else {
        out.with_extension("json")
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    verify: bool,
    config: &'a ProblemConfig,
}

pub fn write_sidecar(path: &Path, command: &str, verify: bool, config: &ProblemConfig) -> Result<(), CliError> {
    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        verify,
        config,
    };
    let text = serde_json::to_string_pretty(&sidecar).expect("config serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_render_with_fixed_columns() {
        let row = ResultRow {
            lambda: Some(0.01),
            t: 1.0,
            order: 2,
            method_a: Method::Block,
            method_b: Some(Method::Exact),
            metric: Metric::StateError,
            value: Value::Number(1.25e-6),
        };
        let fit = ResultRow {
            lambda: None,
            method_b: None,
            metric: Metric::Slope,
            value: Value::Floor,
            ..row.clone()
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row, fit]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "lambda,t,order,method_a,method_b,metric,value\n\
             0.01,1,2,block,exact,state_error,1.25e-6\n\
             fit,1,2,block,-,slope,floor\n"
        );
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("out/table.csv")),
            PathBuf::from("out/table.json")
        );
        assert_eq!(sidecar_path(Path::new("table")), PathBuf::from("table.json"));
        assert_eq!(sidecar_path(Path::new("t.json")), PathBuf::from("t.config.json"));
    }
}
