use adiabatic_core::operator::CMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub command: &'a str,
    pub version: &'static str,
    pub status: &'static str,
    pub config: &'a RunConfig,
    pub results: Value,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

impl<'a> Report<'a> {
    pub fn new(config: &'a RunConfig, results: Value, files: Vec<String>, wall_time_s: f64) -> Self {
        Self { command: &config.command, version: env!("CARGO_PKG_VERSION"), status: "ok", config, results, files, wall_time_s }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Row-major nested `[re, im]` pairs.
pub fn matrix(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// JSON has no NaN or infinity; such values become `null`.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
