use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Every setting a run can take, as given on the command line or in a
/// `--config` file. Unset fields fall back to model-dependent defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buffer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_params: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Vec<f64>>,
    #[serde(rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterdiabatic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RawConfig {
    /// Keys present in `file` replace those given on the command line.
    pub fn overlay(self, file: &str) -> Result<Self, CliError> {
        let file: Map<String, Value> = serde_json::from_str(file)
            .map_err(|e| CliError::Validation(format!("config file: {e}")))?;
        let mut base = match serde_json::to_value(self).expect("flags serialize") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        base.extend(file);
        serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Validation(format!("config file: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Su2,
    Oscillator,
    Random,
    File,
}

/// Fully resolved settings; echoed verbatim in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: String,
    pub model_kind: ModelKind,
    pub l: f64,
    pub mu: f64,
    pub nmax: usize,
    pub buffer: usize,
    pub dim: usize,
    pub n_params: usize,
    pub terms: usize,
    pub seed: u64,
    pub point: Vec<f64>,
    pub end: Option<Vec<f64>>,
    #[serde(rename = "loop")]
    pub loop_kind: String,
    pub omega: f64,
    pub theta0: f64,
    pub radius: f64,
    pub axes: [usize; 2],
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub steps: usize,
    pub grid: usize,
    pub tol: f64,
    pub horizon: Option<f64>,
    pub time: f64,
    pub tau: f64,
    pub dt: f64,
    pub profile: String,
    pub counterdiabatic: bool,
    pub level: Option<usize>,
    pub out: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    pub fn resolve(command: &str, raw: RawConfig) -> Result<Self, CliError> {
        let model = raw.model.clone().unwrap_or_else(|| "su2".into());
        let model_kind = match model.as_str() {
            "su2" => ModelKind::Su2,
            "oscillator" => ModelKind::Oscillator,
            "random" => ModelKind::Random,
            m if m.starts_with("file:") && m.len() > 5 => ModelKind::File,
            m => return Err(invalid(format!("unknown model '{m}' (su2 | oscillator | random | file:<path>)"))),
        };
        let n_params = raw.n_params.unwrap_or(2);
        let point = match model_kind {
            ModelKind::Su2 => {
                let mut p = raw.point.clone().unwrap_or_else(|| vec![1.0, 1.0, 0.3]);
                overwrite(&mut p, &[raw.b, raw.theta, raw.phi]);
                p
            }
            ModelKind::Oscillator => {
                let mut p = raw.point.clone().unwrap_or_else(|| vec![2.0, 0.5, 1.5]);
                overwrite(&mut p, &[raw.x, raw.y, raw.z]);
                p
            }
            ModelKind::Random => raw.point.clone().unwrap_or_else(|| vec![0.1; n_params]),
            ModelKind::File => raw.point.clone().unwrap_or_default(),
        };
        let default_loop = if model_kind == ModelKind::Su2 { "triangle" } else { "circle" };
        let (default_axes, default_u, default_v) = match model_kind {
            ModelKind::Su2 => ([1, 2], [0.1, 3.0], [0.0, 1.0]),
            ModelKind::Oscillator => ([1, 2], [0.0, 0.4], [1.2, 1.6]),
            _ => ([0, 1], [0.0, 0.3], [0.0, 0.3]),
        };
        let cfg = Self {
            command: command.into(),
            model,
            model_kind,
            l: raw.l.unwrap_or(0.5),
            mu: raw.mu.unwrap_or(1.0),
            nmax: raw.nmax.unwrap_or(60),
            buffer: raw.buffer.unwrap_or(20),
            dim: raw.dim.unwrap_or(3),
            n_params,
            terms: raw.terms.unwrap_or(4),
            seed: raw.seed.unwrap_or(0),
            point,
            end: raw.end,
            loop_kind: raw.loop_kind.unwrap_or_else(|| default_loop.into()),
            omega: raw.omega.unwrap_or(FRAC_PI_2),
            theta0: raw.theta0.unwrap_or(1.0),
            radius: raw.radius.unwrap_or(0.2),
            axes: raw.axes.unwrap_or(default_axes),
            u_range: raw.u_range.unwrap_or(default_u),
            v_range: raw.v_range.unwrap_or(default_v),
            steps: raw.steps.unwrap_or(2000),
            grid: raw.grid.unwrap_or(50),
            tol: raw.tol.unwrap_or(1e-3),
            horizon: raw.horizon,
            time: raw.time.unwrap_or(1.7),
            tau: raw.tau.unwrap_or(1.0),
            dt: raw.dt.unwrap_or(1e-4),
            profile: raw.profile.unwrap_or_else(|| "linear".into()),
            counterdiabatic: raw.counterdiabatic.unwrap_or(true),
            level: raw.level,
            out: raw.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.steps == 0 {
            return Err(invalid("steps must be positive"));
        }
        if self.grid == 0 {
            return Err(invalid("grid must be positive"));
        }
        if self.axes[0] == self.axes[1] {
            return Err(invalid("axes must name two distinct parameters"));
        }
        if !["linear", "smooth"].contains(&self.profile.as_str()) {
            return Err(invalid(format!("unknown profile '{}' (linear | smooth)", self.profile)));
        }
        for (name, v) in [("tol", self.tol), ("tau", self.tau), ("dt", self.dt), ("radius", self.radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn model_path(&self) -> Option<&str> {
        self.model.strip_prefix("file:")
    }
}

fn overwrite(p: &mut [f64], values: &[Option<f64>]) {
    for (slot, v) in p.iter_mut().zip(values) {
        if let Some(v) = v {
            *slot = *v;
        }
    }
}
