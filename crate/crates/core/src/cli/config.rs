//! JSON run configuration with dotted-path overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::analysis::{lin_space, log_space, SweepParameter};
use crate::fit::FitParameter;
use crate::model::GestureParams;
use crate::scaling::ScalingMode;
use crate::solver::{SimConfig, DEFAULT_DT_OUT};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub sim: SimSection,
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
    pub forces: Option<ForcesSection>,
    pub powerlaw: Option<PowerLawSection>,
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingName {
    Proportional,
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: f64,
    /// Defaults to `2 / dt_out`.
    pub k: Option<f64>,
    pub d: f64,
    pub scaling: ScalingName,
    pub n: u32,
    #[serde(rename = "D")]
    pub range: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            k: None,
            d: 0.95,
            scaling: ScalingName::Proportional,
            n: 3,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub x0: f64,
    pub v0: f64,
    #[serde(rename = "T")]
    pub target: f64,
    pub t_end: Option<f64>,
    pub dt_out: f64,
    pub rtol: f64,
    pub atol: f64,
    pub guard: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            x0: 1.0,
            v0: 0.0,
            target: 0.0,
            t_end: None,
            dt_out: DEFAULT_DT_OUT,
            rtol: d.rtol,
            atol: d.atol,
            guard: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: Format,
    /// Output directory; `--out` takes precedence.
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => lin_space(self.start, self.stop, self.count),
            Spacing::Log => log_space(self.start, self.stop, self.count),
        }
    }
}

/// Either an explicit list or a generated range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueSpec {
    pub values: Option<Vec<f64>>,
    pub range: Option<RangeSpec>,
}

impl ValueSpec {
    pub fn resolve(&self, section: &str) -> Result<Vec<f64>, CliError> {
        let values = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if r.spacing == Spacing::Log && !(r.start > 0.0 && r.stop > 0.0) {
                    return Err(CliError::Config(format!(
                        "{section}.range: log spacing needs positive bounds"
                    )));
                }
                r.values()
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(format!(
                    "{section}: give either `values` or `range`, not both"
                )))
            }
            (None, None) => {
                return Err(CliError::Config(format!(
                    "{section}: one of `values` or `range` is required"
                )))
            }
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("{section}: value list is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("{section}: values must be finite")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<RangeSpec>,
}

impl SweepSection {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        ValueSpec {
            values: self.values.clone(),
            range: self.range,
        }
        .resolve("sweep")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcesSection {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "default_force_points")]
    pub n_points: usize,
}

fn default_force_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerLawSection {
    pub k: ValueSpec,
    pub d: Vec<f64>,
}

impl Default for PowerLawSection {
    fn default() -> Self {
        Self {
            k: ValueSpec {
                values: None,
                range: Some(RangeSpec {
                    start: 500.0,
                    stop: 8000.0,
                    count: 20,
                    spacing: Spacing::Log,
                }),
            },
            d: vec![0.0, 0.25, 0.5, 0.75, 0.95],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitInitial {
    pub k: Option<f64>,
    pub d: Option<f64>,
    #[serde(rename = "T")]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBounds {
    pub k: Option<[f64; 2]>,
    pub d: Option<[f64; 2]>,
    #[serde(rename = "T")]
    pub target: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub observed: Option<String>,
    pub free: Vec<FitParameter>,
    pub initial: FitInitial,
    pub bounds: FitBounds,
    pub velocity_weight: f64,
    pub max_iterations: usize,
    /// Take `x0`/`v0` from the `sim` section instead of the first sample.
    pub use_sim_initial_state: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            observed: None,
            free: vec![FitParameter::Stiffness, FitParameter::Ratio],
            initial: FitInitial::default(),
            bounds: FitBounds::default(),
            velocity_weight: 0.0,
            max_iterations: 2000,
            use_sim_initial_state: false,
        }
    }
}

impl RunConfig {
    /// Parses `text`, applies `key=value` overrides and validates the result.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        // Parse the file on its own first so errors carry line and column.
        let mut de = serde_json::Deserializer::from_str(text);
        let _: RunConfig = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Config(describe(&e)))?;
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("after --set overrides: {}", describe(&e))))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stiffness(&self) -> f64 {
        self.model.k.unwrap_or(2.0 / self.sim.dt_out)
    }

    pub fn scaling_mode(&self) -> Result<ScalingMode, CliError> {
        match (self.model.scaling, self.model.range) {
            (ScalingName::Proportional, _) => Ok(ScalingMode::Proportional),
            (ScalingName::Local, _) => Ok(ScalingMode::Local),
            (ScalingName::Global, Some(range)) => Ok(ScalingMode::Global { range }),
            (ScalingName::Global, None) => Err(CliError::Config(
                "model.D: global scaling requires the movement range D".into(),
            )),
        }
    }

    pub fn gesture(&self) -> Result<GestureParams, CliError> {
        Ok(GestureParams {
            mass: self.model.m,
            stiffness: self.stiffness(),
            ratio: self.model.d,
            scaling: self.scaling_mode()?,
            exponent: self.model.n,
            target: self.sim.target,
        })
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            x0: self.sim.x0,
            v0: self.sim.v0,
            t_end: self.sim.t_end,
            dt_out: self.sim.dt_out,
            rtol: self.sim.rtol,
            atol: self.sim.atol,
            guard: self.sim.guard,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let params = self.gesture()?;
        params
            .validate()
            .map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.sim_config()
            .validate()
            .map_err(|e| CliError::Config(format!("sim: {e}")))?;
        if let Some(f) = &self.forces {
            if !(f.x_min < f.x_max) {
                return Err(CliError::Config("forces: x_min must be below x_max".into()));
            }
            if f.n_points < 2 {
                return Err(CliError::Config("forces.n_points: at least 2 points".into()));
            }
        }
        if let Some(f) = &self.fit {
            if !(f.velocity_weight >= 0.0) {
                return Err(CliError::Config("fit.velocity_weight: must be non-negative".into()));
            }
            if f.free.is_empty() {
                return Err(CliError::Config("fit.free: at least one parameter".into()));
            }
        }
        Ok(())
    }
}

fn describe<E: std::fmt::Display>(e: &serde_path_to_error::Error<E>) -> String {
    let path = e.path().to_string();
    if path == "." {
        format!("{}", e.inner())
    } else {
        format!("{path}: {}", e.inner())
    }
}

/// Sets a dotted path such as `model.k=4000`. The value is read as JSON when
/// it parses, otherwise as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment}: expected key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("--set {assignment}: empty key segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set {path}: `{key}` is not inside an object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("--set {path}: parent is not an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
