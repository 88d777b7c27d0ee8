//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model":   { "theta": [1.6, 0.3, 0.8, 0.3], "sigma_x": 3, "sigma_eta": 1,
//!                "n": 2, "l": 2, "m": 6, "mean_schedule": { "kind": "zero" } },
//!   "network": { "topology": { "kind": "ring", "self_weight": 0.3333333333333333 } },
//!   "bounds":  { "delta": 0.05, "delta_hat": 0.001 },
//!   "plan":    { "zeta": 20, "epsilon": 0.5, "epsilon_network": 0.01 },
//!   "run":     { "horizon": 3000, "runs": 10, "seed": 7 }
//! }
//! ```
//!
//! Matrices are row-major, either flat or nested. Exactly one of `plan`
//! (targets for the planner) and `schedule` (`zeta`, `steps`, `stop` given
//! directly) must be present. Every failure names the offending field path.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundInputs;
use crate::consensus::WeightMatrix;
use crate::model::{MeanSchedule, ModelSpec};
use crate::planner::{plan, Curvature, Plan, PlanRequest, Schedule};

/// Environment variable supplying the seed when `run.seed` is absent.
pub const SEED_ENV: &str = "DRLS_SEED";
/// Planner search horizon when `plan.horizon` is absent.
pub const DEFAULT_PLAN_HORIZON: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    fn missing(path: &str) -> Self {
        Self::new(path, "missing required field")
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValue {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixValue {
    fn to_matrix(&self, rows: usize, cols: usize, path: &str) -> Result<DMatrix<f64>, ConfigError> {
        let flat: Vec<f64> = match self {
            MatrixValue::Flat(v) => v.clone(),
            MatrixValue::Nested(rs) => {
                if rs.len() != rows || rs.iter().any(|r| r.len() != cols) {
                    return Err(ConfigError::new(
                        path,
                        format!("expected {rows} rows of {cols} entries"),
                    ));
                }
                rs.concat()
            }
        };
        if flat.len() != rows * cols {
            return Err(ConfigError::new(
                path,
                format!("expected {} entries ({rows}x{cols}), got {}", rows * cols, flat.len()),
            ));
        }
        Ok(DMatrix::from_row_slice(rows, cols, &flat))
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixValue::Nested(
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_schedule: Option<MeanSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    /// Defaults to `self_weight = 1/3`, equal thirds.
    Ring {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        self_weight: Option<f64>,
    },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
}

/// Confidence levels plus optional overrides of the scalars the bounds
/// assume known; absent overrides take the model's exact values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eta_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_hat_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_norm_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, alias = "epsilon_N", skip_serializing_if = "Option::is_none")]
    pub epsilon_network: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<u64>,
    #[serde(default, alias = "T", skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    #[serde(default, alias = "S", skip_serializing_if = "Option::is_none")]
    pub stop: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub writeback_mixed: Option<bool>,
}

/// The on-disk document, before validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<root>".to_string() } else { path };
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub writeback_mixed: bool,
}

/// A validated configuration with its schedule resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub model: ModelSpec,
    pub weights: WeightMatrix,
    pub inputs: BoundInputs,
    /// Present when the schedule came from the planner.
    pub plan_request: Option<PlanRequest>,
    pub plan: Option<Plan>,
    pub schedule: Schedule,
    pub run: Option<RunParams>,
}

fn need<T: Clone>(v: &Option<T>, path: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| ConfigError::missing(path))
}

impl ResolvedConfig {
    /// Validate `file`, running the planner if it has a `plan` section.
    pub fn resolve(file: &ConfigFile) -> Result<Self, ConfigError> {
        Self::resolve_with_seed(file, std::env::var(SEED_ENV).ok().as_deref())
    }

    /// As [`resolve`](Self::resolve) with an explicit stand-in for the seed
    /// environment variable.
    pub fn resolve_with_seed(file: &ConfigFile, env_seed: Option<&str>) -> Result<Self, ConfigError> {
        let model = resolve_model(file.model.as_ref().ok_or_else(|| ConfigError::missing("model"))?)?;
        let weights = resolve_network(
            file.network.as_ref().ok_or_else(|| ConfigError::missing("network"))?,
            model.m(),
        )?;
        let inputs = resolve_bounds(
            file.bounds.as_ref().ok_or_else(|| ConfigError::missing("bounds"))?,
            &model,
            weights.rho(),
        )?;

        let (plan_request, planned, schedule) = match (&file.plan, &file.schedule) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "plan",
                    "give either `plan` or `schedule`, not both",
                ))
            }
            (None, None) => return Err(ConfigError::new("plan", "one of `plan` or `schedule` is required")),
            (Some(p), None) => {
                let request = PlanRequest {
                    zeta: need(&p.zeta, "plan.zeta")?,
                    epsilon: need(&p.epsilon, "plan.epsilon")?,
                    epsilon_network: need(&p.epsilon_network, "plan.epsilon_network")?,
                    horizon: p.horizon.unwrap_or(DEFAULT_PLAN_HORIZON),
                };
                let out = plan(&inputs, &request, Curvature::Conservative)
                    .map_err(|e| ConfigError::new("plan", e.to_string()))?;
                (Some(request), Some(out), out.schedule)
            }
            (None, Some(s)) => {
                let schedule = Schedule {
                    zeta: need(&s.zeta, "schedule.zeta")?,
                    steps: need(&s.steps, "schedule.steps")?,
                    stop: need(&s.stop, "schedule.stop")?,
                };
                if schedule.zeta == 0 {
                    return Err(ConfigError::new("schedule.zeta", "must be at least 1"));
                }
                if schedule.steps == 0 {
                    return Err(ConfigError::new("schedule.steps", "must be at least 1"));
                }
                (None, None, schedule)
            }
        };

        let run = match &file.run {
            None => None,
            Some(r) => {
                let seed = match (r.seed, env_seed) {
                    (Some(s), _) => s,
                    (None, Some(v)) => v.trim().parse().map_err(|_| {
                        ConfigError::new("run.seed", format!("{SEED_ENV}={v:?} is not a u64"))
                    })?,
                    (None, None) => 0,
                };
                let params = RunParams {
                    horizon: need(&r.horizon, "run.horizon")?,
                    runs: need(&r.runs, "run.runs")?,
                    seed,
                    writeback_mixed: r.writeback_mixed.unwrap_or(false),
                };
                if params.runs == 0 {
                    return Err(ConfigError::new("run.runs", "must be at least 1"));
                }
                if params.horizon == 0 {
                    return Err(ConfigError::new("run.horizon", "must be at least 1"));
                }
                if params.horizon < schedule.stop {
                    return Err(ConfigError::new(
                        "run.horizon",
                        format!("horizon {} is shorter than the stopping time {}", params.horizon, schedule.stop),
                    ));
                }
                Some(params)
            }
        };

        Ok(Self {
            model,
            weights,
            inputs,
            plan_request,
            plan: planned,
            schedule,
            run,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::resolve(&ConfigFile::load(path)?)
    }

    /// Fully explicit document that resolves back to `self`.
    pub fn to_file(&self) -> ConfigFile {
        let theta = self.model.theta();
        ConfigFile {
            model: Some(ModelSection {
                theta: Some(MatrixValue::from_matrix(theta)),
                sigma_x: Some(self.model.sigma_x()),
                sigma_eta: Some(self.model.sigma_eta()),
                n: Some(self.model.n()),
                l: Some(self.model.l()),
                m: Some(self.model.m()),
                mean_schedule: Some(self.model.mean_schedule().clone()),
            }),
            network: Some(NetworkSection {
                weights: Some(MatrixValue::from_matrix(self.weights.matrix())),
                topology: None,
            }),
            bounds: Some(BoundsSection {
                delta: Some(self.inputs.delta),
                delta_hat: Some(self.inputs.delta_hat),
                sigma_x_lower: Some(self.inputs.sigma_x_lower),
                sigma_x_upper: Some(self.inputs.sigma_x_upper),
                sigma_eta_upper: Some(self.inputs.sigma_eta_upper),
                mu_hat_upper: Some(self.inputs.mu_hat_upper),
                theta_norm_upper: Some(self.inputs.theta_norm_upper),
            }),
            plan: self.plan_request.map(|p| PlanSection {
                zeta: Some(p.zeta),
                epsilon: Some(p.epsilon),
                epsilon_network: Some(p.epsilon_network),
                horizon: Some(p.horizon),
            }),
            schedule: match self.plan_request {
                Some(_) => None,
                None => Some(ScheduleSection {
                    zeta: Some(self.schedule.zeta),
                    steps: Some(self.schedule.steps),
                    stop: Some(self.schedule.stop),
                }),
            },
            run: self.run.map(|r| RunSection {
                horizon: Some(r.horizon),
                runs: Some(r.runs),
                seed: Some(r.seed),
                writeback_mixed: Some(r.writeback_mixed),
            }),
        }
    }
}

fn resolve_model(s: &ModelSection) -> Result<ModelSpec, ConfigError> {
    let n = need(&s.n, "model.n")?;
    let l = need(&s.l, "model.l")?;
    let m = need(&s.m, "model.m")?;
    for (name, v) in [("model.n", n), ("model.l", l), ("model.m", m)] {
        if v == 0 {
            return Err(ConfigError::new(name, "must be at least 1"));
        }
    }
    let theta = need(&s.theta, "model.theta")?.to_matrix(l, n, "model.theta")?;
    let sigma_x = need(&s.sigma_x, "model.sigma_x")?;
    let sigma_eta = need(&s.sigma_eta, "model.sigma_eta")?;
    let mean = s.mean_schedule.clone().unwrap_or(MeanSchedule::Zero);
    ModelSpec::new(theta, sigma_x, sigma_eta, mean, m).map_err(|e| {
        use crate::model::ModelError::*;
        let path = match e {
            SigmaX(_) => "model.sigma_x",
            SigmaEta(_) => "model.sigma_eta",
            Schedule(_) => "model.mean_schedule",
            _ => "model",
        };
        ConfigError::new(path, e.to_string())
    })
}

fn resolve_network(s: &NetworkSection, m: usize) -> Result<WeightMatrix, ConfigError> {
    match (&s.weights, &s.topology) {
        (Some(_), Some(_)) => Err(ConfigError::new(
            "network",
            "give either `weights` or `topology`, not both",
        )),
        (None, None) => Err(ConfigError::new("network", "one of `weights` or `topology` is required")),
        (Some(w), None) => {
            let w = w.to_matrix(m, m, "network.weights")?;
            WeightMatrix::new(w).map_err(|e| ConfigError::new("network.weights", e.to_string()))
        }
        (None, Some(Topology::Ring { self_weight })) => {
            WeightMatrix::ring(m, self_weight.unwrap_or(1.0 / 3.0))
                .map_err(|e| ConfigError::new("network.topology", e.to_string()))
        }
        (None, Some(Topology::Complete)) => WeightMatrix::complete(m)
            .map_err(|e| ConfigError::new("network.topology", e.to_string())),
    }
}

fn resolve_bounds(s: &BoundsSection, model: &ModelSpec, rho: f64) -> Result<BoundInputs, ConfigError> {
    let delta = need(&s.delta, "bounds.delta")?;
    let delta_hat = need(&s.delta_hat, "bounds.delta_hat")?;
    let exact = BoundInputs::from_model(model, rho, delta, delta_hat);
    let inputs = BoundInputs {
        sigma_x_lower: s.sigma_x_lower.unwrap_or(exact.sigma_x_lower),
        sigma_x_upper: s.sigma_x_upper.unwrap_or(exact.sigma_x_upper),
        sigma_eta_upper: s.sigma_eta_upper.unwrap_or(exact.sigma_eta_upper),
        mu_hat_upper: s.mu_hat_upper.unwrap_or(exact.mu_hat_upper),
        theta_norm_upper: s.theta_norm_upper.unwrap_or(exact.theta_norm_upper),
        ..exact
    };
    inputs
        .validate()
        .map_err(|e| ConfigError::new("bounds", e.to_string()))?;
    Ok(inputs)
}
