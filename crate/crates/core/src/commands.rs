//! The `plan`, `simulate` and `bounds` commands, callable in-process.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{comm_bound, global_bound, local_bound, BoundsError};
use crate::config::{ConfigError, ResolvedConfig};
use crate::sim::{run_parallel, SimConfig, SimError};
use crate::trace::{fmt_sig, write_trace, TraceLine};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for everything at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sim(_) | CliError::Io { .. } => 3,
        }
    }

    fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// Planner output as written to the JSON result file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    #[serde(rename = "T")]
    pub steps: u32,
    #[serde(rename = "S")]
    pub stop: u64,
    pub zeta: u64,
    pub t_first: u64,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    #[serde(rename = "C1")]
    pub noise_constant: f64,
    /// Network term at `t_first`.
    pub network_term: f64,
    pub local_bound_at_stop: f64,
    pub comm_bound_at_stop: f64,
}

impl PlanReport {
    pub fn summary(&self) -> String {
        format!(
            "rho(W)      = {}\n\
             t_first     = {}\n\
             T           = {}  (network term {} at t_first)\n\
             S           = {}  (zeta = {})\n\
             bounds at S : local {}, communicated {}\n\
             constants   : C1 = {}, c1 = {}, c2 = {}, c3 = {}\n",
            fmt_sig(self.rho),
            self.t_first,
            self.steps,
            fmt_sig(self.network_term),
            self.stop,
            self.zeta,
            fmt_sig(self.local_bound_at_stop),
            fmt_sig(self.comm_bound_at_stop),
            fmt_sig(self.noise_constant),
            fmt_sig(self.c1),
            fmt_sig(self.c2),
            fmt_sig(self.c3),
        )
    }
}

/// Run the planner described by the config's `plan` section.
pub fn plan_report(cfg: &ResolvedConfig) -> Result<PlanReport, CliError> {
    let plan = cfg
        .plan
        .ok_or_else(|| ConfigError {
            path: "plan".into(),
            message: "the plan command needs a `plan` section".into(),
        })?;
    let inputs = &cfg.inputs;
    Ok(PlanReport {
        steps: plan.schedule.steps,
        stop: plan.schedule.stop,
        zeta: plan.schedule.zeta,
        t_first: plan.steps.first_comm_time,
        rho: inputs.rho,
        c1: inputs.alpha_growth(),
        c2: inputs.alpha_noise(),
        c3: inputs.inverse_gap(),
        noise_constant: inputs.noise_constant(),
        network_term: plan.steps.network_term,
        local_bound_at_stop: plan.stop.local_bound,
        comm_bound_at_stop: plan.stop.comm_bound,
    })
}

/// `plan <config>`: writes the report as JSON to `json_out`, returns it.
pub fn cmd_plan(config: &Path, json_out: &Path) -> Result<PlanReport, CliError> {
    let cfg = ResolvedConfig::load(config)?;
    let report = plan_report(&cfg)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(json_out, text)
        .map_err(|e| CliError::io(format!("writing {}", json_out.display()), e))?;
    Ok(report)
}

fn sim_config(cfg: &ResolvedConfig) -> Result<SimConfig, CliError> {
    let run = cfg.run.ok_or_else(|| ConfigError {
        path: "run".into(),
        message: "missing required field".into(),
    })?;
    Ok(SimConfig {
        model: cfg.model.clone(),
        weights: cfg.weights.clone(),
        schedule: cfg.schedule,
        horizon: run.horizon,
        runs: run.runs,
        seed: run.seed,
        writeback_mixed: run.writeback_mixed,
    })
}

/// Header keys, in their fixed order.
pub fn trace_header(cfg: &ResolvedConfig, sim: &SimConfig) -> Vec<(String, String)> {
    let theta: Vec<String> = (0..cfg.model.l())
        .flat_map(|i| (0..cfg.model.n()).map(move |j| (i, j)))
        .map(|(i, j)| fmt_sig(cfg.model.theta()[(i, j)]))
        .collect();
    let mut h = vec![
        ("m", cfg.model.m().to_string()),
        ("n", cfg.model.n().to_string()),
        ("l", cfg.model.l().to_string()),
        ("theta", format!("[{}]", theta.join(";"))),
        ("sigma_x", fmt_sig(cfg.model.sigma_x())),
        ("sigma_eta", fmt_sig(cfg.model.sigma_eta())),
        ("mu_hat", fmt_sig(cfg.model.mu_hat())),
        ("rho", fmt_sig(cfg.weights.rho())),
        ("delta", fmt_sig(cfg.inputs.delta)),
        ("delta_hat", fmt_sig(cfg.inputs.delta_hat)),
        ("zeta", sim.schedule.zeta.to_string()),
        ("T", sim.schedule.steps.to_string()),
        ("S", sim.schedule.stop.to_string()),
        ("planned", cfg.plan.is_some().to_string()),
    ];
    if let (Some(req), Some(plan)) = (cfg.plan_request, cfg.plan) {
        h.push(("epsilon", fmt_sig(req.epsilon)));
        h.push(("epsilon_network", fmt_sig(req.epsilon_network)));
        h.push(("t_first", plan.steps.first_comm_time.to_string()));
    }
    h.extend([
        ("horizon", sim.horizon.to_string()),
        ("runs", sim.runs.to_string()),
        ("seed", sim.seed.to_string()),
        ("writeback_mixed", sim.writeback_mixed.to_string()),
    ]);
    h.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Averaged trace rows with their bound columns.
pub fn simulate_lines(cfg: &ResolvedConfig, parallel_runs: usize) -> Result<(SimConfig, Vec<TraceLine>), CliError> {
    let sim = sim_config(cfg)?;
    let out = run_parallel(&sim, parallel_runs)?;
    let lines = out
        .mean
        .rows
        .iter()
        .map(|row| {
            let t = row.t;
            let worst_local = (0..cfg.model.m())
                .map(|i| cfg.model.lambda_min_local(i, t))
                .fold(f64::INFINITY, f64::min);
            let local = local_bound(&cfg.inputs, t, worst_local).ok().map(|r| r.value);
            let comm = if row.comm_fired {
                comm_bound(&cfg.inputs, t, sim.schedule.steps, cfg.model.lambda_min_pooled(t))
                    .ok()
                    .map(|r| r.value)
            } else {
                None
            };
            TraceLine {
                row: *row,
                local_bound: local,
                comm_bound: comm,
            }
        })
        .collect();
    Ok((sim, lines))
}

/// `simulate <config> -o <trace.csv>`.
pub fn cmd_simulate(config: &Path, output: &Path, parallel_runs: usize) -> Result<usize, CliError> {
    let cfg = ResolvedConfig::load(config)?;
    let (sim, lines) = simulate_lines(&cfg, parallel_runs)?;
    let file = File::create(output)
        .map_err(|e| CliError::io(format!("creating {}", output.display()), e))?;
    let mut w = BufWriter::new(file);
    write_trace(&mut w, &trace_header(&cfg, &sim), &lines)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(format!("writing {}", output.display()), e))?;
    Ok(lines.len())
}

/// One evaluated row of the `bounds` table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub t: u64,
    pub local: Option<f64>,
    pub global: Option<f64>,
    pub comm: Option<f64>,
    pub network_term: Option<f64>,
    pub noise_term: Option<f64>,
    /// Set when some bound is not yet valid at `t`.
    pub flag: Option<String>,
}

/// Evaluate every bound at each `t` with the config's `T`.
pub fn bounds_table(cfg: &ResolvedConfig, ts: &[u64]) -> Vec<BoundsRow> {
    let steps = cfg.schedule.steps;
    ts.iter()
        .map(|&t| {
            let mut below = Vec::new();
            let mut keep = |r: Result<crate::bounds::BoundReport, BoundsError>, name: &str| match r {
                Ok(r) => Some(r),
                Err(BoundsError::BelowBurnIn { valid_from, .. }) => {
                    below.push(format!("{name} from t={valid_from}"));
                    None
                }
                Err(e) => {
                    below.push(format!("{name}: {e}"));
                    None
                }
            };
            // μ̄ replaced by 0, as in planning
            let local = keep(local_bound(&cfg.inputs, t, 1.0), "local");
            let global = keep(global_bound(&cfg.inputs, t, 1.0), "global");
            let comm = keep(comm_bound(&cfg.inputs, t, steps, 1.0), "comm");
            BoundsRow {
                t,
                local: local.map(|r| r.value),
                global: global.map(|r| r.value),
                comm: comm.map(|r| r.value),
                network_term: comm.map(|r| r.network_term),
                noise_term: comm.map(|r| r.noise_term),
                flag: (!below.is_empty()).then(|| format!("below burn-in ({})", below.join("; "))),
            }
        })
        .collect()
}

pub fn render_bounds(rows: &[BoundsRow]) -> String {
    let cell = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    let mut s = String::from("t,local,global,comm,network_term,noise_term,note\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            cell(r.local),
            cell(r.global),
            cell(r.comm),
            cell(r.network_term),
            cell(r.noise_term),
            r.flag.as_deref().unwrap_or("")
        ));
    }
    s
}

/// `bounds <config> --at t1,t2,...`.
pub fn cmd_bounds(config: &Path, ts: &[u64]) -> Result<Vec<BoundsRow>, CliError> {
    let cfg = ResolvedConfig::load(config)?;
    Ok(bounds_table(&cfg, ts))
}
