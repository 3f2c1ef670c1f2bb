//! Structured metrics documents and plain-text tables.

use serde::{Deserialize, Serialize};
use uuv_hybrid::metrics::{MetricsConfig, RunMetrics};
use uuv_hybrid::sim::SimConfig;

/// Bumped whenever a field of [`MetricsDocument`], [`CompareDocument`] or
/// [`SweepDocument`] changes meaning or disappears.
pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub config: SimConfig,
    pub metrics_config: MetricsConfig,
    pub metrics: RunMetrics,
}

impl MetricsDocument {
    pub fn new(config: &SimConfig, metrics_config: MetricsConfig, metrics: RunMetrics) -> Self {
        Self {
            schema_version: METRICS_SCHEMA_VERSION,
            seed: config.scenario.seed(),
            config: config.clone(),
            metrics_config,
            metrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRun {
    pub rank: usize,
    /// Sum of the per-axis torque chattering indices, used for ranking.
    pub chattering_total: f64,
    pub metrics: RunMetrics,
}

/// Contents of `compare.json`. `config` is the shared configuration with
/// the controller field set to the first entry; each run differs only in
/// its controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDocument {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub config: SimConfig,
    pub metrics_config: MetricsConfig,
    pub runs: Vec<RankedRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: serde_json::Value,
    pub metrics: RunMetrics,
}

/// Contents of `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub parameter: String,
    pub config: SimConfig,
    pub metrics_config: MetricsConfig,
    pub points: Vec<SweepPoint>,
}

pub fn chattering_total(m: &RunMetrics) -> f64 {
    m.chattering_index.iter().sum()
}

/// Orders runs by total torque chattering, smoothest first.
pub fn rank(runs: Vec<RunMetrics>) -> Vec<RankedRun> {
    let mut ranked: Vec<RankedRun> = runs
        .into_iter()
        .map(|metrics| RankedRun {
            rank: 0,
            chattering_total: chattering_total(&metrics),
            metrics,
        })
        .collect();
    ranked.sort_by(|a, b| a.chattering_total.total_cmp(&b.chattering_total));
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    ranked
}

const HEADER: &str = "chatter x/y/n (N/s)          cmd chatter u/v/r      pos rmse  jump    settle   V_p/V_z rises";

fn row(m: &RunMetrics) -> String {
    let settle = m.settle_time.map_or("-".to_string(), |t| format!("{t:.2}"));
    format!(
        "{:>8.3} {:>8.3} {:>8.4}   {:>6.4} {:>6.4} {:>6.4}   {:>8.4}  {:>6.3}  {:>7}  {}/{}",
        m.chattering_index[0],
        m.chattering_index[1],
        m.chattering_index[2],
        m.command_chattering[0],
        m.command_chattering[1],
        m.command_chattering[2],
        m.pos_rmse,
        m.peak_cmd_jump,
        settle,
        m.lyapunov_violations.v_p,
        m.lyapunov_violations.v_z,
    )
}

pub fn metrics_table(m: &RunMetrics) -> String {
    format!("{:<18} {HEADER}\n{:<18} {}\n", "controller", m.controller, row(m))
}

pub fn compare_table(runs: &[RankedRun]) -> String {
    let mut out = format!("rank {:<18} {HEADER}\n", "controller");
    for r in runs {
        out.push_str(&format!("{:>4} {:<18} {}\n", r.rank, r.metrics.controller, row(&r.metrics)));
    }
    out
}

pub fn sweep_table(parameter: &str, points: &[SweepPoint]) -> String {
    let mut out = format!("{:<12} {HEADER}\n", parameter);
    for p in points {
        out.push_str(&format!("{:<12} {}\n", p.value.to_string(), row(&p.metrics)));
    }
    out
}
