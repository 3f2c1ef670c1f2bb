//! Post-processing of traces: tracking error, command jumps, chattering and
//! Lyapunov monotonicity.
//!
//! Chattering is measured as total variation per unit time,
//! `sum |x[k+1] - x[k]| / T`. It is zero for a constant signal, equal to the
//! net change rate for a monotone one, and grows with every sign reversal.

use serde::{Deserialize, Serialize};

use crate::kinematic::{KinematicGains, TrackingErrorInertial};
use crate::shunting::ShuntingParams;
use crate::sim::SimTrace;
use crate::vehicle::angle_diff;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Position error below which the vehicle counts as settled, m.
    pub settle_threshold: f64,
    /// Largest per-step increase of a Lyapunov function not counted as a
    /// violation.
    pub lyapunov_tolerance: f64,
    /// Leading window excluded from the Lyapunov check, s.
    pub transient: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            settle_threshold: 0.1,
            lyapunov_tolerance: 1e-6,
            transient: 2.0,
        }
    }
}

/// Total variation of `series` divided by its duration `(n - 1) dt`.
pub fn chattering_index(series: &[f64], dt: f64) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let tv: f64 = series.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    tv / ((series.len() - 1) as f64 * dt)
}

/// [`chattering_index`] applied to each axis of a three-axis series.
pub fn chattering_index_axes(series: &[[f64; 3]], dt: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| {
        let axis: Vec<f64> = series.iter().map(|s| s[i]).collect();
        chattering_index(&axis, dt)
    })
}

/// Largest one-step change of any command component, counting the step from
/// `start` (the command in force before the first sample) into the series.
pub fn peak_command_jump(series: &[[f64; 3]], start: [f64; 3]) -> f64 {
    let mut prev = start;
    let mut peak: f64 = 0.0;
    for cmd in series {
        for i in 0..3 {
            peak = peak.max((cmd[i] - prev[i]).abs());
        }
        prev = *cmd;
    }
    peak
}

/// Outer-loop Lyapunov function
/// `0.5 |e|^2 + k_a L1^2 / (2 B1) + k_a L2^2 / (2 B2) + k_b L3^2 / (2 B3)`.
pub fn lyapunov_kinematic(
    err: &TrackingErrorInertial,
    activity: [f64; 3],
    gains: &KinematicGains,
    channels: &[ShuntingParams; 3],
) -> f64 {
    let e = err.to_array();
    let k = [gains.k_a, gains.k_a, gains.k_b];
    (0..3)
        .map(|i| 0.5 * e[i] * e[i] + k[i] * activity[i] * activity[i] / (2.0 * channels[i].b))
        .sum()
}

/// Inner-loop Lyapunov function `0.5 S^T S + L4^T L4 / (2 B4)`.
pub fn lyapunov_dynamic(s: [f64; 3], activity: [f64; 3], channels: &[ShuntingParams; 3]) -> f64 {
    (0..3)
        .map(|i| 0.5 * s[i] * s[i] + activity[i] * activity[i] / (2.0 * channels[i].b))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub v_p: Vec<f64>,
    pub v_z: Vec<f64>,
    pub v_p_violations: usize,
    pub v_z_violations: usize,
}

fn count_violations(series: &[f64], times: &[f64], cfg: &MetricsConfig) -> usize {
    series
        .windows(2)
        .zip(&times[1..])
        .filter(|(w, &t)| t > cfg.transient && w[1] - w[0] > cfg.lyapunov_tolerance)
        .count()
}

/// Re-evaluates both Lyapunov functions from the recorded errors, sliding
/// values and shunting activities, and counts steps after the transient
/// window whose increase exceeds the tolerance.
pub fn lyapunov_series(trace: &SimTrace, cfg: &MetricsConfig) -> LyapunovSeries {
    let kin = &trace.config.kinematic;
    let gains = kin.gains();
    let v_p: Vec<f64> = trace
        .rows
        .iter()
        .map(|row| {
            let err = TrackingErrorInertial::between(&row.estimated.pose, &row.reference.pose);
            lyapunov_kinematic(&err, row.kin_activity, &gains, &kin.shunting)
        })
        .collect();
    let v_z: Vec<f64> = trace
        .rows
        .iter()
        .map(|row| lyapunov_dynamic(row.sliding, row.smc_activity, &trace.config.dynamic.shunting))
        .collect();
    let times: Vec<f64> = trace.rows.iter().map(|r| r.t).collect();
    LyapunovSeries {
        v_p_violations: count_violations(&v_p, &times, cfg),
        v_z_violations: count_violations(&v_z, &times, cfg),
        v_p,
        v_z,
    }
}

/// Summary figures of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub controller: String,
    /// RMS distance between true and reference position, m.
    pub pos_rmse: f64,
    /// RMS wrapped heading error, rad.
    pub heading_rmse: f64,
    /// Largest one-step velocity-command change, m/s or rad/s.
    pub peak_cmd_jump: f64,
    /// Total variation rate of the applied torque per axis, N/s and N·m/s.
    pub chattering_index: [f64; 3],
    /// Total variation rate of the velocity command per axis.
    pub command_chattering: [f64; 3],
    pub lyapunov_violations: LyapunovViolations,
    /// First time after which the position error stays below the settle
    /// threshold; `None` if it never does.
    pub settle_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovViolations {
    pub v_p: usize,
    pub v_z: usize,
}

pub fn position_errors(trace: &SimTrace) -> Vec<f64> {
    trace
        .rows
        .iter()
        .map(|r| r.truth.pose.distance(&r.reference.pose))
        .collect()
}

pub fn settle_time(trace: &SimTrace, threshold: f64) -> Option<f64> {
    let errors = position_errors(trace);
    let last_bad = errors.iter().rposition(|&e| e >= threshold);
    match last_bad {
        None => trace.rows.first().map(|r| r.t),
        Some(i) if i + 1 < trace.rows.len() => Some(trace.rows[i + 1].t),
        Some(_) => None,
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

pub fn run_metrics(trace: &SimTrace, cfg: &MetricsConfig) -> RunMetrics {
    let dt = trace.dt();
    let commands: Vec<[f64; 3]> = trace.rows.iter().map(|r| r.command.to_array()).collect();
    let torques: Vec<[f64; 3]> = trace.rows.iter().map(|r| r.applied_torque.to_array()).collect();
    let lyap = lyapunov_series(trace, cfg);
    RunMetrics {
        controller: trace.config.scenario.controller.to_string(),
        pos_rmse: rms(position_errors(trace).into_iter()),
        heading_rmse: rms(trace
            .rows
            .iter()
            .map(|r| angle_diff(r.reference.pose.psi, r.truth.pose.psi))),
        peak_cmd_jump: peak_command_jump(&commands, trace.config.scenario.initial_vel.to_array()),
        chattering_index: chattering_index_axes(&torques, dt),
        command_chattering: chattering_index_axes(&commands, dt),
        lyapunov_violations: LyapunovViolations {
            v_p: lyap.v_p_violations,
            v_z: lyap.v_z_violations,
        },
        settle_time: settle_time(trace, cfg.settle_threshold),
    }
}
