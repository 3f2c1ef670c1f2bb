use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::kinematic::{reference_body_velocity, ReferenceState};
use crate::vehicle::{BodyAccel, Pose, PoseRate};

/// Reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// `x = x0 + speed_x t`, `y = y0 + speed_y t` at a fixed heading.
    StraightLine {
        x0: f64,
        y0: f64,
        speed_x: f64,
        speed_y: f64,
        heading: f64,
    },
    /// `x = cx + R cos(w t)`, `y = cy + R sin(w t)`, heading `w t`.
    Circle {
        radius: f64,
        center: [f64; 2],
        angular_rate: f64,
    },
    /// Rows of `[t, x, y, psi]` with strictly increasing `t`, linearly
    /// interpolated. Rates are the slopes of the active segment.
    Custom { table: Vec<[f64; 4]> },
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Trajectory::StraightLine {
                x0,
                y0,
                speed_x,
                speed_y,
                heading,
            } => {
                if ![x0, y0, speed_x, speed_y, heading].iter().all(|v| v.is_finite()) {
                    return Err(ConfigError::invalid("scenario.trajectory", "values must be finite"));
                }
            }
            Trajectory::Circle {
                radius,
                center,
                angular_rate,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(ConfigError::invalid("scenario.trajectory.radius", "must be finite and > 0"));
                }
                if !(center.iter().all(|c| c.is_finite()) && angular_rate.is_finite()) {
                    return Err(ConfigError::invalid("scenario.trajectory", "values must be finite"));
                }
            }
            Trajectory::Custom { table } => {
                if table.len() < 2 {
                    return Err(ConfigError::invalid("scenario.trajectory.table", "needs at least two rows"));
                }
                if table.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(ConfigError::invalid("scenario.trajectory.table", "values must be finite"));
                }
                if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(ConfigError::invalid("scenario.trajectory.table", "time must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// Time span covered by the trajectory, if bounded.
    pub fn span(&self) -> Option<(f64, f64)> {
        match self {
            Trajectory::Custom { table } => Some((table[0][0], table[table.len() - 1][0])),
            _ => None,
        }
    }
}

/// Body acceleration of the reference from its inertial kinematics.
fn body_accel(rate: PoseRate, acc: [f64; 3], vel: crate::vehicle::BodyVelocity, psi: f64) -> BodyAccel {
    let (s, c) = psi.sin_cos();
    BodyAccel {
        u_dot: acc[0] * c + acc[1] * s + rate.psi_dot * vel.v,
        v_dot: -acc[0] * s + acc[1] * c - rate.psi_dot * vel.u,
        r_dot: acc[2],
    }
}

/// Reference posture, inertial rate and body velocity at time `t`.
pub fn reference_at(traj: &Trajectory, t: f64) -> Result<ReferenceState, SimError> {
    let (pose, rate, acc) = match traj {
        Trajectory::StraightLine {
            x0,
            y0,
            speed_x,
            speed_y,
            heading,
        } => (
            Pose::new(x0 + speed_x * t, y0 + speed_y * t, *heading),
            PoseRate::new(*speed_x, *speed_y, 0.0),
            Some([0.0; 3]),
        ),
        Trajectory::Circle {
            radius,
            center,
            angular_rate,
        } => {
            let w = *angular_rate;
            let (s, c) = (w * t).sin_cos();
            (
                Pose::new(center[0] + radius * c, center[1] + radius * s, w * t),
                PoseRate::new(-radius * w * s, radius * w * c, w),
                Some([-radius * w * w * c, -radius * w * w * s, 0.0]),
            )
        }
        Trajectory::Custom { table } => {
            let (start, end) = (table[0][0], table[table.len() - 1][0]);
            if !(t >= start && t <= end) {
                return Err(SimError::ReferenceRange { t, start, end });
            }
            let idx = table.partition_point(|row| row[0] <= t).clamp(1, table.len() - 1);
            let (a, b) = (table[idx - 1], table[idx]);
            let h = b[0] - a[0];
            let frac = (t - a[0]) / h;
            let dpsi = crate::vehicle::angle_diff(b[3], a[3]);
            (
                Pose::new(a[1] + frac * (b[1] - a[1]), a[2] + frac * (b[2] - a[2]), a[3] + frac * dpsi),
                PoseRate::new((b[1] - a[1]) / h, (b[2] - a[2]) / h, dpsi / h),
                None,
            )
        }
    };
    let vel = reference_body_velocity(rate, pose.psi);
    Ok(ReferenceState {
        pose,
        vel,
        rate,
        accel: acc.map(|a| body_accel(rate, a, vel, pose.psi)),
    })
}
