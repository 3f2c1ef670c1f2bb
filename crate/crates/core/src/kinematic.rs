//! Outer-loop backstepping kinematic control.
//!
//! The controller turns posture tracking errors into body-frame velocity
//! commands. The conventional law feeds the inertial errors back through a
//! proportional gain, so a large initial error produces a velocity jump. The
//! bioinspired law feeds back the outputs `L1..L3` of three shunting channels
//! driven by those same errors instead; since each output is confined to
//! `(-D_i, B_i)`, the feedback part of the command is bounded no matter how
//! large the error is.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ShuntingError};
use crate::shunting::{ShuntingBank, ShuntingParams};
use crate::vehicle::{angle_diff, inertial_to_body, wrap_angle, BodyAccel, BodyVelocity, Pose, PoseRate};

/// Posture error `reference - actual` expressed in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingErrorInertial {
    pub e_x: f64,
    pub e_y: f64,
    /// Wrap-normalized heading error.
    pub e_psi: f64,
}

impl TrackingErrorInertial {
    pub fn between(pose: &Pose, pose_r: &Pose) -> Self {
        Self {
            e_x: pose_r.x - pose.x,
            e_y: pose_r.y - pose.y,
            e_psi: angle_diff(pose_r.psi, pose.psi),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.e_x, self.e_y, self.e_psi]
    }
}

/// Posture error rotated into the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingErrorBody {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicGains {
    pub k_a: f64,
    pub k_b: f64,
}

impl Default for KinematicGains {
    fn default() -> Self {
        Self { k_a: 2.0, k_b: 1.0 }
    }
}

impl KinematicGains {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.k_a.is_finite() && self.k_a > 0.0) {
            return Err(ConfigError::invalid("kinematic.k_a", "must be finite and > 0"));
        }
        if !(self.k_b.is_finite() && self.k_b > 0.0) {
            return Err(ConfigError::invalid("kinematic.k_b", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Body-frame velocity command `(u_c, v_c, r_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub u_c: f64,
    pub v_c: f64,
    pub r_c: f64,
}

impl VelocityCommand {
    pub fn to_array(self) -> [f64; 3] {
        [self.u_c, self.v_c, self.r_c]
    }

    pub fn as_velocity(self) -> BodyVelocity {
        BodyVelocity::new(self.u_c, self.v_c, self.r_c)
    }
}

/// Reference posture and its body-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceState {
    pub pose: Pose,
    pub vel: BodyVelocity,
    /// Inertial rate of the reference posture.
    pub rate: PoseRate,
    pub accel: Option<BodyAccel>,
}

/// How the reference velocity enters the command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedforward {
    /// `u_r cos(e_psi) - v_r sin(e_psi)` in surge; zero error is an
    /// equilibrium of the closed loop.
    #[default]
    Consistent,
    /// `u_r sin(e_psi) - v_r cos(e_psi)` in surge, with sin/cos swapped
    /// relative to the consistent form. Kept for fidelity experiments only;
    /// it does not reproduce the reference velocity at zero error.
    AsPrinted,
}

/// Body-frame reference velocity from the inertial reference rate.
pub fn reference_body_velocity(rate_r: PoseRate, psi_r: f64) -> BodyVelocity {
    inertial_to_body(psi_r, rate_r)
}

/// Rotates the inertial posture error into the body frame of `pose`.
pub fn body_error(pose: &Pose, pose_r: &Pose) -> TrackingErrorBody {
    let err = TrackingErrorInertial::between(pose, pose_r);
    let (s, c) = pose.psi.sin_cos();
    TrackingErrorBody {
        e1: c * err.e_x + s * err.e_y,
        e2: -s * err.e_x + c * err.e_y,
        e3: wrap_angle(err.e_psi),
    }
}

fn feedforward(mode: Feedforward, vel_r: BodyVelocity, e_psi: f64) -> [f64; 3] {
    let (s, c) = e_psi.sin_cos();
    let surge = match mode {
        Feedforward::Consistent => vel_r.u * c - vel_r.v * s,
        Feedforward::AsPrinted => vel_r.u * s - vel_r.v * c,
    };
    [surge, vel_r.u * s + vel_r.v * c, vel_r.r]
}

/// Error-feedback part of the command: `k_a R(-psi) (p1, p2)` and `k_b p3`.
pub fn error_feedback(p: [f64; 3], psi: f64, gains: &KinematicGains) -> [f64; 3] {
    let (s, c) = psi.sin_cos();
    [
        gains.k_a * (p[0] * c + p[1] * s),
        gains.k_a * (-p[0] * s + p[1] * c),
        gains.k_b * p[2],
    ]
}

fn compose(feedback: [f64; 3], ff: [f64; 3]) -> VelocityCommand {
    VelocityCommand {
        u_c: feedback[0] + ff[0],
        v_c: feedback[1] + ff[1],
        r_c: feedback[2] + ff[2],
    }
}

/// Conventional backstepping law with the consistent feedforward.
pub fn backstepping_conventional(
    err: &TrackingErrorInertial,
    reference: &ReferenceState,
    psi: f64,
    gains: &KinematicGains,
) -> VelocityCommand {
    backstepping_conventional_with(err, reference, psi, gains, Feedforward::Consistent)
}

pub fn backstepping_conventional_with(
    err: &TrackingErrorInertial,
    reference: &ReferenceState,
    psi: f64,
    gains: &KinematicGains,
    mode: Feedforward,
) -> VelocityCommand {
    compose(
        error_feedback(err.to_array(), psi, gains),
        feedforward(mode, reference.vel, err.e_psi),
    )
}

/// Bioinspired backstepping law. `activity` holds the shunting outputs
/// `(L1, L2, L3)`; the feedforward still uses the raw heading error.
pub fn backstepping_bioinspired(
    activity: [f64; 3],
    e_psi: f64,
    reference: &ReferenceState,
    psi: f64,
    gains: &KinematicGains,
) -> VelocityCommand {
    backstepping_bioinspired_with(activity, e_psi, reference, psi, gains, Feedforward::Consistent)
}

pub fn backstepping_bioinspired_with(
    activity: [f64; 3],
    e_psi: f64,
    reference: &ReferenceState,
    psi: f64,
    gains: &KinematicGains,
    mode: Feedforward,
) -> VelocityCommand {
    compose(
        error_feedback(activity, psi, gains),
        feedforward(mode, reference.vel, e_psi),
    )
}

/// Strict bounds on the bioinspired error feedback:
/// `|surge/sway| < k_a (B1 + B2)` and `|yaw| < k_b B3`.
pub fn feedback_bounds(gains: &KinematicGains, channels: &[ShuntingParams; 3]) -> [f64; 3] {
    let planar = gains.k_a * (channels[0].b.max(channels[0].d) + channels[1].b.max(channels[1].d));
    [planar, planar, gains.k_b * channels[2].b.max(channels[2].d)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicLaw {
    Conventional,
    #[default]
    Bioinspired,
}

/// Output of one kinematic tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicOutput {
    pub command: VelocityCommand,
    pub error: TrackingErrorInertial,
    /// Error-feedback part of the command.
    pub feedback: [f64; 3],
    /// Shunting outputs used for this command (zero for the conventional law).
    pub activity: [f64; 3],
}

/// Stateful outer-loop controller. The bioinspired variant owns three
/// shunting channels fed by `(e_x, e_y, e_psi)`.
#[derive(Debug, Clone)]
pub struct KinematicController {
    pub law: KinematicLaw,
    pub gains: KinematicGains,
    pub feedforward: Feedforward,
    bank: ShuntingBank<3>,
}

impl KinematicController {
    pub fn new(
        law: KinematicLaw,
        gains: KinematicGains,
        channels: [ShuntingParams; 3],
        feedforward: Feedforward,
    ) -> Self {
        Self {
            law,
            gains,
            feedforward,
            bank: ShuntingBank::new(channels),
        }
    }

    pub fn channels(&self) -> &[ShuntingParams; 3] {
        &self.bank.params
    }

    /// Computes the command for the current tick, then advances the shunting
    /// channels over `dt` with the current errors held constant.
    pub fn update(
        &mut self,
        pose: &Pose,
        reference: &ReferenceState,
        dt: f64,
    ) -> Result<KinematicOutput, ShuntingError> {
        let error = TrackingErrorInertial::between(pose, &reference.pose);
        let out = match self.law {
            KinematicLaw::Conventional => {
                let feedback = error_feedback(error.to_array(), pose.psi, &self.gains);
                KinematicOutput {
                    command: compose(feedback, feedforward(self.feedforward, reference.vel, error.e_psi)),
                    error,
                    feedback,
                    activity: [0.0; 3],
                }
            }
            KinematicLaw::Bioinspired => {
                let activity = self.bank.outputs();
                let feedback = error_feedback(activity, pose.psi, &self.gains);
                self.bank.step(error.to_array(), dt)?;
                KinematicOutput {
                    command: compose(feedback, feedforward(self.feedforward, reference.vel, error.e_psi)),
                    error,
                    feedback,
                    activity,
                }
            }
        };
        Ok(out)
    }
}
