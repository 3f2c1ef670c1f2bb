//! Horizontal-plane vehicle plant.
//!
//! The vehicle is described by its inertial posture `(x, y, psi)` and its
//! body-fixed velocity `(u, v, r)`. Kinematics rotate the body velocity into
//! the inertial frame; dynamics are the decoupled surge/sway/yaw equations
//!
//! ```text
//! tau_x = m_u * u' + d_u * u + q_u * u|u|
//! tau_y = m_v * v' + d_v * v + q_v * v|v|
//! tau_n = m_r * r' + d_r * r + q_r * r|r|
//! ```
//!
//! There is no restoring (gravity/buoyancy) term: the craft is taken as
//! neutrally buoyant, and no Coriolis cross-coupling appears in the reduced
//! model.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    // rem_euclid can land exactly on TAU for tiny negative inputs
    if a <= -PI {
        a += TAU;
    }
    a
}

/// Signed shortest rotation taking `from` onto `to`, in `(-pi, pi]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle(to - from)
}

/// Inertial posture. The heading is kept normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: wrap_angle(psi),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.psi]
    }

    /// Distance between the planar positions of two poses.
    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Body-fixed velocity: surge `u`, sway `v` (m/s) and yaw rate `r` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub const ZERO: Self = Self {
        u: 0.0,
        v: 0.0,
        r: 0.0,
    };

    pub fn new(u: f64, v: f64, r: f64) -> Self {
        Self { u, v, r }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.r]
    }

    pub fn from_array([u, v, r]: [f64; 3]) -> Self {
        Self { u, v, r }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.r.is_finite()
    }
}

/// Time derivative of a [`Pose`] in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseRate {
    pub x_dot: f64,
    pub y_dot: f64,
    pub psi_dot: f64,
}

impl PoseRate {
    pub fn new(x_dot: f64, y_dot: f64, psi_dot: f64) -> Self {
        Self {
            x_dot,
            y_dot,
            psi_dot,
        }
    }
}

/// Body-fixed acceleration `(u', v', r')`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyAccel {
    pub u_dot: f64,
    pub v_dot: f64,
    pub r_dot: f64,
}

impl BodyAccel {
    pub const ZERO: Self = Self {
        u_dot: 0.0,
        v_dot: 0.0,
        r_dot: 0.0,
    };

    pub fn to_array(self) -> [f64; 3] {
        [self.u_dot, self.v_dot, self.r_dot]
    }

    pub fn from_array([u_dot, v_dot, r_dot]: [f64; 3]) -> Self {
        Self {
            u_dot,
            v_dot,
            r_dot,
        }
    }
}

/// Surge force, sway force (N) and yaw moment (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Torque {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_n: f64,
}

impl Torque {
    pub const ZERO: Self = Self {
        tau_x: 0.0,
        tau_y: 0.0,
        tau_n: 0.0,
    };

    pub fn new(tau_x: f64, tau_y: f64, tau_n: f64) -> Self {
        Self {
            tau_x,
            tau_y,
            tau_n,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.tau_x, self.tau_y, self.tau_n]
    }

    pub fn from_array([tau_x, tau_y, tau_n]: [f64; 3]) -> Self {
        Self {
            tau_x,
            tau_y,
            tau_n,
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::from_array(self.to_array().map(|c| c * k))
    }
}

/// Hydrodynamic coefficients of the decoupled plant.
///
/// `m_*` are rigid-body plus added mass (inertia for yaw), `d_*` the linear
/// drag and `q_*` the quadratic drag coefficients. The default is the
/// parameter set used for every scenario preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub m_u: f64,
    pub m_v: f64,
    pub m_r: f64,
    pub d_u: f64,
    pub d_v: f64,
    pub d_r: f64,
    pub q_u: f64,
    pub q_v: f64,
    pub q_r: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            m_u: 54.35,
            m_v: 54.35,
            m_r: 1.93,
            d_u: 17.51,
            d_v: 17.51,
            d_r: 2.4,
            q_u: 10.0,
            q_v: 10.0,
            q_r: 2.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("vehicle.m_u", self.m_u),
            ("vehicle.m_v", self.m_v),
            ("vehicle.m_r", self.m_r),
            ("vehicle.d_u", self.d_u),
            ("vehicle.d_v", self.d_v),
            ("vehicle.d_r", self.d_r),
            ("vehicle.q_u", self.q_u),
            ("vehicle.q_v", self.q_v),
            ("vehicle.q_r", self.q_r),
        ];
        for (key, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn mass(&self) -> [f64; 3] {
        [self.m_u, self.m_v, self.m_r]
    }

    pub fn linear_drag(&self) -> [f64; 3] {
        [self.d_u, self.d_v, self.d_r]
    }

    pub fn quadratic_drag(&self) -> [f64; 3] {
        [self.q_u, self.q_v, self.q_r]
    }

    /// Per-axis hydrodynamic damping force `d*w + q*w|w|`.
    pub fn damping(&self, vel: BodyVelocity) -> [f64; 3] {
        let d = self.linear_drag();
        let q = self.quadratic_drag();
        let w = vel.to_array();
        [0, 1, 2].map(|i| d[i] * w[i] + q[i] * w[i] * w[i].abs())
    }

    /// Multiplies every coefficient by `factor`. Used for model-mismatch runs.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m_u: self.m_u * factor,
            m_v: self.m_v * factor,
            m_r: self.m_r * factor,
            d_u: self.d_u * factor,
            d_v: self.d_v * factor,
            d_r: self.d_r * factor,
            q_u: self.q_u * factor,
            q_v: self.q_v * factor,
            q_r: self.q_r * factor,
        }
    }

    /// Diagonal of `d(accel)/d(vel)`, i.e. `-(d + 2 q |w|) / m` per axis.
    pub fn acceleration_jacobian(&self, vel: BodyVelocity) -> [f64; 3] {
        let m = self.mass();
        let d = self.linear_drag();
        let q = self.quadratic_drag();
        let w = vel.to_array();
        [0, 1, 2].map(|i| -(d[i] + 2.0 * q[i] * w[i].abs()) / m[i])
    }
}

/// Rotates a body-fixed velocity into the inertial frame.
pub fn body_to_inertial(psi: f64, vel: BodyVelocity) -> PoseRate {
    let (s, c) = psi.sin_cos();
    PoseRate {
        x_dot: vel.u * c - vel.v * s,
        y_dot: vel.u * s + vel.v * c,
        psi_dot: vel.r,
    }
}

/// Inverse of [`body_to_inertial`].
pub fn inertial_to_body(psi: f64, rate: PoseRate) -> BodyVelocity {
    let (s, c) = psi.sin_cos();
    BodyVelocity {
        u: rate.x_dot * c + rate.y_dot * s,
        v: -rate.x_dot * s + rate.y_dot * c,
        r: rate.psi_dot,
    }
}

/// Body acceleration produced by `tau` at velocity `vel`.
pub fn acceleration(params: &VehicleParams, vel: BodyVelocity, tau: Torque) -> BodyAccel {
    let m = params.mass();
    let damping = params.damping(vel);
    let t = tau.to_array();
    BodyAccel::from_array([0, 1, 2].map(|i| (t[i] - damping[i]) / m[i]))
}

/// Full plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose,
    pub vel: BodyVelocity,
}

impl VehicleState {
    pub fn new(pose: Pose, vel: BodyVelocity) -> Self {
        Self { pose, vel }
    }

    fn to_vector(self) -> [f64; 6] {
        let [x, y, psi] = self.pose.to_array();
        let [u, v, r] = self.vel.to_array();
        [x, y, psi, u, v, r]
    }

    fn from_vector(s: [f64; 6]) -> Self {
        Self {
            pose: Pose::new(s[0], s[1], s[2]),
            vel: BodyVelocity::new(s[3], s[4], s[5]),
        }
    }

    /// Kinetic-energy-like storage `0.5 * (m_u u^2 + m_v v^2 + m_r r^2)`.
    pub fn kinetic_energy(&self, params: &VehicleParams) -> f64 {
        let m = params.mass();
        let w = self.vel.to_array();
        0.5 * (0..3).map(|i| m[i] * w[i] * w[i]).sum::<f64>()
    }
}

fn state_derivative(params: &VehicleParams, s: [f64; 6], tau: Torque) -> [f64; 6] {
    let vel = BodyVelocity::new(s[3], s[4], s[5]);
    let rate = body_to_inertial(s[2], vel);
    let acc = acceleration(params, vel, tau);
    [
        rate.x_dot,
        rate.y_dot,
        rate.psi_dot,
        acc.u_dot,
        acc.v_dot,
        acc.r_dot,
    ]
}

/// Advances the plant by `dt` with a classic fourth-order Runge–Kutta step,
/// holding `tau` constant over the step.
pub fn rk4_step(params: &VehicleParams, state: VehicleState, tau: Torque, dt: f64) -> VehicleState {
    let y = state.to_vector();
    let add = |a: [f64; 6], k: [f64; 6], h: f64| -> [f64; 6] {
        let mut out = a;
        for i in 0..6 {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = state_derivative(params, y, tau);
    let k2 = state_derivative(params, add(y, k1, dt / 2.0), tau);
    let k3 = state_derivative(params, add(y, k2, dt / 2.0), tau);
    let k4 = state_derivative(params, add(y, k3, dt), tau);
    let mut next = y;
    for i in 0..6 {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    VehicleState::from_vector(next)
}
