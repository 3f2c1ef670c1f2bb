//! Inner-loop sliding-mode dynamic control.
//!
//! With the velocity error `e = V_c - V_a` the sliding variable is
//!
//! ```text
//! S = e' + 2 Gamma e + Gamma^2 * integral(e)
//! ```
//!
//! and the torque is the model-based equivalent control plus a reaching
//! term: `k sgn(S)` (sign law), a clamped linear term (saturation law), or
//! the output `L4` of a shunting channel driven by `S` (bioinspired law).
//! The equivalent control replaces the unavailable second derivative of the
//! error by `k_s e'`.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ShuntingError};
use crate::shunting::{ShuntingBank, ShuntingParams};
use crate::vehicle::{BodyAccel, BodyVelocity, Torque, VehicleParams};

/// Per-axis sliding variable.
pub fn sliding_surface(e: [f64; 3], e_dot: [f64; 3], e_int: [f64; 3], gamma: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| e_dot[i] + 2.0 * gamma * e[i] + gamma * gamma * e_int[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicGains {
    pub gamma: f64,
    /// Sign-law gain per axis.
    pub k: [f64; 3],
    /// Acceleration-feedback coefficient used in the equivalent control.
    pub k_s: f64,
    /// Slope of the saturation law.
    pub sat_slope: f64,
    pub sat_upper: [f64; 3],
    pub sat_lower: [f64; 3],
    /// Shunting channels of the bioinspired law, one per axis.
    pub shunting: [ShuntingParams; 3],
}

impl Default for DynamicGains {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            k: [2.0, 2.0, 0.2],
            k_s: 1.0,
            sat_slope: 3.0,
            sat_upper: [1.0, 1.0, 0.03],
            sat_lower: [1.0, 1.0, 0.03],
            shunting: [ShuntingParams::symmetric(3.0, 1.0); 3],
        }
    }
}

impl DynamicGains {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(ConfigError::invalid("dynamic.gamma", "must be finite and > 0"));
        }
        let nonneg = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, "must be finite and >= 0"))
            }
        };
        for (i, &k) in self.k.iter().enumerate() {
            nonneg(&format!("dynamic.k[{i}]"), k)?;
        }
        nonneg("dynamic.k_s", self.k_s)?;
        nonneg("dynamic.sat_slope", self.sat_slope)?;
        for i in 0..3 {
            for (key, v) in [("sat_upper", self.sat_upper[i]), ("sat_lower", self.sat_lower[i])] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError::invalid(format!("dynamic.{key}[{i}]"), "must be finite and > 0"));
                }
            }
            self.shunting[i].validate(&format!("dynamic.shunting[{i}]"))?;
        }
        Ok(())
    }
}

/// Model-based equivalent control
/// `M (V_c' + k_s e' / (2 Gamma) + Gamma e / 2) + D(V_a) V_a`.
pub fn tau_equivalent(
    params: &VehicleParams,
    vel: BodyVelocity,
    command_rate: BodyAccel,
    e: [f64; 3],
    e_dot: [f64; 3],
    gains: &DynamicGains,
) -> Torque {
    let m = params.mass();
    let damping = params.damping(vel);
    let vc_dot = command_rate.to_array();
    let g = gains.gamma;
    Torque::from_array([0, 1, 2].map(|i| {
        m[i] * (vc_dot[i] + gains.k_s * e_dot[i] / (2.0 * g) + 0.5 * g * e[i]) + damping[i]
    }))
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Reaching term of the sign law.
pub fn sign_term(s: [f64; 3], k: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| k[i] * sgn(s[i]))
}

/// Reaching term of the saturation law: `clamp(k_s S, -D4, B4)`.
pub fn saturation_term(s: [f64; 3], gains: &DynamicGains) -> [f64; 3] {
    [0, 1, 2].map(|i| (gains.sat_slope * s[i]).clamp(-gains.sat_lower[i], gains.sat_upper[i]))
}

fn add(tau: Torque, term: [f64; 3]) -> Torque {
    let t = tau.to_array();
    Torque::from_array([0, 1, 2].map(|i| t[i] + term[i]))
}

pub fn smc_sign(tau_eq: Torque, s: [f64; 3], k: [f64; 3]) -> Torque {
    add(tau_eq, sign_term(s, k))
}

pub fn smc_saturation(tau_eq: Torque, s: [f64; 3], gains: &DynamicGains) -> Torque {
    add(tau_eq, saturation_term(s, gains))
}

/// Advances the per-axis shunting channels with input `S` and adds the
/// resulting activity to the equivalent control.
pub fn smc_bioinspired(
    tau_eq: Torque,
    bank: &mut ShuntingBank<3>,
    s: [f64; 3],
    dt: f64,
) -> Result<Torque, ShuntingError> {
    let l4 = bank.step(s, dt)?;
    Ok(add(tau_eq, l4))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachingLaw {
    Sign,
    Saturation,
    #[default]
    Bioinspired,
}

/// Error signals the controller keeps between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlidingState {
    pub e: [f64; 3],
    pub e_dot: [f64; 3],
    pub e_int: [f64; 3],
    pub s: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynamicOutput {
    pub torque: Torque,
    pub sliding: SlidingState,
    /// Reaching term added on top of the equivalent control.
    pub reaching: [f64; 3],
    pub command_rate: BodyAccel,
}

/// Stateful inner-loop controller.
///
/// The command rate and the error rate are backward differences at the
/// control rate (zero on the first tick); the error integral accumulates
/// with the trapezoidal rule.
#[derive(Debug, Clone)]
pub struct DynamicController {
    pub law: ReachingLaw,
    pub gains: DynamicGains,
    model: VehicleParams,
    bank: ShuntingBank<3>,
    prev_command: Option<BodyVelocity>,
    state: SlidingState,
}

impl DynamicController {
    /// `model` is the plant the equivalent control believes in.
    pub fn new(law: ReachingLaw, gains: DynamicGains, model: VehicleParams) -> Self {
        Self {
            law,
            gains,
            model,
            bank: ShuntingBank::new(gains.shunting),
            prev_command: None,
            state: SlidingState::default(),
        }
    }

    pub fn shunting_outputs(&self) -> [f64; 3] {
        self.bank.outputs()
    }

    pub fn update(
        &mut self,
        command: BodyVelocity,
        measured: BodyVelocity,
        dt: f64,
    ) -> Result<DynamicOutput, ShuntingError> {
        let vc = command.to_array();
        let va = measured.to_array();
        let e = [0, 1, 2].map(|i| vc[i] - va[i]);

        let (command_rate, e_dot, e_int) = match self.prev_command {
            None => (BodyAccel::ZERO, [0.0; 3], [0.0; 3]),
            Some(prev) => {
                let p = prev.to_array();
                let prev_e = self.state.e;
                (
                    BodyAccel::from_array([0, 1, 2].map(|i| (vc[i] - p[i]) / dt)),
                    [0, 1, 2].map(|i| (e[i] - prev_e[i]) / dt),
                    [0, 1, 2].map(|i| self.state.e_int[i] + 0.5 * dt * (e[i] + prev_e[i])),
                )
            }
        };
        let s = sliding_surface(e, e_dot, e_int, self.gains.gamma);
        let tau_eq = tau_equivalent(&self.model, measured, command_rate, e, e_dot, &self.gains);
        let reaching = match self.law {
            ReachingLaw::Sign => sign_term(s, self.gains.k),
            ReachingLaw::Saturation => saturation_term(s, &self.gains),
            ReachingLaw::Bioinspired => self.bank.step(s, dt)?,
        };
        let torque = add(tau_eq, reaching);

        self.prev_command = Some(command);
        self.state = SlidingState { e, e_dot, e_int, s };
        Ok(DynamicOutput {
            torque,
            sliding: self.state,
            reaching,
            command_rate,
        })
    }
}
