//! Shunting neural dynamics.
//!
//! Each channel holds a neural activity `L` driven by a scalar input `e`:
//!
//! ```text
//! L' = -A L + (B - L) max(e, 0) - (D + L) max(-e, 0)
//! ```
//!
//! `A` is the passive decay rate, `B` the upper and `D` the lower-bound
//! magnitude. For any input history starting inside `(-D, B)` the activity
//! stays there, and for small inputs the channel behaves like a first-order
//! low-pass filter with bandwidth `A`.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ShuntingError};

/// Largest `lambda * dt` for which one RK4 step of `L' = -lambda (L - L*)`
/// is a contraction towards `L*`. The RK4 stability polynomial
/// `1 + z + z^2/2 + z^3/6 + z^4/24` is positive for every real `z` and stays
/// below one for `z` in `(-2.785..., 0)`; we keep a margin.
pub const RK4_MAX_RATE_STEP: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntingParams {
    /// Passive decay rate, 1/s.
    pub a: f64,
    /// Upper bound.
    pub b: f64,
    /// Lower-bound magnitude.
    pub d: f64,
}

impl ShuntingParams {
    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    /// Symmetric channel with `B = D`.
    pub fn symmetric(a: f64, bound: f64) -> Self {
        Self::new(a, bound, bound)
    }

    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        for (name, value) in [("a", self.a), ("b", self.b), ("d", self.d)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::invalid(
                    format!("{key}.{name}"),
                    "must be finite and > 0",
                ));
            }
        }
        Ok(())
    }

    /// Closed-form steady state for a constant input.
    pub fn equilibrium(&self, e: f64) -> f64 {
        if e >= 0.0 {
            self.b * e / (self.a + e)
        } else {
            self.d * e / (self.a - e)
        }
    }

    pub fn contains(&self, activity: f64) -> bool {
        activity > -self.d && activity < self.b
    }
}

/// Neural activity of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShuntingState {
    pub activity: f64,
}

impl ShuntingState {
    pub fn new(activity: f64) -> Self {
        Self { activity }
    }
}

/// Right-hand side of the shunting equation.
pub fn shunting_derivative(params: &ShuntingParams, activity: f64, input: f64) -> f64 {
    let excitatory = input.max(0.0);
    let inhibitory = (-input).max(0.0);
    -params.a * activity + (params.b - activity) * excitatory - (params.d + activity) * inhibitory
}

/// Advances a channel by `dt` with RK4, holding the input constant.
///
/// Fails with [`ShuntingError::StepTooLarge`] when `(A + |e|) dt` leaves the
/// monotone region of the integrator, because past that point the discrete
/// trajectory may overshoot the bounds the continuous model guarantees.
pub fn shunting_step(
    state: ShuntingState,
    params: &ShuntingParams,
    input: f64,
    dt: f64,
) -> Result<ShuntingState, ShuntingError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ShuntingError::InvalidStep("dt must be finite and > 0"));
    }
    if !input.is_finite() {
        return Err(ShuntingError::InvalidStep("input must be finite"));
    }
    let rate = params.a + input.abs();
    if rate * dt > RK4_MAX_RATE_STEP {
        return Err(ShuntingError::StepTooLarge {
            dt,
            rate,
            limit: RK4_MAX_RATE_STEP,
        });
    }
    let l = state.activity;
    if !params.contains(l) {
        return Err(ShuntingError::OutOfBounds {
            value: l,
            lower: -params.d,
            upper: params.b,
        });
    }
    let f = |x: f64| shunting_derivative(params, x, input);
    let k1 = f(l);
    let k2 = f(l + 0.5 * dt * k1);
    let k3 = f(l + 0.5 * dt * k2);
    let k4 = f(l + dt * k3);
    let next = l + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !params.contains(next) {
        return Err(ShuntingError::OutOfBounds {
            value: next,
            lower: -params.d,
            upper: params.b,
        });
    }
    Ok(ShuntingState::new(next))
}

/// A bank of independent channels advanced together, one per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuntingBank<const N: usize> {
    pub params: [ShuntingParams; N],
    pub states: [ShuntingState; N],
}

impl<const N: usize> ShuntingBank<N> {
    /// All activities start at zero.
    pub fn new(params: [ShuntingParams; N]) -> Self {
        Self {
            params,
            states: [ShuntingState::default(); N],
        }
    }

    pub fn outputs(&self) -> [f64; N] {
        self.states.map(|s| s.activity)
    }

    pub fn step(&mut self, inputs: [f64; N], dt: f64) -> Result<[f64; N], ShuntingError> {
        let mut next = self.states;
        for i in 0..N {
            next[i] = shunting_step(self.states[i], &self.params[i], inputs[i], dt)?;
        }
        self.states = next;
        Ok(self.outputs())
    }
}
