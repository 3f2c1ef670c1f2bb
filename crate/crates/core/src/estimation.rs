//! Process/measurement noise and state estimation.
//!
//! Two decoupled filters are used: a Kalman filter on the posture, whose
//! prediction rotates the current velocity estimate with the estimated
//! heading, and an extended Kalman filter on the body velocity, linearized
//! through the analytic Jacobian of the decoupled drag model.
//!
//! Variances are per-step (discrete) quantities at the simulation rate.

use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, EstimationError};
use crate::vehicle::{angle_diff, rk4_step, wrap_angle, BodyVelocity, Pose, Torque, VehicleParams, VehicleState};

const PROCESS_STREAM: u64 = 0;
const MEASUREMENT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-step process variance on `(u, v, r)`.
    pub q_vel: [f64; 3],
    /// Per-step process variance on `(x, y, psi)`.
    pub q_pos: [f64; 3],
    /// Measurement variance as a multiple of the process variance.
    pub r_scale: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q_vel: [1e-3, 1e-3, 1e-4],
            q_pos: [1e-5, 1e-5, 1e-6],
            r_scale: 10.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            q_vel: [0.0; 3],
            q_pos: [0.0; 3],
            r_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for i in 0..3 {
            for (key, v) in [("q_vel", self.q_vel[i]), ("q_pos", self.q_pos[i])] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::invalid(format!("noise.{key}[{i}]"), "must be finite and >= 0"));
                }
            }
        }
        if !(self.r_scale.is_finite() && self.r_scale > 0.0) {
            return Err(ConfigError::invalid("noise.r_scale", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Process variances in state order `(x, y, psi, u, v, r)`.
    pub fn process_variances(&self) -> [f64; 6] {
        let [a, b, c] = self.q_pos;
        let [d, e, f] = self.q_vel;
        [a, b, c, d, e, f]
    }

    pub fn measurement_variances(&self) -> [f64; 6] {
        self.process_variances().map(|q| q * self.r_scale)
    }
}

/// Adds zero-mean Gaussian noise with the given per-channel variances.
pub fn inject_noise<R: rand::Rng + ?Sized>(truth: VehicleState, variances: [f64; 6], rng: &mut R) -> VehicleState {
    let mut draw = |var: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * var.sqrt()
    };
    let pose = Pose::new(
        truth.pose.x + draw(variances[0]),
        truth.pose.y + draw(variances[1]),
        truth.pose.psi + draw(variances[2]),
    );
    let vel = BodyVelocity::new(
        truth.vel.u + draw(variances[3]),
        truth.vel.v + draw(variances[4]),
        truth.vel.r + draw(variances[5]),
    );
    VehicleState::new(pose, vel)
}

/// Seeded noise generator with independent process and measurement streams.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    cfg: NoiseConfig,
    process: ChaCha8Rng,
    measurement: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(cfg: NoiseConfig) -> Self {
        let mut process = ChaCha8Rng::seed_from_u64(cfg.seed);
        process.set_stream(PROCESS_STREAM);
        let mut measurement = ChaCha8Rng::seed_from_u64(cfg.seed);
        measurement.set_stream(MEASUREMENT_STREAM);
        Self {
            cfg,
            process,
            measurement,
        }
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.cfg
    }

    pub fn disturb(&mut self, truth: VehicleState) -> VehicleState {
        inject_noise(truth, self.cfg.process_variances(), &mut self.process)
    }

    pub fn measure(&mut self, truth: VehicleState) -> VehicleState {
        inject_noise(truth, self.cfg.measurement_variances(), &mut self.measurement)
    }
}

fn diag(v: [f64; 3]) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::from(v))
}

fn symmetrize(m: &mut Matrix3<f64>) {
    *m = (*m + m.transpose()) * 0.5;
}

/// Shared measurement update with identity observation. Returns the
/// correction to add to the mean. When both the prior and the measurement
/// are exact (innovation covariance identically zero) the measurement is
/// taken as is.
fn identity_update(
    cov: &mut Matrix3<f64>,
    r: &Matrix3<f64>,
    innovation: Vector3<f64>,
    filter: &'static str,
) -> Result<Vector3<f64>, EstimationError> {
    let s = *cov + r;
    if s.iter().all(|&x| x == 0.0) {
        *cov = Matrix3::zeros();
        return Ok(innovation);
    }
    let chol = s
        .cholesky()
        .ok_or(EstimationError::SingularInnovation { filter })?;
    // K = P S^-1, with S symmetric so K^T = S^-1 P
    let gain = chol.solve(cov).transpose();
    let i_k = Matrix3::identity() - gain;
    *cov = i_k * *cov * i_k.transpose() + gain * r * gain.transpose();
    symmetrize(cov);
    Ok(gain * innovation)
}

/// Kalman filter on the posture `(x, y, psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFilter {
    pub mean: Pose,
    pub cov: Matrix3<f64>,
    q: Matrix3<f64>,
    r: Matrix3<f64>,
}

impl PoseFilter {
    pub fn new(initial: Pose, cfg: &NoiseConfig) -> Self {
        Self {
            mean: initial,
            cov: diag(cfg.q_pos.map(|q| 10.0 * q)),
            q: diag(cfg.q_pos),
            r: diag(cfg.q_pos.map(|q| q * cfg.r_scale)),
        }
    }

    /// Propagates the posture with the velocity estimate `vel` (covariance
    /// `vel_cov`) held over the step.
    pub fn predict(
        &mut self,
        vel: BodyVelocity,
        vel_cov: &Matrix3<f64>,
        tau: Torque,
        params: &VehicleParams,
        dt: f64,
    ) {
        let psi = self.mean.psi;
        let (s, c) = psi.sin_cos();
        let mut f = Matrix3::identity();
        f[(0, 2)] = -dt * (vel.u * s + vel.v * c);
        f[(1, 2)] = dt * (vel.u * c - vel.v * s);
        let g = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0) * dt;

        self.mean = rk4_step(params, VehicleState::new(self.mean, vel), tau, dt).pose;
        self.cov = f * self.cov * f.transpose() + g * vel_cov * g.transpose() + self.q;
        symmetrize(&mut self.cov);
    }

    pub fn update(&mut self, meas: Pose) -> Result<(), EstimationError> {
        let innovation = Vector3::new(
            meas.x - self.mean.x,
            meas.y - self.mean.y,
            angle_diff(meas.psi, self.mean.psi),
        );
        let dx = identity_update(&mut self.cov, &self.r, innovation, "pose")?;
        self.mean = Pose::new(self.mean.x + dx[0], self.mean.y + dx[1], wrap_angle(self.mean.psi + dx[2]));
        Ok(())
    }
}

/// Extended Kalman filter on the body velocity `(u, v, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityFilter {
    pub mean: BodyVelocity,
    pub cov: Matrix3<f64>,
    q: Matrix3<f64>,
    r: Matrix3<f64>,
}

impl VelocityFilter {
    pub fn new(initial: BodyVelocity, cfg: &NoiseConfig) -> Self {
        Self {
            mean: initial,
            cov: diag(cfg.q_vel.map(|q| 10.0 * q)),
            q: diag(cfg.q_vel),
            r: diag(cfg.q_vel.map(|q| q * cfg.r_scale)),
        }
    }

    pub fn predict(&mut self, tau: Torque, params: &VehicleParams, dt: f64) {
        let jac = params.acceleration_jacobian(self.mean);
        let f = diag(jac.map(|j| 1.0 + dt * j));
        self.mean = rk4_step(params, VehicleState::new(Pose::default(), self.mean), tau, dt).vel;
        self.cov = f * self.cov * f.transpose() + self.q;
        symmetrize(&mut self.cov);
    }

    pub fn update(&mut self, meas: BodyVelocity) -> Result<(), EstimationError> {
        let innovation = Vector3::from(meas.to_array()) - Vector3::from(self.mean.to_array());
        let dx = identity_update(&mut self.cov, &self.r, innovation, "velocity")?;
        let m = self.mean.to_array();
        self.mean = BodyVelocity::new(m[0] + dx[0], m[1] + dx[1], m[2] + dx[2]);
        Ok(())
    }
}

/// Posture filter step: predict with the velocity estimate, update with the
/// posture measurement.
pub fn kf_pose_step(
    filter: &mut PoseFilter,
    meas: Pose,
    vel: BodyVelocity,
    vel_cov: &Matrix3<f64>,
    tau: Torque,
    params: &VehicleParams,
    dt: f64,
) -> Result<Pose, EstimationError> {
    filter.predict(vel, vel_cov, tau, params, dt);
    filter.update(meas)?;
    Ok(filter.mean)
}

/// Velocity filter step: predict through the drag model under the applied
/// torque, update with the velocity measurement.
pub fn ekf_velocity_step(
    filter: &mut VelocityFilter,
    meas: BodyVelocity,
    tau: Torque,
    params: &VehicleParams,
    dt: f64,
) -> Result<BodyVelocity, EstimationError> {
    filter.predict(tau, params, dt);
    filter.update(meas)?;
    Ok(filter.mean)
}

/// Mean and covariance of the full six-state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub mean: [f64; 6],
    pub covariance: Matrix6<f64>,
}

/// Both filters, initialized from the first measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimator {
    pub pose: PoseFilter,
    pub velocity: VelocityFilter,
}

impl StateEstimator {
    pub fn new(first: VehicleState, cfg: &NoiseConfig) -> Self {
        Self {
            pose: PoseFilter::new(first.pose, cfg),
            velocity: VelocityFilter::new(first.vel, cfg),
        }
    }

    pub fn estimate(&self) -> VehicleState {
        VehicleState::new(self.pose.mean, self.velocity.mean)
    }

    pub fn step(
        &mut self,
        meas: VehicleState,
        tau: Torque,
        params: &VehicleParams,
        dt: f64,
    ) -> Result<VehicleState, EstimationError> {
        let vel_prior = self.velocity.mean;
        let vel_cov_prior = self.velocity.cov;
        ekf_velocity_step(&mut self.velocity, meas.vel, tau, params, dt)?;
        kf_pose_step(&mut self.pose, meas.pose, vel_prior, &vel_cov_prior, tau, params, dt)?;
        Ok(self.estimate())
    }

    pub fn state(&self) -> EstimatorState {
        let p = self.pose.mean.to_array();
        let v = self.velocity.mean.to_array();
        let mut covariance = Matrix6::zeros();
        covariance.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.pose.cov);
        covariance.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.velocity.cov);
        EstimatorState {
            mean: [p[0], p[1], p[2], v[0], v[1], v[2]],
            covariance,
        }
    }
}
