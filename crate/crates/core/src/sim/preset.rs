use std::f64::consts::FRAC_PI_4;

use thiserror::Error;

use super::{ActuatorLag, ControllerVariant, Scenario, Trajectory};
use crate::estimation::NoiseConfig;
use crate::vehicle::{BodyVelocity, Pose};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown preset `{0}` (available: straight, circle, circle_noisy)")]
pub struct UnknownPreset(pub String);

/// Preset names with a one-line description each.
pub const PRESETS: [(&str, &str); 3] = [
    ("straight", "x = 3 + 0.4t, y = 0.4t at 45 deg heading; start at rest at the origin facing +x; 100 s"),
    ("circle", "radius 5 about (0, 7) at 0.1 rad/s, heading 0.1t; start at rest at the origin; 100 s"),
    ("circle_noisy", "circle with process/measurement noise and both state estimators on; 100 s"),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

fn base(trajectory: Trajectory, duration: f64) -> Scenario {
    Scenario {
        trajectory,
        initial_pose: Pose::default(),
        initial_vel: BodyVelocity::ZERO,
        duration,
        dt: 0.01,
        controller: ControllerVariant::default(),
        noise: None,
        estimator: false,
        actuator: ActuatorLag::default(),
    }
}

fn circle() -> Trajectory {
    Trajectory::Circle {
        radius: 5.0,
        center: [0.0, 7.0],
        angular_rate: 0.1,
    }
}

/// Builds a named scenario. The controller defaults to `bio_bs+bio_smc`.
pub fn preset(name: &str) -> Result<Scenario, UnknownPreset> {
    match name {
        "straight" => Ok(base(
            Trajectory::StraightLine {
                x0: 3.0,
                y0: 0.0,
                speed_x: 0.4,
                speed_y: 0.4,
                heading: FRAC_PI_4,
            },
            100.0,
        )),
        "circle" => Ok(base(circle(), 100.0)),
        "circle_noisy" => {
            let mut sc = base(circle(), 100.0);
            sc.noise = Some(NoiseConfig::default());
            sc.estimator = true;
            Ok(sc)
        }
        other => Err(UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_preset() {
        let sc = preset("straight").unwrap();
        assert_eq!(sc.initial_pose, Pose::new(0.0, 0.0, 0.0));
        assert_eq!(sc.dt, 0.01);
        match sc.trajectory {
            Trajectory::StraightLine { x0, y0, speed_x, speed_y, heading } => {
                assert_eq!((x0, y0, speed_x, speed_y), (3.0, 0.0, 0.4, 0.4));
                assert_eq!(heading, FRAC_PI_4);
            }
            other => panic!("unexpected trajectory {other:?}"),
        }
    }

    #[test]
    fn circle_presets() {
        let sc = preset("circle").unwrap();
        assert_eq!(sc.trajectory, circle());
        assert!(sc.noise.is_none() && !sc.estimator);
        let noisy = preset("circle_noisy").unwrap();
        assert_eq!(noisy.trajectory, circle());
        let n = noisy.noise.unwrap();
        assert_eq!(n.q_vel, [1e-3, 1e-3, 1e-4]);
        assert_eq!(n.q_pos, [1e-5, 1e-5, 1e-6]);
        assert_eq!(n.r_scale, 10.0);
        assert!(noisy.estimator);
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(preset("zigzag").unwrap_err(), UnknownPreset("zigzag".into()));
        for name in preset_names() {
            preset(name).unwrap().validate().unwrap();
        }
    }
}
