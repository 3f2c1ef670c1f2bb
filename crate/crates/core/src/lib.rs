//! Trajectory-tracking control for a horizontal-plane unmanned underwater
//! vehicle.
//!
//! The crate simulates a surge/sway/yaw vehicle under a two-loop tracking
//! controller. The outer loop is a backstepping kinematic controller
//! producing velocity commands; the inner loop is a sliding-mode dynamic
//! controller producing torques. Either loop can be smoothed by a shunting
//! neural-dynamics channel ([`shunting`]), which bounds the velocity
//! feedback and replaces the switching term of the sliding-mode law with a
//! continuous, bounded one.
//!
//! ```
//! use uuv_hybrid::metrics::{run_metrics, MetricsConfig};
//! use uuv_hybrid::sim::{run, ControllerVariant, SimConfig};
//!
//! let variant: ControllerVariant = "bio_bs+bio_smc".parse().unwrap();
//! let mut cfg = SimConfig::preset("straight", variant).unwrap();
//! cfg.scenario.duration = 5.0;
//! let trace = run(&cfg).unwrap();
//! assert_eq!(trace.rows.len(), 501);
//! let m = run_metrics(&trace, &MetricsConfig::default());
//! assert!(m.peak_cmd_jump < 1.0);
//! ```
//!
//! The `book/` directory at the repository root walks through the model
//! chapter by chapter; its code listings are compiled and run as doc-tests
//! of this crate.

pub mod dynamic;
pub mod error;
pub mod estimation;
pub mod kinematic;
pub mod metrics;
pub mod shunting;
pub mod sim;
pub mod vehicle;

pub use error::{ConfigError, EstimationError, ShuntingError, SimError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/vehicle.md")]
    mod vehicle {}
    #[doc = include_str!("../../../book/src/shunting.md")]
    mod shunting {}
    #[doc = include_str!("../../../book/src/kinematic.md")]
    mod kinematic {}
    #[doc = include_str!("../../../book/src/sliding_mode.md")]
    mod sliding_mode {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
