//! Simulation and analysis toolkit for motion-based prosthetic elbow
//! interfaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`kinematics`] planar two-link arm model and its Jacobian
//! * [`frames`] direction-of-motion frame and Y-X-Z Euler decomposition
//! * [`controllers`] task-space synergy, joint-space synergy and
//!   proportional activation elbow interfaces
//! * [`simulator`] scripted reaching iterations integrated at 90 Hz
//! * [`analysis`] path normalisation and the motion-quality metrics
//! * [`io`] configuration, trajectory CSV, manifests and reports

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controllers;
pub mod error;
pub mod frames;
pub mod io;
pub mod kinematics;
pub mod simulator;

pub use error::{Error, Result};
pub use frames::Vec3;
