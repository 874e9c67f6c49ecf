//! Phase-locked loop, amplitude regulation and steady-state detection.

mod amplitude;
mod detector;
mod pi;
mod pll;
pub mod tuning;

pub use amplitude::AmplitudeController;
pub use detector::{steady_state_detector, QualityThresholds, Steadiness, WindowStats};
pub use pi::{pi_step, PiController, PiGains};
pub use pll::{Pll, PllState};
