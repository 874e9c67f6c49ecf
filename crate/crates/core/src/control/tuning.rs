//! Gain selection from an open-loop step response.
//!
//! A voltage step is applied to the plant at a fixed excitation frequency
//! and the demodulated amplitude is recorded. A first-order model
//! `K / (tau s + 1)` is read off the record (final value and 63 % time);
//! the PI zero then cancels the pole, `kp = tau wb / K`, `ki = wb / K`,
//! which leaves a first-order closed loop of bandwidth `wb`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderModel {
    pub gain: f64,
    pub tau: f64,
}

impl FirstOrderModel {
    /// PI gains `(kp, ki)` for closed-loop bandwidth `wb` (rad/s).
    pub fn pole_zero_gains(&self, wb: f64) -> (f64, f64) {
        (self.tau * wb / self.gain, wb / self.gain)
    }
}

/// Fit from a step of size `step` applied at sample 0.
pub fn identify_first_order(response: &[f64], dt: f64, step: f64) -> Result<FirstOrderModel> {
    if response.len() < 10 || step == 0.0 {
        return Err(Error::InsufficientData("step response".into()));
    }
    let tail = &response[response.len() * 9 / 10..];
    let final_value = tail.iter().sum::<f64>() / tail.len() as f64;
    let start = response[0];
    let rise = final_value - start;
    if rise.abs() < f64::EPSILON * final_value.abs().max(1.0) {
        return Err(Error::Degenerate("flat step response".into()));
    }
    let level = start + (1.0 - (-1.0f64).exp()) * rise;
    let k = response
        .iter()
        .position(|&y| (y - level) * rise.signum() >= 0.0)
        .ok_or_else(|| Error::InsufficientData("step response never reaches 63%".into()))?;
    let t_hit = if k == 0 {
        0.0
    } else {
        let (y0, y1) = (response[k - 1], response[k]);
        (k as f64 - 1.0 + (level - y0) / (y1 - y0)) * dt
    };
    Ok(FirstOrderModel {
        gain: rise / step,
        tau: t_hit,
    })
}
