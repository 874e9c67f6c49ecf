use serde::{Deserialize, Serialize};

use super::pi::{PiController, PiGains};
use crate::dsp::wrap_phase;

/// Carrier phase and instantaneous frequency after one loop update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllState {
    pub carrier_phase: f64,
    /// rad/s
    pub inst_freq: f64,
    /// `wrap(target - lag)` at the last update (rad).
    pub phase_error: f64,
}

/// Phase-locked loop: PI on the phase error sets the excitation frequency,
/// whose integral is the carrier phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Pll {
    center: f64,
    pi: PiController,
    state: PllState,
}

impl Pll {
    /// `span` bounds the PI correction to `center * (1 +- span)`.
    pub fn new(center: f64, kp: f64, ki: f64, span: f64) -> Self {
        let gains = PiGains::new(kp, ki).clamped(-span * center, span * center);
        Self {
            center,
            pi: PiController::new(gains),
            state: PllState {
                carrier_phase: 0.0,
                inst_freq: center,
                phase_error: 0.0,
            },
        }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn state(&self) -> PllState {
        self.state
    }

    pub fn inst_freq(&self) -> f64 {
        self.state.inst_freq
    }

    pub fn carrier_phase(&self) -> f64 {
        self.state.carrier_phase
    }

    pub fn pll_step(&mut self, lag: f64, target_lag: f64, dt: f64) -> PllState {
        self.coast(dt);
        self.correct(lag, target_lag, dt)
    }

    /// Frequency update from a lag measured at the present carrier phase.
    pub fn correct(&mut self, lag: f64, target_lag: f64, dt: f64) -> PllState {
        let err = wrap_phase(target_lag - lag);
        self.state.inst_freq = self.center + self.pi.step(err, dt);
        self.state.phase_error = err;
        self.state
    }

    /// Advance the carrier only, holding the current frequency.
    pub fn coast(&mut self, dt: f64) -> PllState {
        self.state.carrier_phase =
            (self.state.carrier_phase + self.state.inst_freq * dt).rem_euclid(std::f64::consts::TAU);
        self.state
    }

    /// Retune so that the present frequency becomes the holding value.
    pub fn hold_at(&mut self, freq: f64) {
        self.pi.preload(freq - self.center);
        self.state.inst_freq = self.center + self.pi.output();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn locked_loop_holds_frequency() {
        let mut pll = Pll::new(600.0, 10.0, 30.0, 0.3);
        pll.hold_at(620.0);
        for _ in 0..10_000 {
            let s = pll.pll_step(PI / 2.0, PI / 2.0, 1e-4);
            assert_eq!(s.inst_freq, 620.0);
        }
    }

    #[test]
    fn carrier_integrates_frequency() {
        let mut pll = Pll::new(100.0, 0.0, 0.0, 0.3);
        for _ in 0..1000 {
            pll.coast(1e-5);
        }
        assert!((pll.carrier_phase() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn positive_error_raises_frequency() {
        let mut pll = Pll::new(600.0, 10.0, 30.0, 0.3);
        let s = pll.pll_step(PI / 3.0, PI / 2.0, 1e-4);
        assert!(s.inst_freq > 600.0);
        assert!((s.phase_error - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn correction_is_bounded() {
        let mut pll = Pll::new(600.0, 100.0, 1000.0, 0.1);
        for _ in 0..10_000 {
            pll.pll_step(0.0, PI / 2.0, 1e-4);
        }
        assert!((pll.inst_freq() - 660.0).abs() < 1e-9);
    }
}
