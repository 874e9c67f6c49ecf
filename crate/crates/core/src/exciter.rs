//! Shaker and amplifier: voltage in, base acceleration out.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExciterConfig {
    /// (m/s^2)/V
    pub gain: f64,
    /// Amplifier pole (Hz).
    pub pole_freq: f64,
    /// Soft saturation level (m/s^2); `inf` disables it.
    pub sat_level: f64,
    /// Fractional gain change per second.
    pub drift_rate: f64,
    pub drift_enabled: bool,
}

impl Default for ExciterConfig {
    fn default() -> Self {
        Self {
            gain: 4.0,
            pole_freq: 2_000.0,
            sat_level: 40.0,
            drift_rate: 0.0,
            drift_enabled: false,
        }
    }
}

impl ExciterConfig {
    pub fn ideal(gain: f64) -> Self {
        Self {
            gain,
            pole_freq: 1e9,
            sat_level: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::InvalidConfig(format!("exciter gain {}", self.gain)));
        }
        if !(self.pole_freq.is_finite() && self.pole_freq > 0.0) {
            return Err(Error::InvalidConfig(format!("exciter pole {}", self.pole_freq)));
        }
        if !(self.sat_level > 0.0) {
            return Err(Error::InvalidConfig(format!("exciter saturation {}", self.sat_level)));
        }
        if !self.drift_rate.is_finite() {
            return Err(Error::InvalidConfig("exciter drift rate".into()));
        }
        Ok(())
    }

    /// Effective gain after `t` seconds on the drift clock.
    pub fn gain_at(&self, t: f64) -> f64 {
        if self.drift_enabled {
            self.gain * (1.0 + self.drift_rate * t)
        } else {
            self.gain
        }
    }

    pub fn saturate(&self, y: f64) -> f64 {
        if self.sat_level.is_finite() {
            self.sat_level * (y / self.sat_level).tanh()
        } else {
            y
        }
    }
}

/// Exciter with its lag state and drift clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Exciter {
    cfg: ExciterConfig,
    lag: f64,
    clock: f64,
}

impl Exciter {
    pub fn new(cfg: ExciterConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            lag: 0.0,
            clock: 0.0,
        })
    }

    pub fn config(&self) -> &ExciterConfig {
        &self.cfg
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn gain_now(&self) -> f64 {
        self.cfg.gain_at(self.clock)
    }

    pub fn output(&self) -> f64 {
        self.cfg.saturate(self.lag)
    }

    /// Clears the lag state and the drift clock.
    pub fn reset(&mut self) {
        self.lag = 0.0;
        self.clock = 0.0;
    }

    /// Zero the lag but keep the drift clock running.
    pub fn settle(&mut self) {
        self.lag = 0.0;
    }

    /// Drive with a voltage held for one step; returns the output at the step end.
    pub fn drive(&mut self, voltage: f64, dt: f64) -> f64 {
        self.advance([voltage; 3], dt)[2]
    }

    /// Advance one step given voltages at the start, midpoint and end.
    ///
    /// The gain-scaled input is taken as the quadratic through its three
    /// samples and the lag is integrated exactly. Returns base acceleration
    /// at the same three instants.
    pub fn advance(&mut self, v: [f64; 3], dt: f64) -> [f64; 3] {
        debug_assert!(v.iter().all(|x| x.is_finite()));
        let p = 2.0 * PI * self.cfg.pole_freq;
        let t0 = self.clock;
        let cfg = self.cfg;
        let u = [
            cfg.gain_at(t0) * v[0],
            cfg.gain_at(t0 + 0.5 * dt) * v[1],
            cfg.gain_at(t0 + dt) * v[2],
        ];
        // u(tau) = u0 + u1 tau + u2 tau^2
        let h = 0.5 * dt;
        let u2 = (u[2] - 2.0 * u[1] + u[0]) / (2.0 * h * h);
        let u1 = (u[1] - u[0]) / h - u2 * h;
        let u0 = u[0];
        // particular solution y_p = A + B tau + C tau^2
        let c = u2;
        let b = u1 - 2.0 * c / p;
        let a = u0 - b / p;
        let y_p = |tau: f64| a + b * tau + c * tau * tau;
        let free = self.lag - a;
        let at = |tau: f64| y_p(tau) + free * (-p * tau).exp();
        let out0 = cfg.saturate(self.lag);
        let mid = at(h);
        let y = at(dt);
        self.lag = y;
        self.clock += dt;
        [out0, cfg.saturate(mid), cfg.saturate(y)]
    }
}

/// Quadratic interpolation of a step's three samples at `t` in `[t0, t0 + dt]`.
pub fn interpolate_step(samples: [f64; 3], t0: f64, dt: f64, t: f64) -> f64 {
    let s = (t - t0) / dt;
    let l0 = 2.0 * (s - 0.5) * (s - 1.0);
    let l1 = -4.0 * s * (s - 1.0);
    let l2 = 2.0 * s * (s - 0.5);
    l0 * samples[0] + l1 * samples[1] + l2 * samples[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1e-4;

    fn tone_gain(cfg: ExciterConfig, f: f64) -> f64 {
        let mut ex = Exciter::new(cfg).unwrap();
        let w = 2.0 * PI * f;
        let n = (4.0 / DT) as usize;
        let mut peak: f64 = 0.0;
        for k in 0..n {
            let t = k as f64 * DT;
            let v = [w * t, w * (t + 0.5 * DT), w * (t + DT)].map(f64::sin);
            let out = ex.advance(v, DT)[2];
            if k > n / 2 {
                peak = peak.max(out.abs());
            }
        }
        peak / cfg.gain
    }

    #[test]
    fn zero_input_zero_output() {
        let mut ex = Exciter::new(ExciterConfig::default()).unwrap();
        for _ in 0..1000 {
            assert_eq!(ex.drive(0.0, DT), 0.0);
        }
    }

    #[test]
    fn static_gain() {
        let cfg = ExciterConfig {
            sat_level: f64::INFINITY,
            ..ExciterConfig::default()
        };
        let mut ex = Exciter::new(cfg).unwrap();
        let mut y = 0.0;
        for _ in 0..10_000 {
            y = ex.drive(1.5, DT);
        }
        assert!((y - 1.5 * cfg.gain).abs() < 1e-9);
    }

    #[test]
    fn first_order_lag_response() {
        let cfg = ExciterConfig {
            pole_freq: 200.0,
            sat_level: f64::INFINITY,
            ..ExciterConfig::default()
        };
        // |1 / (1 + i f / fp)|
        let low = 1.0 / (1.0 + (5.0f64 / 200.0).powi(2)).sqrt();
        assert!((tone_gain(cfg, 5.0) - low).abs() < 0.01 * low);
        assert!((tone_gain(cfg, 5.0) - 1.0).abs() < 0.01);
        let at_pole = tone_gain(cfg, 200.0);
        assert!((at_pole - std::f64::consts::FRAC_1_SQRT_2).abs() < 2e-3, "{at_pole}");
    }

    #[test]
    fn saturation_is_soft_and_bounded() {
        let cfg = ExciterConfig {
            sat_level: 5.0,
            ..ExciterConfig::default()
        };
        let mut ex = Exciter::new(cfg).unwrap();
        let mut y = 0.0;
        for _ in 0..10_000 {
            y = ex.drive(100.0, DT);
        }
        assert!(y <= 5.0 && y > 4.99);
    }

    #[test]
    fn drift_scales_gain_linearly() {
        let cfg = ExciterConfig {
            drift_rate: 1e-3,
            drift_enabled: true,
            sat_level: f64::INFINITY,
            ..ExciterConfig::default()
        };
        let mut ex = Exciter::new(cfg).unwrap();
        let g0 = ex.gain_now();
        for _ in 0..10_000 {
            ex.drive(1.0, DT);
        }
        assert!((ex.gain_now() - g0 * (1.0 + 1e-3 * ex.clock())).abs() < 1e-12);
        ex.settle();
        assert!(ex.clock() > 0.99);
        ex.reset();
        assert_eq!(ex.clock(), 0.0);
    }

    #[test]
    fn reset_is_idempotent_and_deterministic() {
        let mut ex = Exciter::new(ExciterConfig::default()).unwrap();
        let input: Vec<f64> = (0..500).map(|k| (k as f64 * 0.07).sin()).collect();
        let a: Vec<f64> = input.iter().map(|v| ex.drive(*v, DT)).collect();
        ex.reset();
        ex.reset();
        assert_eq!(ex.drive(0.0, DT), 0.0);
        ex.reset();
        let b: Vec<f64> = input.iter().map(|v| ex.drive(*v, DT)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_rejected() {
        for bad in [
            ExciterConfig { gain: 0.0, ..Default::default() },
            ExciterConfig { pole_freq: -1.0, ..Default::default() },
            ExciterConfig { sat_level: 0.0, ..Default::default() },
        ] {
            assert!(Exciter::new(bad).is_err());
        }
    }

    #[test]
    fn interpolant_hits_samples() {
        let s = [1.0, 4.0, -2.0];
        assert_eq!(interpolate_step(s, 2.0, 0.5, 2.0), 1.0);
        assert!((interpolate_step(s, 2.0, 0.5, 2.25) - 4.0).abs() < 1e-12);
        assert!((interpolate_step(s, 2.0, 0.5, 2.5) + 2.0).abs() < 1e-12);
    }
}
