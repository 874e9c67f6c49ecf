use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Second-order Butterworth lowpass, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    z: [f64; 2],
}

impl Biquad {
    pub fn lowpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        let b0 = k * k * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - SQRT_2 * k + k * k) * norm],
            z: [0.0; 2],
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z[0];
        self.z[0] = self.b[1] * x - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.z = [0.0; 2];
    }
}

/// Running fundamental-harmonic estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DemodResult {
    pub amp: f64,
    /// Phase relative to the carrier, in `(-pi, pi]`.
    pub phase: f64,
    pub carrier_phase: f64,
}

/// Lock-in style I/Q demodulator against an externally supplied carrier.
///
/// A signal `A cos(phi_c + theta)` yields `amp -> A` and `phase -> theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulator {
    in_phase: Biquad,
    quadrature: Biquad,
    last: DemodResult,
}

impl Demodulator {
    pub fn new(cutoff_hz: f64, sample_rate: f64) -> Self {
        let lp = Biquad::lowpass(cutoff_hz, sample_rate);
        Self {
            in_phase: lp,
            quadrature: lp,
            last: DemodResult::default(),
        }
    }

    #[inline]
    pub fn demodulate(&mut self, sample: f64, carrier_phase: f64) -> DemodResult {
        let (s, c) = carrier_phase.sin_cos();
        let i = self.in_phase.process(2.0 * sample * c);
        let q = self.quadrature.process(-2.0 * sample * s);
        self.last = DemodResult {
            amp: i.hypot(q),
            phase: q.atan2(i),
            carrier_phase,
        };
        self.last
    }

    pub fn last(&self) -> DemodResult {
        self.last
    }

    pub fn reset(&mut self) {
        self.in_phase.reset();
        self.quadrature.reset();
        self.last = DemodResult::default();
    }
}
