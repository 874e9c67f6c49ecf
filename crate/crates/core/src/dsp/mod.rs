//! Synchronous estimation of harmonic content at a known fundamental.

mod demod;
mod spectrum;

pub use demod::{Biquad, DemodResult, Demodulator};
pub use spectrum::{
    amplitude_metric, differentiate, fourier_coeffs, integrate_velocity, HarmonicSpectrum,
    Integrated, Window, DEFAULT_ORDER, MIN_PERIODS,
};

use std::f64::consts::PI;

/// Wrap an angle to `(-pi, pi]`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_phase(-0.5 - 4.0 * PI) + 0.5).abs() < 1e-12);
    }
}
