use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocols::SteadyRecord;

/// Modal amplitudes below this are treated as noise (m).
pub const NOISE_FLOOR: f64 = 1e-9;

/// Damping ratio from the fundamental-harmonic power balance at phase resonance.
///
/// With the single-mode oscillator `a'' + 2 D w a' + w^2 a = f`, the
/// period-averaged power of `f` against the harmonic response
/// `a cos(Omega t)` equals the dissipated `D w Omega^2 a^2`, which at
/// `Omega = w` is `D w^3 a^2`. Here `f = -(phi^H M b) qb''` and the modal
/// velocity follows from the picked response through `e^T phi`.
pub fn power_balance_damping(record: &SteadyRecord, pick: f64, base: f64) -> Result<f64> {
    if pick == 0.0 {
        return Err(Error::Degenerate("zero response-pick projection".into()));
    }
    let q1 = record.response.coeff(1);
    let a = q1.norm() / pick.abs();
    if !(a > NOISE_FLOOR) {
        return Err(Error::BelowNoiseFloor(a));
    }
    let w = record.omega;
    let force = -base * record.base_accel.coeff(1);
    let velocity = Complex64::new(0.0, w) * q1 / pick;
    let power = 0.5 * (force * velocity.conj()).re;
    Ok(power / (w * w * w * a * a))
}
