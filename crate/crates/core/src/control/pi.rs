use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    pub out_min: f64,
    pub out_max: f64,
    #[serde(default = "yes")]
    pub anti_windup: bool,
}

fn yes() -> bool {
    true
}

impl PiGains {
    pub fn new(kp: f64, ki: f64) -> Self {
        Self {
            kp,
            ki,
            out_min: f64::NEG_INFINITY,
            out_max: f64::INFINITY,
            anti_windup: true,
        }
    }

    pub fn clamped(mut self, lo: f64, hi: f64) -> Self {
        self.out_min = lo;
        self.out_max = hi;
        self
    }
}

/// Discrete PI controller with output clamp and conditional integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub gains: PiGains,
    integral: f64,
    output: f64,
}

impl PiController {
    pub fn new(gains: PiGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            output: 0.0,
        }
    }

    /// Start with the integrator preloaded so that zero error gives `u0`.
    pub fn primed(gains: PiGains, u0: f64) -> Self {
        let mut c = Self::new(gains);
        c.preload(u0);
        c
    }

    pub fn preload(&mut self, u0: f64) {
        self.integral = if self.gains.ki != 0.0 {
            u0 / self.gains.ki
        } else {
            0.0
        };
        self.output = u0.clamp(self.gains.out_min, self.gains.out_max);
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.output = 0.0;
    }

    pub fn step(&mut self, err: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let g = self.gains;
        let trial = self.integral + err * dt;
        let raw = g.kp * err + g.ki * trial;
        let winding = (raw > g.out_max && err * g.ki > 0.0) || (raw < g.out_min && err * g.ki < 0.0);
        if !(g.anti_windup && winding) {
            self.integral = trial;
        }
        self.output = raw.clamp(g.out_min, g.out_max);
        self.output
    }
}

pub fn pi_step(err: f64, state: &mut PiController, dt: f64) -> f64 {
    state.step(err, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DT: f64 = 1e-3;

    #[test]
    fn zero_error_zero_output() {
        let mut c = PiController::new(PiGains::new(3.0, 7.0));
        for _ in 0..100 {
            assert_eq!(c.step(0.0, DT), 0.0);
        }
    }

    #[test]
    fn proportional_only() {
        let mut c = PiController::new(PiGains::new(1.0, 0.0));
        assert_eq!(c.step(0.5, DT), 0.5);
    }

    #[test]
    fn ramp_matches_recursion_closed_form() {
        let (kp, ki, e) = (0.2, 4.0, 0.5);
        let mut c = PiController::new(PiGains::new(kp, ki).clamped(-1.0, 1.0));
        for k in 1..=2000 {
            let u = c.step(e, DT);
            let free = kp * e + ki * e * k as f64 * DT;
            assert!((u - free.min(1.0)).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn anti_windup_recovers_without_extra_overshoot() {
        let gains = PiGains::new(0.1, 5.0).clamped(-1.0, 1.0);
        let mut aw = PiController::new(gains);
        let mut wind = PiController::new(PiGains {
            anti_windup: false,
            ..gains
        });
        for _ in 0..2000 {
            aw.step(1.0, DT);
            wind.step(1.0, DT);
        }
        // reference no-windup trajectory: the integrator sits exactly where
        // the output first reached the limit
        let i_sat = (1.0 - 0.1) / 5.0;
        assert!((aw.integral() - i_sat).abs() < DT);
        let mut reference = i_sat;
        for _ in 0..300 {
            let u_aw = aw.step(-1.0, DT);
            let u_wind = wind.step(-1.0, DT);
            reference -= DT;
            let u_ref = (-0.1 + 5.0 * reference).clamp(-1.0, 1.0);
            assert!(u_aw <= u_ref + 5.0 * DT + 1e-12);
            assert!(u_aw <= u_wind);
        }
        assert!(aw.output() < 0.0);
        assert_eq!(wind.output(), 1.0);
    }

    proptest! {
        #[test]
        fn output_respects_clamp(errs in prop::collection::vec(-10.0f64..10.0, 1..200), kp in 0.0f64..5.0, ki in 0.0f64..50.0) {
            let mut c = PiController::new(PiGains::new(kp, ki).clamped(-2.0, 3.0));
            for e in errs {
                let u = c.step(e, DT);
                prop_assert!((-2.0..=3.0).contains(&u));
            }
        }

        #[test]
        fn deterministic(errs in prop::collection::vec(-1.0f64..1.0, 1..100)) {
            let g = PiGains::new(1.3, 2.1).clamped(-0.5, 0.5);
            let mut a = PiController::new(g);
            let mut b = PiController::new(g);
            for e in errs {
                prop_assert_eq!(a.step(e, DT).to_bits(), b.step(e, DT).to_bits());
            }
        }
    }
}
