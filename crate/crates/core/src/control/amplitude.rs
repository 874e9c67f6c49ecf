use super::pi::{PiController, PiGains};

/// PI regulation of a measured amplitude through the voltage amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeController {
    pi: PiController,
}

impl AmplitudeController {
    /// Output is clamped to `[0, v_max]`.
    pub fn new(kp: f64, ki: f64, v_max: f64) -> Self {
        Self {
            pi: PiController::new(PiGains::new(kp, ki).clamped(0.0, v_max)),
        }
    }

    pub fn primed(mut self, v0: f64) -> Self {
        self.pi.preload(v0);
        self
    }

    pub fn preload(&mut self, v0: f64) {
        self.pi.preload(v0);
    }

    pub fn voltage(&self) -> f64 {
        self.pi.output()
    }

    pub fn gains(&self) -> PiGains {
        self.pi.gains
    }

    pub fn amplitude_controller_step(&mut self, measured: f64, target: f64, dt: f64) -> f64 {
        debug_assert!(target > 0.0);
        self.pi.step(target - measured, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_target_output_is_constant() {
        let mut c = AmplitudeController::new(2.0, 10.0, 5.0).primed(1.2);
        for _ in 0..1000 {
            assert!((c.amplitude_controller_step(0.3, 0.3, 1e-4) - 1.2).abs() < 1e-12);
        }
    }

    #[test]
    fn output_never_negative() {
        let mut c = AmplitudeController::new(2.0, 10.0, 5.0);
        for _ in 0..1000 {
            assert!(c.amplitude_controller_step(1.0, 0.1, 1e-4) >= 0.0);
        }
        assert_eq!(c.voltage(), 0.0);
    }

    #[test]
    fn settles_first_order_plant() {
        // amplitude dynamics tau * a' = K v - a, pole-zero cancelled
        let (k, tau, wb) = (1.2e-3, 0.4, 3.0);
        let mut c = AmplitudeController::new(tau * wb / k, wb / k, 5.0);
        let dt = 1e-3;
        let mut a = 0.0;
        let target = 1e-3;
        let mut t = 0.0;
        while t < 16.0 {
            let v = c.amplitude_controller_step(a, target, dt);
            a += dt / tau * (k * v - a);
            t += dt;
        }
        assert!((a - target).abs() < 1e-3 * target);
    }
}
