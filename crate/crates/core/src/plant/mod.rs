//! Two-mode nonlinear modal model of the structure under test.
//!
//! The modal coordinates `eta[m]` are mass-normalized and counted relative to
//! the base. Each mode obeys
//!
//! ```text
//! eta_m'' + 2 d_m w_m eta_m' + w_m^2 eta_m + g_m(eta, eta') = -b_m * qb''
//! ```
//!
//! with `g_1 = beta*eta_1^2 + gamma*eta_1^3 + friction(eta_1')` and
//! `g_2 = alpha*eta_1^2`. The quadratic term softens, the cubic term hardens
//! at larger amplitude, and `alpha` feeds the second harmonic of mode 1 into
//! mode 2 (the 1:2 interaction channel).

pub mod oracle;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of retained modes.
pub const MODES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Linear angular frequency of the bending mode (rad/s).
    pub omega1: f64,
    /// Linear angular frequency of the torsion mode (rad/s).
    pub omega2: f64,
    pub d1: f64,
    pub d2: f64,
    /// Quadratic stiffness on mode 1 (1/(m s^2)).
    pub beta: f64,
    /// Cubic stiffness on mode 1 (1/(m^2 s^2)).
    pub gamma: f64,
    /// Quadratic drive of mode 2 by mode 1 (1/(m s^2)).
    pub alpha: f64,
    /// Magnitude of the dead-band friction element (m/s^2).
    pub mu: f64,
    /// Regularization velocity of the friction element (m/s).
    pub v_ref: f64,
    /// Base-influence projections `phi_m^H M b`.
    pub b_factors: [f64; MODES],
    /// Response-pick projections `e_m^T phi_m`.
    pub e_factors: [f64; MODES],
}

impl PlantConfig {
    /// Purely linear plant with the aligned-configuration modal data.
    pub fn linear() -> Self {
        Self {
            beta: 0.0,
            gamma: 0.0,
            alpha: 0.0,
            mu: 0.0,
            ..Self::aligned()
        }
    }

    /// Default softening-hardening plant, frequency ratio 1.89.
    ///
    /// The nonlinear coefficients are expressed through the normalized
    /// values `beta/w1^2 = 650 1/m`, `gamma/w1^2 = 0.6 (beta/w1^2)^2` so the
    /// same backbone shape is obtained for any `omega1`.
    pub fn aligned() -> Self {
        Self::calibrated(2.0 * PI * 101.0, 1.89)
    }

    /// Default plant for the misaligned mounting, frequency ratio 1.84.
    pub fn misaligned() -> Self {
        Self::calibrated(2.0 * PI * 107.0, 1.84)
    }

    /// Softening-hardening plant with the default normalized coefficients
    /// at any bending frequency and torsion/bending ratio.
    pub fn calibrated(omega1: f64, ratio: f64) -> Self {
        let w2 = omega1 * omega1;
        let beta_n = BETA_NORMALIZED;
        Self {
            omega1,
            omega2: ratio * omega1,
            d1: 0.004,
            d2: 0.0004,
            beta: -beta_n * w2,
            gamma: GAMMA_RATIO * beta_n * beta_n * w2,
            alpha: ALPHA_NORMALIZED * w2,
            mu: MU_NORMALIZED * omega1,
            v_ref: V_REF,
            b_factors: [1.0, 0.0],
            e_factors: [1.0, 0.1],
        }
    }

    /// Cubic hardening only, no friction and no modal coupling.
    pub fn hardening() -> Self {
        let base = Self::aligned();
        Self {
            beta: 0.0,
            alpha: 0.0,
            mu: 0.0,
            ..base
        }
    }

    pub fn is_linear(&self) -> bool {
        self.beta == 0.0 && self.gamma == 0.0 && self.alpha == 0.0 && self.mu == 0.0
    }

    pub fn omegas(&self) -> [f64; MODES] {
        [self.omega1, self.omega2]
    }

    pub fn dampings(&self) -> [f64; MODES] {
        [self.d1, self.d2]
    }

    /// Highest linear modal frequency in Hz.
    pub fn max_frequency_hz(&self) -> f64 {
        self.omega1.max(self.omega2) / (2.0 * PI)
    }

    /// Largest admissible integration step.
    pub fn max_step(&self) -> f64 {
        1.0 / (20.0 * self.max_frequency_hz())
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega1,
            self.omega2,
            self.d1,
            self.d2,
            self.beta,
            self.gamma,
            self.alpha,
            self.mu,
            self.v_ref,
            self.b_factors[0],
            self.b_factors[1],
            self.e_factors[0],
            self.e_factors[1],
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("plant configuration"));
        }
        if self.omega1 <= 0.0 || self.omega2 <= 0.0 {
            return Err(Error::InvalidConfig("modal frequencies must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.d1) || !(0.0..1.0).contains(&self.d2) {
            return Err(Error::InvalidConfig("damping ratios must lie in [0, 1)".into()));
        }
        if self.mu != 0.0 && self.v_ref <= 0.0 {
            return Err(Error::InvalidConfig(
                "friction element needs a positive v_ref".into(),
            ));
        }
        Ok(())
    }

    /// Friction force per unit modal mass at modal velocity `v`.
    ///
    /// `mu * (v/v_ref - tanh(v/v_ref))` is a regularized dead band: it is
    /// cubic (negligible) for `|v| << v_ref` and tends to a viscous element
    /// `mu/v_ref` for `|v| >> v_ref`, so its equivalent damping rises with
    /// amplitude and then saturates.
    #[inline]
    pub fn friction(&self, v: f64) -> f64 {
        if self.mu == 0.0 {
            return 0.0;
        }
        let x = v / self.v_ref;
        // series keeps accuracy where x - tanh(x) cancels
        if x.abs() < 1e-3 {
            self.mu * x * x * x / 3.0
        } else {
            self.mu * (x - x.tanh())
        }
    }

    /// Nonlinear restoring terms `g_m(eta, eta_dot)`.
    #[inline]
    pub fn nonlinear_forces(&self, eta: &[f64; MODES], eta_dot: &[f64; MODES]) -> [f64; MODES] {
        let x = eta[0];
        let x2 = x * x;
        [
            self.beta * x2 + self.gamma * x2 * x + self.friction(eta_dot[0]),
            self.alpha * x2,
        ]
    }

    /// Analytic FRF `q_m/q_b` of the linearized plant at angular frequency `omega`.
    pub fn linear_frf(&self, omega: f64) -> Complex64 {
        let om2 = omega * omega;
        (0..MODES)
            .map(|m| {
                let w = self.omegas()[m];
                let d = self.dampings()[m];
                let den = Complex64::new(w * w - om2, 2.0 * d * w * omega);
                self.e_factors[m] * self.b_factors[m] * om2 / den
            })
            .sum()
    }
}

const BETA_NORMALIZED: f64 = 650.0;
const GAMMA_RATIO: f64 = 0.6;
const ALPHA_NORMALIZED: f64 = 55.0;
const MU_NORMALIZED: f64 = 1.2e-3;
const V_REF: f64 = 0.1;

/// Instantaneous modal state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub eta: [f64; MODES],
    pub eta_dot: [f64; MODES],
    pub t: f64,
}

impl PlantState {
    pub fn at_rest() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.eta.iter().chain(self.eta_dot.iter()).all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// Modal accelerations for the given state and base acceleration.
pub fn derivatives(state: &PlantState, base_accel: f64, cfg: &PlantConfig) -> Result<[f64; MODES]> {
    if !state.is_finite() || !base_accel.is_finite() {
        return Err(Error::NonFinite("plant state or base acceleration"));
    }
    Ok(accelerations(&state.eta, &state.eta_dot, base_accel, cfg))
}

#[inline]
fn accelerations(
    eta: &[f64; MODES],
    eta_dot: &[f64; MODES],
    base_accel: f64,
    cfg: &PlantConfig,
) -> [f64; MODES] {
    let g = cfg.nonlinear_forces(eta, eta_dot);
    let w = cfg.omegas();
    let d = cfg.dampings();
    let mut acc = [0.0; MODES];
    for m in 0..MODES {
        acc[m] = -2.0 * d[m] * w[m] * eta_dot[m]
            - w[m] * w[m] * eta[m]
            - g[m]
            - cfg.b_factors[m] * base_accel;
    }
    acc
}

/// Advance the state by `dt` with the classical fourth-order Runge-Kutta scheme.
///
/// `base_accel` is evaluated at absolute times `t`, `t + dt/2` and `t + dt`.
pub fn step<F>(state: &PlantState, base_accel: F, dt: f64, cfg: &PlantConfig) -> Result<PlantState>
where
    F: Fn(f64) -> f64,
{
    let limit = cfg.max_step();
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    let next = rk4(state, &base_accel, dt, cfg);
    if !next.is_finite() {
        return Err(Error::NonFinite("integrated plant state"));
    }
    Ok(next)
}

/// Unchecked RK4 step used by the closed-loop rig after validation.
#[inline]
pub(crate) fn rk4<F>(s: &PlantState, base_accel: &F, dt: f64, cfg: &PlantConfig) -> PlantState
where
    F: Fn(f64) -> f64,
{
    let t = s.t;
    let h2 = 0.5 * dt;
    let a_mid = base_accel(t + h2);

    let k1v = accelerations(&s.eta, &s.eta_dot, base_accel(t), cfg);
    let k1x = s.eta_dot;

    let x2 = add(&s.eta, &k1x, h2);
    let v2 = add(&s.eta_dot, &k1v, h2);
    let k2v = accelerations(&x2, &v2, a_mid, cfg);
    let k2x = v2;

    let x3 = add(&s.eta, &k2x, h2);
    let v3 = add(&s.eta_dot, &k2v, h2);
    let k3v = accelerations(&x3, &v3, a_mid, cfg);
    let k3x = v3;

    let x4 = add(&s.eta, &k3x, dt);
    let v4 = add(&s.eta_dot, &k3v, dt);
    let k4v = accelerations(&x4, &v4, base_accel(t + dt), cfg);
    let k4x = v4;

    let mut out = PlantState { t: t + dt, ..*s };
    for m in 0..MODES {
        out.eta[m] += dt / 6.0 * (k1x[m] + 2.0 * k2x[m] + 2.0 * k3x[m] + k4x[m]);
        out.eta_dot[m] += dt / 6.0 * (k1v[m] + 2.0 * k2v[m] + 2.0 * k3v[m] + k4v[m]);
    }
    out
}

#[inline]
fn add(a: &[f64; MODES], b: &[f64; MODES], h: f64) -> [f64; MODES] {
    [a[0] + h * b[0], a[1] + h * b[1]]
}

/// Panel-center displacement relative to the base.
pub fn response_displacement(state: &PlantState, cfg: &PlantConfig) -> f64 {
    cfg.e_factors[0] * state.eta[0] + cfg.e_factors[1] * state.eta[1]
}

/// Panel-center velocity relative to the base.
pub fn response_velocity(state: &PlantState, cfg: &PlantConfig) -> f64 {
    cfg.e_factors[0] * state.eta_dot[0] + cfg.e_factors[1] * state.eta_dot[1]
}

/// Instantaneous power terms per unit modal mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlow {
    /// Power delivered by the base inertia forces.
    pub supplied: f64,
    /// Power injected into mode 2 by the `alpha` drive term.
    pub coupling: f64,
    /// Viscous plus friction dissipation (non-negative).
    pub dissipated: f64,
}

pub fn power_flow(state: &PlantState, base_accel: f64, cfg: &PlantConfig) -> PowerFlow {
    let [v1, v2] = state.eta_dot;
    let supplied = -base_accel * (cfg.b_factors[0] * v1 + cfg.b_factors[1] * v2);
    let coupling = -cfg.alpha * state.eta[0] * state.eta[0] * v2;
    let dissipated = 2.0 * cfg.d1 * cfg.omega1 * v1 * v1
        + 2.0 * cfg.d2 * cfg.omega2 * v2 * v2
        + cfg.friction(v1) * v1;
    PowerFlow {
        supplied,
        coupling,
        dissipated,
    }
}

/// Kinetic plus potential energy, including the polynomial potential of mode 1.
pub fn mechanical_energy(state: &PlantState, cfg: &PlantConfig) -> f64 {
    let [x1, x2] = state.eta;
    let [v1, v2] = state.eta_dot;
    0.5 * (v1 * v1 + v2 * v2)
        + 0.5 * (cfg.omega1 * cfg.omega1 * x1 * x1 + cfg.omega2 * cfg.omega2 * x2 * x2)
        + cfg.beta * x1 * x1 * x1 / 3.0
        + cfg.gamma * x1 * x1 * x1 * x1 / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn free_run(cfg: &PlantConfig, s0: PlantState, dt: f64, n: usize) -> PlantState {
        let mut s = s0;
        for _ in 0..n {
            s = step(&s, |_| 0.0, dt, cfg).unwrap();
        }
        s
    }

    #[test]
    fn equilibrium_has_zero_acceleration() {
        let cfg = PlantConfig::aligned();
        let acc = derivatives(&PlantState::at_rest(), 0.0, &cfg).unwrap();
        assert_eq!(acc, [0.0, 0.0]);
    }

    #[test]
    fn hookes_law_on_linear_plant() {
        let cfg = PlantConfig::linear();
        let s = PlantState {
            eta: [1e-3, 0.0],
            ..Default::default()
        };
        let acc = derivatives(&s, 0.0, &cfg).unwrap();
        assert_relative_eq!(acc[0], -cfg.omega1 * cfg.omega1 * 1e-3, max_relative = 1e-15);
        assert_eq!(acc[1], 0.0);
    }

    #[test]
    fn nonlinear_polynomial_matches_exact_rational_evaluation() {
        // beta = -7/2 * 10^8, gamma = 9/4 * 10^11, alpha = 3 * 10^7, eta1 = 1/1000:
        // -w^2 eta - beta eta^2 - gamma eta^3 evaluated exactly by hand in rationals.
        let cfg = PlantConfig {
            omega1: 600.0,
            omega2: 1100.0,
            d1: 0.0,
            d2: 0.0,
            beta: -3.5e8,
            gamma: 2.25e11,
            alpha: 3.0e7,
            mu: 0.0,
            v_ref: 0.1,
            b_factors: [1.0, 0.0],
            e_factors: [1.0, 0.0],
        };
        let s = PlantState {
            eta: [1e-3, 0.0],
            ..Default::default()
        };
        let acc = derivatives(&s, 0.0, &cfg).unwrap();
        // -360000e-3 + 350 - 225 = -235
        assert_relative_eq!(acc[0], -235.0, max_relative = 1e-13);
        // -alpha * 1e-6 = -30
        assert_relative_eq!(acc[1], -30.0, max_relative = 1e-13);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let cfg = PlantConfig::linear();
        let s = PlantState {
            eta: [f64::NAN, 0.0],
            ..Default::default()
        };
        assert!(matches!(derivatives(&s, 0.0, &cfg), Err(Error::NonFinite(_))));
        assert!(derivatives(&PlantState::at_rest(), f64::INFINITY, &cfg).is_err());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let cfg = PlantConfig::aligned();
        let dt = 2.0 * cfg.max_step();
        assert!(matches!(
            step(&PlantState::at_rest(), |_| 0.0, dt, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn undamped_free_oscillation_returns_after_one_period() {
        let cfg = PlantConfig {
            d1: 0.0,
            d2: 0.0,
            ..PlantConfig::linear()
        };
        let period = 2.0 * PI / cfg.omega1;
        let n = 1000;
        let dt = period / n as f64;
        let s0 = PlantState {
            eta: [1e-3, 0.0],
            ..Default::default()
        };
        let s = free_run(&cfg, s0, dt, n);
        assert!((s.eta[0] - 1e-3).abs() < 1e-6 * 1e-3);
        assert!(s.eta_dot[0].abs() < 1e-6 * 1e-3 * cfg.omega1);
    }

    #[test]
    fn fourth_order_convergence() {
        let cfg = PlantConfig::aligned();
        let s0 = PlantState {
            eta: [1e-3, 2e-5],
            ..Default::default()
        };
        let t_end = 0.02;
        let run = |n: usize| free_run(&cfg, s0, t_end / n as f64, n);
        let reference = run(3200);
        let coarse = run(200);
        let fine = run(400);
        let e1 = (coarse.eta[0] - reference.eta[0]).abs();
        let e2 = (fine.eta[0] - reference.eta[0]).abs();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "error ratio {ratio}");
    }

    #[test]
    fn pick_vector_projection() {
        let mut cfg = PlantConfig::linear();
        assert_eq!(response_displacement(&PlantState::at_rest(), &cfg), 0.0);
        cfg.e_factors = [1.0, 0.0];
        let s = PlantState {
            eta: [2e-3, 5e-3],
            ..Default::default()
        };
        assert_eq!(response_displacement(&s, &cfg), 2e-3);
        cfg.e_factors = [0.9, 0.1];
        let s = PlantState {
            eta: [1e-3, 1e-3],
            ..Default::default()
        };
        assert_relative_eq!(response_displacement(&s, &cfg), 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn linearity_superposition() {
        let cfg = PlantConfig::linear();
        let dt = 1e-4;
        let w = cfg.omega1 * 0.999;
        let run = |amp: f64| {
            let mut s = PlantState::at_rest();
            for _ in 0..20_000 {
                s = step(&s, |t| amp * (w * t).cos(), dt, &cfg).unwrap();
            }
            s
        };
        let a = run(1.0);
        let b = run(2.0);
        assert_relative_eq!(b.eta[0], 2.0 * a.eta[0], max_relative = 1e-9);
        assert_relative_eq!(b.eta_dot[0], 2.0 * a.eta_dot[0], max_relative = 1e-9);
    }

    #[test]
    fn energy_balance_over_window() {
        let cfg = PlantConfig::aligned();
        let dt = 5e-5;
        let w = cfg.omega1 * 0.98;
        let drive = |t: f64| 6.0 * (w * t).sin();
        let mut s = PlantState::at_rest();
        let e0 = mechanical_energy(&s, &cfg);
        let mut work = 0.0;
        let net = |s: &PlantState| {
            let p = power_flow(s, drive(s.t), &cfg);
            p.supplied + p.coupling - p.dissipated
        };
        for _ in 0..10000 {
            let p0 = net(&s);
            let mid = rk4(&s, &drive, 0.5 * dt, &cfg);
            let next = step(&s, drive, dt, &cfg).unwrap();
            // Simpson on each step
            work += dt / 6.0 * (p0 + 4.0 * net(&mid) + net(&next));
            s = next;
        }
        let de = mechanical_energy(&s, &cfg) - e0;
        assert_relative_eq!(de, work, max_relative = 1e-6);
    }

    #[test]
    fn steady_linear_response_matches_analytic_frf() {
        let cfg = PlantConfig::linear();
        let dt = 1e-4;
        let w = cfg.omega1;
        let amp = 1.0;
        let mut s = PlantState::at_rest();
        // 25 time constants of mode 1
        let n = (25.0 / (cfg.d1 * cfg.omega1) / dt) as usize;
        let mut peak: f64 = 0.0;
        let settle = n - 2000;
        for k in 0..n {
            s = step(&s, |t| amp * (w * t).cos(), dt, &cfg).unwrap();
            if k > settle {
                peak = peak.max(response_displacement(&s, &cfg).abs());
            }
        }
        // |q_m / q_b| * |q_b| with |q_b| = amp / w^2
        let expected = cfg.linear_frf(w).norm() * amp / (w * w);
        assert!((peak / expected - 1.0).abs() < 1e-3, "{peak} vs {expected}");
    }

    #[test]
    fn friction_element_saturates_to_viscous() {
        let cfg = PlantConfig::aligned();
        let v = 100.0 * cfg.v_ref;
        let c_eq = cfg.friction(v) / v;
        assert_relative_eq!(c_eq, cfg.mu / cfg.v_ref, max_relative = 0.02);
        assert!(cfg.friction(1e-6 * cfg.v_ref).abs() < 1e-15);
        assert_eq!(cfg.friction(-0.3), -cfg.friction(0.3));
    }
}
