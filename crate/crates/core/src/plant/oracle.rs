//! Harmonic-balance oracle for the phase-resonant backbone of the plant.
//!
//! For each prescribed modal amplitude the periodic steady state under a
//! sinusoidal base acceleration `F sin(Omega t)` is solved together with the
//! excitation frequency and level such that the fundamental harmonic of the
//! panel-center response lags the base velocity by exactly 90 degrees.
//! Nonlinear terms are evaluated by alternating frequency-time transforms and
//! the augmented system is solved with Newton's method.
//!
//! This path shares nothing with the time-domain simulation and the
//! closed-loop protocols, so it serves as the reference they are checked
//! against.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{PlantConfig, MODES};
use crate::dsp::HarmonicSpectrum;
use crate::error::{Error, Result};
use crate::ident::{Backbone, BackbonePoint, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Retained harmonics per mode.
    pub harmonics: usize,
    /// Time samples per period for the nonlinear terms.
    pub samples: usize,
    /// Convergence threshold on the normalized residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            harmonics: 12,
            samples: 128,
            tolerance: 1e-11,
            max_iterations: 40,
        }
    }
}

/// Phase-resonant periodic solution at one modal amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    /// Mass-normalized modal amplitude `|q_m,1| / e_1`.
    pub modal_amplitude: f64,
    pub omega: f64,
    pub damping: f64,
    /// Base-acceleration amplitude required to sustain the motion (m/s^2).
    pub forcing: f64,
    /// `sqrt(sum_{h>=1} |q_m,h|^2)` over the retained harmonics.
    pub amplitude_metric: f64,
    /// Complex Fourier coefficients `eta_m(h)`, h = 0..=H, convention
    /// `eta = Re(sum_h c_h e^{i h Omega t})`.
    pub modal_coeffs: [Vec<Complex64>; MODES],
    pub residual: f64,
}

impl OracleSolution {
    /// Modal coefficients as spectra at the solution frequency.
    pub fn modal_spectra(&self) -> [HarmonicSpectrum; MODES] {
        [
            HarmonicSpectrum::new(self.omega, self.modal_coeffs[0].clone()),
            HarmonicSpectrum::new(self.omega, self.modal_coeffs[1].clone()),
        ]
    }
}

/// Oracle output: converged points and per-amplitude failures.
#[derive(Debug)]
pub struct OracleBackbone {
    pub solutions: Vec<OracleSolution>,
    pub failures: Vec<(f64, Error)>,
}

impl OracleBackbone {
    pub fn backbone(&self, cfg: &PlantConfig) -> Backbone {
        Backbone::new(
            self.solutions
                .iter()
                .map(|s| BackbonePoint {
                    a: s.amplitude_metric,
                    modal_amplitude: s.modal_amplitude,
                    omega: s.omega,
                    damping: s.damping,
                    direction: Direction::Up,
                    pick_projection: cfg.e_factors[0],
                    base_projection: cfg.b_factors[0],
                })
                .collect(),
        )
    }
}

/// Phase-resonant backbone `omega(a)`, `D(a)` on the given modal-amplitude grid.
///
/// Grid points are visited in increasing order with natural continuation;
/// a point that fails to converge is reported and continuation proceeds from
/// the last converged solution.
pub fn calibrate_backbone(cfg: &PlantConfig, amplitude_grid: &[f64]) -> Result<OracleBackbone> {
    calibrate_backbone_with(cfg, amplitude_grid, &OracleSettings::default())
}

pub fn calibrate_backbone_with(
    cfg: &PlantConfig,
    amplitude_grid: &[f64],
    settings: &OracleSettings,
) -> Result<OracleBackbone> {
    cfg.validate()?;
    if cfg.b_factors[0] == 0.0 || cfg.e_factors[0] == 0.0 {
        return Err(Error::InvalidConfig(
            "mode 1 must be excited and observed (b_1, e_1 nonzero)".into(),
        ));
    }
    if settings.samples < 4 * settings.harmonics + 1 {
        return Err(Error::InvalidConfig(
            "oracle needs more than 4H time samples".into(),
        ));
    }
    let mut grid: Vec<f64> = amplitude_grid.to_vec();
    if grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidConfig("amplitudes must be positive".into()));
    }
    grid.sort_by(f64::total_cmp);

    let hb = HarmonicBalance::new(cfg, settings);
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    let mut previous: Option<(f64, DVector<f64>)> = None;

    for &a in &grid {
        let guess = match &previous {
            Some((_, x)) => x.clone(),
            None => hb.linear_guess(),
        };
        match hb.solve_with_substeps(previous.as_ref().map(|p| p.0), a, guess) {
            Ok((x, residual)) => {
                solutions.push(hb.solution(a, &x, residual));
                previous = Some((a, x));
            }
            Err(e) => failures.push((a, e)),
        }
    }
    Ok(OracleBackbone {
        solutions,
        failures,
    })
}

/// Unknowns in normalized form: per mode `[c0, c1, s1, ..., cH, sH] / a`,
/// then `Omega / w1` and `F / (w1^2 a)`.
struct HarmonicBalance<'a> {
    cfg: &'a PlantConfig,
    h: usize,
    n: usize,
    tol: f64,
    max_iter: usize,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl<'a> HarmonicBalance<'a> {
    fn new(cfg: &'a PlantConfig, s: &OracleSettings) -> Self {
        let n = s.samples;
        let tau = |j: usize| 2.0 * PI * j as f64 / n as f64;
        let cos = (0..=s.harmonics)
            .map(|h| (0..n).map(|j| (h as f64 * tau(j)).cos()).collect())
            .collect();
        let sin = (0..=s.harmonics)
            .map(|h| (0..n).map(|j| (h as f64 * tau(j)).sin()).collect())
            .collect();
        Self {
            cfg,
            h: s.harmonics,
            n,
            tol: s.tolerance,
            max_iter: s.max_iterations,
            cos,
            sin,
        }
    }

    fn block(&self) -> usize {
        2 * self.h + 1
    }

    fn dim(&self) -> usize {
        MODES * self.block() + 2
    }

    fn linear_guess(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        let e1 = self.cfg.e_factors[0];
        x[1] = 1.0;
        x[MODES * self.block()] = 1.0;
        x[MODES * self.block() + 1] = 2.0 * self.cfg.d1 * e1 / (e1 * self.cfg.b_factors[0]);
        x
    }

    /// Time samples of displacement, tau-derivative and second tau-derivative.
    fn synthesize(&self, x: &DVector<f64>, m: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let off = m * self.block();
        let mut q = vec![x[off]; self.n];
        let mut dq = vec![0.0; self.n];
        let mut ddq = vec![0.0; self.n];
        for h in 1..=self.h {
            let c = x[off + 2 * h - 1];
            let s = x[off + 2 * h];
            let hf = h as f64;
            for j in 0..self.n {
                let (cj, sj) = (self.cos[h][j], self.sin[h][j]);
                q[j] += c * cj + s * sj;
                dq[j] += hf * (-c * sj + s * cj);
                ddq[j] -= hf * hf * (c * cj + s * sj);
            }
        }
        (q, dq, ddq)
    }

    /// Normalized residual for amplitude `a`.
    fn residual(&self, a: f64, x: &DVector<f64>) -> DVector<f64> {
        let cfg = self.cfg;
        let w1 = cfg.omega1;
        let om = x[MODES * self.block()] * w1;
        let force = x[MODES * self.block() + 1] * w1 * w1 * a;
        let scale = 1.0 / (w1 * w1 * a);

        let modes: Vec<_> = (0..MODES).map(|m| self.synthesize(x, m)).collect();
        let mut r = DVector::zeros(self.dim());
        let w = cfg.omegas();
        let d = cfg.dampings();

        for m in 0..MODES {
            let (q, dq, ddq) = &modes[m];
            let mut time = vec![0.0; self.n];
            for j in 0..self.n {
                let eta = [modes[0].0[j] * a, modes[1].0[j] * a];
                let eta_dot = [modes[0].1[j] * a * om, modes[1].1[j] * a * om];
                let g = cfg.nonlinear_forces(&eta, &eta_dot)[m];
                let lin = om * om * ddq[j] * a
                    + 2.0 * d[m] * w[m] * om * dq[j] * a
                    + w[m] * w[m] * q[j] * a;
                time[j] = (lin + g + cfg.b_factors[m] * force * self.sin[1][j]) * scale;
            }
            let off = m * self.block();
            let inv = 1.0 / self.n as f64;
            r[off] = time.iter().sum::<f64>() * inv;
            for h in 1..=self.h {
                let (mut rc, mut rs) = (0.0, 0.0);
                for j in 0..self.n {
                    rc += time[j] * self.cos[h][j];
                    rs += time[j] * self.sin[h][j];
                }
                r[off + 2 * h - 1] = 2.0 * rc * inv;
                r[off + 2 * h] = 2.0 * rs * inv;
            }
        }

        // Q_1 = e.(c1 - i s1) must be real and equal to e_1 * a.
        let e = cfg.e_factors;
        let b = self.block();
        r[MODES * b] = e[0] * x[2] + e[1] * x[b + 2];
        r[MODES * b + 1] = (e[0] * x[1] + e[1] * x[b + 1]) / e[0] - 1.0;
        r
    }

    fn jacobian(&self, a: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let dim = self.dim();
        let mut jac = DMatrix::zeros(dim, dim);
        let eps = 1e-7;
        let mut xp = x.clone();
        for k in 0..dim {
            let orig = xp[k];
            xp[k] = orig + eps;
            let rp = self.residual(a, &xp);
            xp[k] = orig - eps;
            let rm = self.residual(a, &xp);
            xp[k] = orig;
            jac.set_column(k, &((rp - rm) / (2.0 * eps)));
        }
        jac
    }

    fn newton(&self, a: f64, mut x: DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let mut res = self.residual(a, &x);
        let mut norm = res.amax();
        for _ in 0..self.max_iter {
            if norm < self.tol {
                return Ok((x, norm));
            }
            let jac = self.jacobian(a, &x);
            let delta = jac
                .lu()
                .solve(&(-&res))
                .ok_or(Error::NoConvergence {
                    amplitude: a,
                    residual: norm,
                })?;
            // backtracking on the max-norm
            let mut lambda = 1.0;
            loop {
                let trial = &x + &delta * lambda;
                let r_trial = self.residual(a, &trial);
                let n_trial = r_trial.amax();
                if n_trial.is_finite() && (n_trial < norm || lambda < 1e-3) {
                    x = trial;
                    res = r_trial;
                    norm = n_trial;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if norm < self.tol {
            Ok((x, norm))
        } else {
            Err(Error::NoConvergence {
                amplitude: a,
                residual: norm,
            })
        }
    }

    fn solve_with_substeps(
        &self,
        from: Option<f64>,
        to: f64,
        guess: DVector<f64>,
    ) -> Result<(DVector<f64>, f64)> {
        match self.newton(to, guess.clone()) {
            Ok(sol) => Ok(sol),
            Err(err) => {
                let Some(start) = from else { return Err(err) };
                // bisect the continuation step
                let mut x = guess;
                let steps = 16;
                let mut last = Err(err);
                for k in 1..=steps {
                    let a = start + (to - start) * k as f64 / steps as f64;
                    last = self.newton(a, x.clone());
                    match &last {
                        Ok((xs, _)) => x = xs.clone(),
                        Err(_) => break,
                    }
                }
                last
            }
        }
    }

    fn solution(&self, a: f64, x: &DVector<f64>, residual: f64) -> OracleSolution {
        let cfg = self.cfg;
        let b = self.block();
        let omega = x[MODES * b] * cfg.omega1;
        let forcing = x[MODES * b + 1] * cfg.omega1 * cfg.omega1 * a;
        let coeffs = |m: usize| -> Vec<Complex64> {
            let off = m * b;
            let mut v = vec![Complex64::new(x[off] * a, 0.0)];
            for h in 1..=self.h {
                v.push(Complex64::new(x[off + 2 * h - 1], -x[off + 2 * h]) * a);
            }
            v
        };
        let modal_coeffs = [coeffs(0), coeffs(1)];
        let e = cfg.e_factors;
        let metric = (1..=self.h)
            .map(|h| (modal_coeffs[0][h] * e[0] + modal_coeffs[1][h] * e[1]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        // Fundamental power balance of mode 1: base force -b1 F sin = Re(i b1 F e^{it}).
        let f_hat = Complex64::new(0.0, cfg.b_factors[0] * forcing);
        let v_hat = Complex64::new(0.0, omega) * modal_coeffs[0][1];
        let power = 0.5 * (f_hat * v_hat.conj()).re;
        let damping = power / (omega.powi(3) * a * a);
        OracleSolution {
            modal_amplitude: a,
            omega,
            damping,
            forcing,
            amplitude_metric: metric,
            modal_coeffs,
            residual,
        }
    }
}

/// Evenly spaced modal-amplitude grid on `[lo, hi]`.
pub fn amplitude_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_plant_gives_flat_backbone() {
        let cfg = PlantConfig::linear();
        let out = calibrate_backbone(&cfg, &[1e-4, 1e-3, 2e-3]).unwrap();
        assert!(out.failures.is_empty());
        for s in &out.solutions {
            assert_relative_eq!(s.omega, cfg.omega1, max_relative = 1e-9);
            assert_relative_eq!(s.damping, cfg.d1, max_relative = 1e-9);
            assert!(s.residual < 1e-8);
        }
    }

    #[test]
    fn small_amplitude_limit_recovers_linear_modal_data() {
        let cfg = PlantConfig::aligned();
        let out = calibrate_backbone(&cfg, &[1e-6]).unwrap();
        let s = &out.solutions[0];
        assert_relative_eq!(s.omega, cfg.omega1, max_relative = 1e-4);
        assert_relative_eq!(s.damping, cfg.d1, max_relative = 1e-4);
    }

    #[test]
    fn hardening_matches_first_order_perturbation() {
        let lin = PlantConfig::linear();
        let w1 = lin.omega1;
        let cfg = PlantConfig {
            gamma: 0.02 * w1 * w1 / 1e-6,
            ..lin
        };
        let a = 1e-4;
        let out = calibrate_backbone(&cfg, &[a]).unwrap();
        let expected = w1 * (1.0 + 3.0 * cfg.gamma * a * a / (8.0 * w1 * w1));
        // first-order formula is accurate to O(eps^2), eps = 3 gamma a^2 / (8 w^2)
        let shift = expected / w1 - 1.0;
        let err = ((out.solutions[0].omega - expected) / w1).abs();
        assert!(err < 2.0 * shift * shift, "{err:e} vs {:e}", shift * shift);
        assert!(out.solutions[0].omega > w1);
    }

    #[test]
    fn default_plant_softens_then_hardens() {
        let cfg = PlantConfig::aligned();
        let grid = amplitude_grid(0.05e-3, 2.5e-3, 40);
        let out = calibrate_backbone(&cfg, &grid).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        let w: Vec<f64> = out.solutions.iter().map(|s| s.omega).collect();
        let (imin, wmin) = w
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(imin > 0 && imin < w.len() - 1);
        assert!(wmin < 0.99 * cfg.omega1);
        assert!(*w.last().unwrap() > wmin * 1.01);
    }
}
