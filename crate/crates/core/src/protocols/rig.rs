//! Closed-loop simulation of plant, exciter, demodulators and controllers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::control::{AmplitudeController, Pll, QualityThresholds, WindowStats};
use crate::dsp::{
    fourier_coeffs, integrate_velocity, wrap_phase, Demodulator, HarmonicSpectrum, Window,
    DEFAULT_ORDER,
};
use crate::error::{Error, Result};
use crate::exciter::{interpolate_step, Exciter, ExciterConfig};
use crate::plant::{self, PlantConfig, PlantState, MODES};

/// Controller and measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// Sampling interval of controller and plant (s).
    pub dt: f64,
    /// PLL centre frequency (Hz); the plant's linear bending frequency if absent.
    pub center_freq_hz: Option<f64>,
    /// PLL proportional gain ((rad/s)/rad).
    pub pll_kp: f64,
    /// PLL integral gain ((rad/s)/(rad s)).
    pub pll_ki: f64,
    /// Fractional range of the PLL correction around the centre.
    pub pll_span: f64,
    /// Demodulator lowpass cutoff as a fraction of the centre frequency.
    pub demod_cutoff_ratio: f64,
    /// Response amplitude loop (V/m, V/(m s)).
    pub rct_kp: f64,
    pub rct_ki: f64,
    /// Base acceleration loop (V/(m/s^2), V/(m/s^2 s)).
    pub ect_kp: f64,
    pub ect_ki: f64,
    pub v_max: f64,
    pub thresholds: QualityThresholds,
    /// Standard deviation of additive sensor noise, relative to signal units.
    pub accel_noise: f64,
    pub velocity_noise: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            center_freq_hz: None,
            pll_kp: 10.0,
            pll_ki: 30.0,
            pll_span: 0.3,
            demod_cutoff_ratio: 0.1,
            rct_kp: 1_000.0,
            rct_ki: 2_500.0,
            ect_kp: 0.0,
            ect_ki: 0.75,
            v_max: 10.0,
            thresholds: QualityThresholds::default(),
            accel_noise: 0.0,
            velocity_noise: 0.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self, plant: &PlantConfig) -> Result<()> {
        let limit = plant.max_step();
        if !(self.dt > 0.0) || self.dt > limit {
            return Err(Error::StepTooLarge {
                dt: self.dt,
                limit,
            });
        }
        let finite = [
            self.pll_kp,
            self.pll_ki,
            self.pll_span,
            self.demod_cutoff_ratio,
            self.rct_kp,
            self.rct_ki,
            self.ect_kp,
            self.ect_ki,
            self.v_max,
        ];
        if finite.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidConfig("controller gains must be finite and non-negative".into()));
        }
        if !(self.demod_cutoff_ratio > 0.0 && self.demod_cutoff_ratio < 0.5) {
            return Err(Error::InvalidConfig("demod_cutoff_ratio outside (0, 0.5)".into()));
        }
        if let Some(f) = self.center_freq_hz {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidConfig(format!("center_freq_hz {f}")));
            }
        }
        if !(self.accel_noise >= 0.0 && self.velocity_noise >= 0.0) {
            return Err(Error::InvalidConfig("noise levels must be non-negative".into()));
        }
        Ok(())
    }

    pub fn center(&self, plant: &PlantConfig) -> f64 {
        self.center_freq_hz
            .map(|f| 2.0 * PI * f)
            .unwrap_or(plant.omega1)
    }
}

/// What the amplitude channel regulates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// Fixed voltage amplitude (V).
    Voltage(f64),
    /// Response displacement amplitude (m).
    Response(f64),
    /// Base acceleration amplitude (m/s^2).
    Base(f64),
}

/// Recorded signals of the current hold.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub t0: f64,
    pub base_accel: Vec<f64>,
    pub resp_vel: Vec<f64>,
    pub eta: [Vec<f64>; MODES],
    pub eta_dot: [Vec<f64>; MODES],
    pub inst_freq: Vec<f64>,
    pub lag: Vec<f64>,
    pub ctrl_amp: Vec<f64>,
    pub voltage: Vec<f64>,
}

impl Trace {
    fn clear(&mut self, t0: f64) {
        self.t0 = t0;
        for v in [
            &mut self.base_accel,
            &mut self.resp_vel,
            &mut self.inst_freq,
            &mut self.lag,
            &mut self.ctrl_amp,
            &mut self.voltage,
        ] {
            v.clear();
        }
        for m in 0..MODES {
            self.eta[m].clear();
            self.eta_dot[m].clear();
        }
    }

    pub fn len(&self) -> usize {
        self.inst_freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inst_freq.is_empty()
    }
}

/// One telemetry row, decimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelemetryRow {
    pub t: f64,
    pub inst_freq: f64,
    pub phase_err: f64,
    pub amp_err: f64,
    pub voltage: f64,
}

/// Spectra and statistics of an analysed window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAnalysis {
    pub omega: f64,
    pub response: HarmonicSpectrum,
    pub response_velocity: HarmonicSpectrum,
    pub base: HarmonicSpectrum,
    pub base_accel: HarmonicSpectrum,
    pub modal: [HarmonicSpectrum; MODES],
    pub direct_energy: f64,
    pub stats: WindowStats,
    pub mean_voltage: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// The simulated test rig.
#[derive(Debug, Clone)]
pub struct Rig {
    plant: PlantConfig,
    state: PlantState,
    exciter: Exciter,
    ctrl: ControlConfig,
    pll: Pll,
    demod_accel: Demodulator,
    demod_vel: Demodulator,
    amp_ctrl: AmplitudeController,
    drive: Drive,
    target_lag: f64,
    phase_locked: bool,
    voltage: f64,
    last_amp: f64,
    last_base_amp: f64,
    recording: bool,
    trace: Trace,
    telemetry: Option<(usize, Vec<TelemetryRow>)>,
    noise: Option<(ChaCha8Rng, Normal<f64>)>,
    steps: u64,
}

impl Rig {
    pub fn new(plant: PlantConfig, exciter: ExciterConfig, ctrl: ControlConfig, seed: u64) -> Result<Self> {
        plant.validate()?;
        ctrl.validate(&plant)?;
        let center = ctrl.center(&plant);
        let fs = 1.0 / ctrl.dt;
        let cutoff = ctrl.demod_cutoff_ratio * center / (2.0 * PI);
        let noise = (ctrl.accel_noise > 0.0 || ctrl.velocity_noise > 0.0).then(|| {
            (
                ChaCha8Rng::seed_from_u64(seed),
                Normal::new(0.0, 1.0).expect("unit normal"),
            )
        });
        Ok(Self {
            plant,
            state: PlantState::at_rest(),
            exciter: Exciter::new(exciter)?,
            ctrl,
            pll: Pll::new(center, ctrl.pll_kp, ctrl.pll_ki, ctrl.pll_span),
            demod_accel: Demodulator::new(cutoff, fs),
            demod_vel: Demodulator::new(cutoff, fs),
            amp_ctrl: AmplitudeController::new(ctrl.rct_kp, ctrl.rct_ki, ctrl.v_max),
            drive: Drive::Voltage(0.0),
            target_lag: FRAC_PI_2,
            phase_locked: true,
            voltage: 0.0,
            last_amp: 0.0,
            last_base_amp: 0.0,
            recording: false,
            trace: Trace::default(),
            telemetry: None,
            noise,
            steps: 0,
        })
    }

    pub fn plant(&self) -> &PlantConfig {
        &self.plant
    }

    pub fn control(&self) -> &ControlConfig {
        &self.ctrl
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn exciter(&self) -> &Exciter {
        &self.exciter
    }

    /// Carry the exciter (and its drift clock) over from a previous rig.
    pub fn with_exciter(mut self, exciter: Exciter) -> Self {
        self.exciter = exciter;
        self
    }

    pub fn into_exciter(self) -> Exciter {
        self.exciter
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn dt(&self) -> f64 {
        self.ctrl.dt
    }

    pub fn inst_freq(&self) -> f64 {
        self.pll.inst_freq()
    }

    pub fn voltage(&self) -> f64 {
        self.voltage
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Demodulated response displacement amplitude.
    pub fn response_amplitude(&self) -> f64 {
        self.last_amp
    }

    pub fn base_amplitude(&self) -> f64 {
        self.last_base_amp
    }

    pub fn enable_telemetry(&mut self, every: usize) {
        self.telemetry = Some((every.max(1), Vec::new()));
    }

    pub fn take_telemetry(&mut self) -> Vec<TelemetryRow> {
        self.telemetry
            .as_mut()
            .map(|(_, rows)| std::mem::take(rows))
            .unwrap_or_default()
    }

    pub fn set_target_lag(&mut self, lag: f64) {
        self.target_lag = lag;
        self.phase_locked = true;
    }

    pub fn target_lag(&self) -> f64 {
        self.target_lag
    }

    /// Open the phase loop and hold the excitation frequency.
    pub fn hold_frequency(&mut self, omega: f64) {
        self.pll.hold_at(omega);
        self.phase_locked = false;
    }

    pub fn set_drive(&mut self, drive: Drive) {
        let switched = std::mem::discriminant(&drive) != std::mem::discriminant(&self.drive);
        if switched {
            let (kp, ki) = match drive {
                Drive::Response(_) => (self.ctrl.rct_kp, self.ctrl.rct_ki),
                Drive::Base(_) => (self.ctrl.ect_kp, self.ctrl.ect_ki),
                Drive::Voltage(_) => (0.0, 0.0),
            };
            self.amp_ctrl = AmplitudeController::new(kp, ki, self.ctrl.v_max).primed(self.voltage);
        }
        self.drive = drive;
    }

    /// Return the structure to rest and restart the loops, keeping the drift clock.
    pub fn restart(&mut self) {
        self.state = PlantState {
            t: self.state.t,
            ..PlantState::at_rest()
        };
        self.exciter.settle();
        let center = self.pll.center();
        self.pll = Pll::new(center, self.ctrl.pll_kp, self.ctrl.pll_ki, self.ctrl.pll_span);
        self.demod_accel.reset();
        self.demod_vel.reset();
        self.voltage = 0.0;
        let gains = self.amp_ctrl.gains();
        self.amp_ctrl = AmplitudeController::new(gains.kp, gains.ki, self.ctrl.v_max);
    }

    pub fn start_recording(&mut self) {
        self.trace.clear(self.state.t + self.ctrl.dt);
        self.recording = true;
    }

    pub fn stop_recording(&mut self) {
        self.recording = false;
    }

    /// Whether the PLL correction sits on its clamp.
    pub fn pll_saturated(&self) -> bool {
        let span = self.ctrl.pll_span * self.pll.center();
        (self.pll.inst_freq() - self.pll.center()).abs() >= span * (1.0 - 1e-9)
    }

    /// Advance the closed loop by `n` samples.
    pub fn run_steps(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.tick()?;
        }
        Ok(())
    }

    pub fn run_for(&mut self, seconds: f64) -> Result<()> {
        let n = (seconds / self.ctrl.dt).round().max(0.0) as usize;
        self.run_steps(n)
    }

    #[inline]
    fn tick(&mut self) -> Result<()> {
        let dt = self.ctrl.dt;
        let w = self.pll.inst_freq();
        let phi = self.pll.carrier_phase();
        let vh = self.voltage;
        let v = [
            vh * phi.cos(),
            vh * (phi + 0.5 * w * dt).cos(),
            vh * (phi + w * dt).cos(),
        ];
        let acc = self.exciter.advance(v, dt);
        let t0 = self.state.t;
        let next = plant::rk4(&self.state, &|t| interpolate_step(acc, t0, dt, t), dt, &self.plant);
        if !next.is_finite() {
            return Err(Error::NonFinite("integrated plant state"));
        }
        self.state = next;
        self.steps += 1;

        self.pll.coast(dt);
        let phi1 = self.pll.carrier_phase();
        let mut a_meas = acc[2];
        let mut v_meas = plant::response_velocity(&self.state, &self.plant);
        if let Some((rng, normal)) = self.noise.as_mut() {
            a_meas += self.ctrl.accel_noise * normal.sample(rng);
            v_meas += self.ctrl.velocity_noise * normal.sample(rng);
        }
        let da = self.demod_accel.demodulate(a_meas, phi1);
        let dv = self.demod_vel.demodulate(v_meas, phi1);
        // response velocity lag behind base velocity
        let lag = wrap_phase(da.phase - FRAC_PI_2 - dv.phase);
        if self.phase_locked {
            self.pll.correct(lag, self.target_lag, dt);
        }
        let w1 = self.pll.inst_freq();
        self.last_amp = dv.amp / w1;
        self.last_base_amp = da.amp;
        let (ctrl_amp, amp_err) = match self.drive {
            Drive::Voltage(v0) => {
                self.voltage = v0;
                (self.last_amp, 0.0)
            }
            Drive::Response(target) => {
                self.voltage = self.amp_ctrl.amplitude_controller_step(self.last_amp, target, dt);
                (self.last_amp, target - self.last_amp)
            }
            Drive::Base(target) => {
                self.voltage = self.amp_ctrl.amplitude_controller_step(da.amp, target, dt);
                (da.amp, target - da.amp)
            }
        };

        if self.recording {
            let tr = &mut self.trace;
            tr.base_accel.push(a_meas);
            tr.resp_vel.push(v_meas);
            for m in 0..MODES {
                tr.eta[m].push(self.state.eta[m]);
                tr.eta_dot[m].push(self.state.eta_dot[m]);
            }
            tr.inst_freq.push(w1);
            tr.lag.push(lag);
            tr.ctrl_amp.push(ctrl_amp);
            tr.voltage.push(self.voltage);
        }
        if let Some((every, rows)) = self.telemetry.as_mut() {
            if self.steps % *every as u64 == 0 {
                rows.push(TelemetryRow {
                    t: self.state.t,
                    inst_freq: w1 / (2.0 * PI),
                    phase_err: wrap_phase(self.target_lag - lag),
                    amp_err,
                    voltage: self.voltage,
                });
            }
        }
        Ok(())
    }

    /// Statistics of the trailing `n` recorded samples.
    pub fn trailing_stats(&self, n: usize, amp_target: Option<f64>) -> WindowStats {
        let tr = &self.trace;
        let start = tr.len().saturating_sub(n);
        WindowStats::compute(
            &tr.ctrl_amp[start..],
            amp_target,
            &tr.inst_freq[start..],
            &tr.lag[start..],
            self.target_lag,
        )
    }

    /// Number of samples spanning `periods` at the present frequency.
    pub fn samples_for_periods(&self, periods: f64) -> usize {
        (periods * 2.0 * PI / (self.pll.inst_freq() * self.ctrl.dt)).ceil() as usize
    }

    /// Harmonic analysis of the trailing `n` recorded samples, trimmed to a
    /// whole number of periods of the mean instantaneous frequency.
    pub fn analyze_trailing(&self, n: usize, amp_target: Option<f64>) -> Result<WindowAnalysis> {
        let tr = &self.trace;
        let dt = self.ctrl.dt;
        let n = n.min(tr.len());
        if n == 0 {
            return Err(Error::InsufficientData("empty trace".into()));
        }
        let mut start = tr.len() - n;
        let omega = tr.inst_freq[start..].iter().sum::<f64>() / n as f64;
        let period_samples = 2.0 * PI / (omega * dt);
        let whole = (n as f64 / period_samples).floor();
        let trimmed = ((whole * period_samples).round() as usize).clamp(1, n);
        start = tr.len() - trimmed;
        let t_start = tr.t0 + start as f64 * dt;
        let win = |x: &'_ [f64]| -> Vec<f64> { x[start..].to_vec() };
        let fit = |x: &[f64]| fourier_coeffs(&Window::new(x, t_start, dt), omega, DEFAULT_ORDER);

        let base_accel = fit(&tr.base_accel[start..])?;
        let response_velocity = fit(&tr.resp_vel[start..])?;
        let response = integrate_velocity(&response_velocity).spectrum;
        let base = base_displacement(&base_accel);
        let mut modal = Vec::with_capacity(MODES);
        let mut direct_energy = 0.0;
        for m in 0..MODES {
            let vel = fit(&tr.eta_dot[m][start..])?;
            modal.push(integrate_velocity(&vel).spectrum);
            let x = win(&tr.eta[m]);
            let v = &tr.eta_dot[m][start..];
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let w = self.plant.omegas()[m];
            let e: f64 = x
                .iter()
                .zip(v)
                .map(|(xi, vi)| 0.5 * vi * vi + 0.5 * w * w * (xi - mean) * (xi - mean))
                .sum();
            direct_energy += e / x.len() as f64;
        }
        let stats = WindowStats::compute(
            &tr.ctrl_amp[start..],
            amp_target,
            &tr.inst_freq[start..],
            &tr.lag[start..],
            self.target_lag,
        );
        let mean_voltage = tr.voltage[start..].iter().sum::<f64>() / trimmed as f64;
        let modal: [HarmonicSpectrum; MODES] = modal.try_into().expect("two modes");
        Ok(WindowAnalysis {
            omega,
            response,
            response_velocity,
            base,
            base_accel,
            modal,
            direct_energy,
            stats,
            mean_voltage,
            t_start,
            t_end: tr.t0 + tr.len() as f64 * dt,
        })
    }
}

/// `q_b,h = -A_h / (h Omega)^2`, mean dropped.
pub fn base_displacement(accel: &HarmonicSpectrum) -> HarmonicSpectrum {
    let w = accel.omega;
    let c = accel
        .coeffs()
        .iter()
        .enumerate()
        .map(|(h, a)| {
            if h == 0 {
                num_complex::Complex64::default()
            } else {
                -a / (h as f64 * w).powi(2)
            }
        })
        .collect();
    HarmonicSpectrum::new(w, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_rig() -> Rig {
        Rig::new(
            PlantConfig::linear(),
            ExciterConfig::ideal(4.0),
            ControlConfig::default(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn pll_locks_linear_plant_at_resonance() {
        let mut rig = linear_rig();
        rig.set_drive(Drive::Voltage(1.0));
        rig.run_for(8.0).unwrap();
        rig.start_recording();
        rig.run_for(4.0).unwrap();
        let n = rig.trace().len();
        let s = rig.trailing_stats(n, None);
        let w1 = PlantConfig::linear().omega1;
        assert!((s.mean_freq - w1).abs() < 1e-4 * w1, "{} vs {}", s.mean_freq, w1);
        assert!(s.phase_std_deg < 2.0);
        assert!(s.freq_std_hz < 0.35);
    }

    #[test]
    fn lock_from_offset_centre() {
        for off in [-0.1, -0.05, 0.05, 0.1] {
            let plant = PlantConfig::linear();
            let ctrl = ControlConfig {
                center_freq_hz: Some(101.0 * (1.0 + off)),
                ..ControlConfig::default()
            };
            let mut rig = Rig::new(plant, ExciterConfig::ideal(4.0), ctrl, 0).unwrap();
            rig.set_drive(Drive::Voltage(1.0));
            rig.run_for(12.0).unwrap();
            rig.start_recording();
            rig.run_for(3.0).unwrap();
            let s = rig.trailing_stats(rig.trace().len(), None);
            assert!(
                (s.mean_freq - plant.omega1).abs() < 1e-4 * plant.omega1,
                "offset {off}: {}",
                s.mean_freq / (2.0 * PI)
            );
        }
    }

    #[test]
    fn response_controller_reaches_target() {
        let mut rig = linear_rig();
        rig.set_drive(Drive::Response(1e-3));
        rig.run_for(12.0).unwrap();
        rig.start_recording();
        rig.run_for(2.0).unwrap();
        let s = rig.trailing_stats(rig.trace().len(), Some(1e-3));
        assert!((s.mean_amp - 1e-3).abs() < 1e-3 * 1e-3, "{}", s.mean_amp);
    }

    #[test]
    fn base_controller_reaches_target() {
        let mut rig = linear_rig();
        rig.set_drive(Drive::Base(3.0));
        rig.set_target_lag(60f64.to_radians());
        rig.run_for(12.0).unwrap();
        rig.start_recording();
        rig.run_for(2.0).unwrap();
        let a = rig.analyze_trailing(rig.trace().len(), Some(3.0)).unwrap();
        assert!((a.base_accel.coeff(1).norm() - 3.0).abs() < 3e-3);
    }

    #[test]
    fn steady_window_matches_linear_frf() {
        let mut rig = linear_rig();
        rig.set_drive(Drive::Voltage(1.0));
        rig.set_target_lag(80f64.to_radians());
        rig.run_for(10.0).unwrap();
        rig.start_recording();
        rig.run_for(2.0).unwrap();
        let a = rig.analyze_trailing(rig.trace().len(), None).unwrap();
        let frf = a.response.coeff(1) / a.base.coeff(1);
        let expected = PlantConfig::linear().linear_frf(a.omega);
        assert!((frf - expected).norm() < 1e-3 * expected.norm());
        // reconstruction of the analysed window
        let tr = rig.trace();
        let n = tr.len();
        let k0 = n - 5000;
        let mut err = 0.0;
        let mut rms = 0.0;
        for k in k0..n {
            let t = tr.t0 + k as f64 * rig.dt();
            err += (a.response_velocity.reconstruct(t) - tr.resp_vel[k]).powi(2);
            rms += tr.resp_vel[k].powi(2);
        }
        assert!((err / rms).sqrt() < 0.01);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut rig = Rig::new(
                PlantConfig::aligned(),
                ExciterConfig::default(),
                ControlConfig {
                    accel_noise: 0.01,
                    ..ControlConfig::default()
                },
                7,
            )
            .unwrap();
            rig.set_drive(Drive::Voltage(1.5));
            rig.run_for(1.0).unwrap();
            *rig.state()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.eta[0].to_bits(), b.eta[0].to_bits());
        assert_eq!(a.eta_dot[1].to_bits(), b.eta_dot[1].to_bits());
    }
}
