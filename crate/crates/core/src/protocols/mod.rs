//! Test procedures: phase resonance, phase-stepped response control and
//! phase-stepped excitation control.

mod rig;

pub use rig::{
    base_displacement, ControlConfig, Drive, Rig, TelemetryRow, Trace, WindowAnalysis,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::control::{QualityThresholds, WindowStats};
use crate::dsp::HarmonicSpectrum;
use crate::error::{Error, Result};
use crate::exciter::{Exciter, ExciterConfig};
use crate::ident::Direction;
use crate::plant::{PlantConfig, MODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Prt,
    Rct,
    Ect,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Prt => "prt",
            ProtocolKind::Rct => "rct",
            ProtocolKind::Ect => "ect",
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prt" => Ok(ProtocolKind::Prt),
            "rct" => Ok(ProtocolKind::Rct),
            "ect" => Ok(ProtocolKind::Ect),
            other => Err(Error::InvalidConfig(format!("unknown protocol {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrtConfig {
    /// Voltage amplitude range (V).
    pub v_min: f64,
    pub v_max: f64,
    pub levels: usize,
    /// Hold per level (s).
    pub hold: f64,
    /// Fraction of each hold analysed, taken from its end.
    pub analysis_fraction: f64,
}

impl Default for PrtConfig {
    fn default() -> Self {
        Self {
            v_min: 0.45,
            v_max: 2.6,
            levels: 45,
            hold: 16.0,
            analysis_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RctConfig {
    /// Response amplitude range (m).
    pub amp_min: f64,
    pub amp_max: f64,
    pub levels: usize,
    /// Phase lag range (deg).
    pub phase_min: f64,
    pub phase_max: f64,
    pub points: usize,
}

impl Default for RctConfig {
    fn default() -> Self {
        Self {
            amp_min: 0.2e-3,
            amp_max: 1.4e-3,
            levels: 10,
            phase_min: 75.0,
            phase_max: 105.0,
            points: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EctConfig {
    /// Base acceleration amplitude range (m/s^2).
    pub accel_min: f64,
    pub accel_max: f64,
    pub levels: usize,
    pub phase_min: f64,
    pub phase_max: f64,
    pub points: usize,
}

impl Default for EctConfig {
    fn default() -> Self {
        Self {
            accel_min: 1.0,
            accel_max: 5.0,
            levels: 5,
            phase_min: 40.0,
            phase_max: 140.0,
            points: 40,
        }
    }
}

/// Settling policy for the phase-stepped protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SettleConfig {
    /// Dwell before the first steadiness check (s).
    pub min_dwell: f64,
    /// Time between checks (s).
    pub check_interval: f64,
    /// Trailing window for checks and analysis (fundamental periods).
    pub window_periods: f64,
    /// Give up and flag the point after this long (s).
    pub timeout: f64,
}

impl Default for SettleConfig {
    fn default() -> Self {
        Self {
            min_dwell: 6.0,
            check_interval: 1.0,
            window_periods: 100.0,
            timeout: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub prt: PrtConfig,
    pub rct: RctConfig,
    pub ect: EctConfig,
    pub settle: SettleConfig,
    /// Multiplier on every hold, dwell and timeout; 0.1 compresses 10x.
    pub time_scale: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            prt: PrtConfig::default(),
            rct: RctConfig::default(),
            ect: EctConfig::default(),
            settle: SettleConfig::default(),
            time_scale: 1.0,
        }
    }
}

impl ProtocolConfig {
    pub fn table() -> Self {
        Self::default()
    }

    pub fn compressed(factor: f64) -> Self {
        Self {
            time_scale: 1.0 / factor,
            ..Self::table()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range = |name: &str, lo: f64, hi: f64, n: usize| -> Result<()> {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidConfig(format!("{name}: degenerate range [{lo}, {hi}]")));
            }
            if n < 2 {
                return Err(Error::InvalidConfig(format!("{name}: need at least 2 levels, got {n}")));
            }
            Ok(())
        };
        range("prt voltage", self.prt.v_min, self.prt.v_max, self.prt.levels)?;
        range("rct amplitude", self.rct.amp_min, self.rct.amp_max, self.rct.levels)?;
        range("rct phase", self.rct.phase_min, self.rct.phase_max, self.rct.points)?;
        range("ect acceleration", self.ect.accel_min, self.ect.accel_max, self.ect.levels)?;
        range("ect phase", self.ect.phase_min, self.ect.phase_max, self.ect.points)?;
        if self.prt.v_min < 0.0 || self.rct.amp_min <= 0.0 || self.ect.accel_min <= 0.0 {
            return Err(Error::InvalidConfig("levels must be positive".into()));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("time_scale {}", self.time_scale)));
        }
        if !(self.prt.hold > 0.0 && self.prt.analysis_fraction > 0.0 && self.prt.analysis_fraction <= 1.0) {
            return Err(Error::InvalidConfig("prt hold/analysis_fraction".into()));
        }
        let s = &self.settle;
        if !(s.min_dwell >= 0.0 && s.check_interval > 0.0 && s.timeout >= s.min_dwell && s.window_periods >= 10.0) {
            return Err(Error::InvalidConfig("settle policy".into()));
        }
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Control-error statistics and the acceptance verdict of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub amp_dev_pct: f64,
    pub freq_std_hz: f64,
    pub phase_std_deg: f64,
    pub phase_err_deg: f64,
    pub accepted: bool,
    /// Reason the point could not be brought to steady state.
    pub flag: Option<String>,
}

impl Quality {
    pub fn from_stats(s: &WindowStats, thresholds: &QualityThresholds, flag: Option<String>) -> Self {
        let accepted = flag.is_none() && thresholds.passes(s.amp_dev_pct, s.freq_std_hz, s.phase_std_deg);
        Self {
            amp_dev_pct: s.amp_dev_pct,
            freq_std_hz: s.freq_std_hz,
            phase_std_deg: s.phase_std_deg,
            phase_err_deg: s.phase_err_deg,
            accepted,
            flag,
        }
    }

    pub fn flagged(reason: impl Into<String>) -> Self {
        Self {
            amp_dev_pct: f64::NAN,
            freq_std_hz: f64::NAN,
            phase_std_deg: f64::NAN,
            phase_err_deg: f64::NAN,
            accepted: false,
            flag: Some(reason.into()),
        }
    }
}

/// One steady state of a test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyRecord {
    pub protocol: ProtocolKind,
    pub level: usize,
    pub point: usize,
    pub direction: Direction,
    /// Voltage (PRT, V), response amplitude (RCT, m) or base acceleration (ECT, m/s^2).
    pub setpoint: f64,
    /// Phase set value (rad).
    pub target_lag: f64,
    /// Mean instantaneous excitation frequency (rad/s).
    pub omega: f64,
    /// Mean measured phase lag (rad).
    pub phase_lag: f64,
    /// Mean voltage amplitude (V).
    pub voltage: f64,
    pub exciter_gain: f64,
    /// Response displacement spectrum.
    pub response: HarmonicSpectrum,
    /// Base displacement spectrum.
    pub base: HarmonicSpectrum,
    pub base_accel: HarmonicSpectrum,
    /// Modal displacement spectra.
    pub modal: [HarmonicSpectrum; MODES],
    /// Time average of kinetic plus linearized potential modal energy.
    pub direct_energy: f64,
    pub quality: Quality,
    pub t_start: f64,
    pub t_end: f64,
}

impl SteadyRecord {
    /// Record with zero spectra, for flagged points and synthetic tests.
    pub fn empty(protocol: ProtocolKind) -> Self {
        let z = HarmonicSpectrum::new(1.0, vec![Complex64::default(); 2]);
        Self {
            protocol,
            level: 0,
            point: 0,
            direction: Direction::Up,
            setpoint: 0.0,
            target_lag: PI / 2.0,
            omega: 0.0,
            phase_lag: 0.0,
            voltage: 0.0,
            exciter_gain: 0.0,
            response: z.clone(),
            base: z.clone(),
            base_accel: z.clone(),
            modal: [z.clone(), z],
            direct_energy: 0.0,
            quality: Quality::flagged("empty"),
            t_start: 0.0,
            t_end: 0.0,
        }
    }

    /// Fundamental-harmonic FRF `q_m,1 / q_b,1`.
    pub fn frf(&self) -> Complex64 {
        self.response.coeff(1) / self.base.coeff(1)
    }

    pub fn amplitude(&self) -> f64 {
        self.response.amplitude_metric()
    }

    pub fn base_accel_amplitude(&self) -> f64 {
        self.base_accel.coeff(1).norm()
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn is_accepted(&self) -> bool {
        self.quality.accepted
    }

    fn from_analysis(
        a: WindowAnalysis,
        protocol: ProtocolKind,
        level: usize,
        point: usize,
        direction: Direction,
        setpoint: f64,
        target_lag: f64,
        exciter_gain: f64,
        quality: Quality,
    ) -> Self {
        Self {
            protocol,
            level,
            point,
            direction,
            setpoint,
            target_lag,
            omega: a.omega,
            phase_lag: a.stats.mean_lag,
            voltage: a.mean_voltage,
            exciter_gain,
            response: a.response,
            base: a.base,
            base_accel: a.base_accel,
            modal: a.modal,
            direct_energy: a.direct_energy,
            quality,
            t_start: a.t_start,
            t_end: a.t_end,
        }
    }
}

/// Records passing every threshold strictly; flagged records never pass.
pub fn quality_filter(records: &[SteadyRecord], thresholds: &QualityThresholds) -> Vec<SteadyRecord> {
    records
        .iter()
        .filter(|r| {
            r.quality.flag.is_none()
                && thresholds.passes(r.quality.amp_dev_pct, r.quality.freq_std_hz, r.quality.phase_std_deg)
        })
        .cloned()
        .collect()
}

/// Everything a protocol run needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub plant: PlantConfig,
    pub exciter: ExciterConfig,
    pub control: ControlConfig,
    pub protocol: ProtocolConfig,
    pub seed: u64,
}

impl Setup {
    pub fn new(plant: PlantConfig, exciter: ExciterConfig, control: ControlConfig, protocol: ProtocolConfig) -> Self {
        Self {
            plant,
            exciter,
            control,
            protocol,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.exciter.validate()?;
        self.control.validate(&self.plant)?;
        self.protocol.validate()
    }

    pub fn rig(&self) -> Result<Rig> {
        self.validate()?;
        Rig::new(self.plant, self.exciter, self.control, self.seed)
    }
}

/// Output of a protocol run: the records and the exciter afterwards,
/// whose drift clock continues into the next run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SteadyRecord>,
    pub exciter: Exciter,
}

fn fresh_rig(setup: &Setup, exciter: Option<Exciter>) -> Result<Rig> {
    let rig = setup.rig()?;
    Ok(match exciter {
        Some(ex) => rig.with_exciter(ex),
        None => rig,
    })
}

/// Phase resonance test: voltage stepped up then down with the PLL at 90 deg.
pub fn run_prt(setup: &Setup) -> Result<Vec<SteadyRecord>> {
    Ok(run_prt_with(setup, None)?.records)
}

pub fn run_prt_with(setup: &Setup, exciter: Option<Exciter>) -> Result<RunOutput> {
    let mut rig = fresh_rig(setup, exciter)?;
    let p = setup.protocol.prt;
    let scale = setup.protocol.time_scale;
    let thresholds = setup.control.thresholds;
    let up = linspace(p.v_min, p.v_max, p.levels);
    let schedule: Vec<(usize, Direction, f64)> = up
        .iter()
        .enumerate()
        .map(|(i, v)| (i, Direction::Up, *v))
        .chain(up.iter().enumerate().rev().map(|(i, v)| (i, Direction::Down, *v)))
        .collect();
    rig.set_target_lag(PI / 2.0);
    let hold = p.hold * scale;
    let analysis = (hold * p.analysis_fraction / rig.dt()).round() as usize;
    let mut records = Vec::with_capacity(schedule.len());
    for (k, (level, dir, v)) in schedule.into_iter().enumerate() {
        rig.set_drive(Drive::Voltage(v));
        rig.stop_recording();
        let run = rig
            .run_for(hold - analysis as f64 * rig.dt())
            .and_then(|_| {
                rig.start_recording();
                rig.run_steps(analysis)
            });
        let rec = match run {
            Err(e) => {
                rig.restart();
                divergent(ProtocolKind::Prt, level, k, dir, v, format!("diverged: {e}"))
            }
            Ok(()) => {
                let flag = rig.pll_saturated().then(|| "pll at frequency limit".to_string());
                let gain = rig.exciter().gain_now();
                let a = rig.analyze_trailing(analysis, None)?;
                let q = Quality::from_stats(&a.stats, &thresholds, flag);
                SteadyRecord::from_analysis(a, ProtocolKind::Prt, level, k, dir, v, PI / 2.0, gain, q)
            }
        };
        records.push(rec);
    }
    Ok(RunOutput {
        records,
        exciter: rig.into_exciter(),
    })
}

fn divergent(kind: ProtocolKind, level: usize, point: usize, dir: Direction, setpoint: f64, why: String) -> SteadyRecord {
    SteadyRecord {
        level,
        point,
        direction: dir,
        setpoint,
        quality: Quality::flagged(why),
        ..SteadyRecord::empty(kind)
    }
}

/// Hold the present set values until the detector passes or the timeout
/// expires, then analyse the trailing window.
fn settle_point(
    rig: &mut Rig,
    settle: &SettleConfig,
    scale: f64,
    amp_target: f64,
    thresholds: &QualityThresholds,
) -> Result<(WindowAnalysis, Option<String>)> {
    rig.start_recording();
    let dwell = settle.min_dwell * scale;
    let timeout = settle.timeout * scale;
    let check = settle.check_interval * scale;
    rig.run_for(dwell)?;
    let mut elapsed = dwell;
    loop {
        let window = rig.samples_for_periods(settle.window_periods);
        if rig.trace().len() >= window {
            let s = rig.trailing_stats(window, Some(amp_target));
            if thresholds.passes(s.amp_dev_pct, s.freq_std_hz, s.phase_std_deg) && !rig.pll_saturated() {
                return Ok((rig.analyze_trailing(window, Some(amp_target))?, None));
            }
        }
        if elapsed >= timeout - 1e-12 {
            let window = rig.samples_for_periods(settle.window_periods);
            let flag = if rig.pll_saturated() {
                "pll at frequency limit"
            } else {
                "not steady before timeout"
            };
            return Ok((rig.analyze_trailing(window, Some(amp_target))?, Some(flag.to_string())));
        }
        let step = check.min(timeout - elapsed).max(rig.dt());
        rig.run_for(step)?;
        elapsed += step;
    }
}

fn run_phase_stepped(
    setup: &Setup,
    exciter: Option<Exciter>,
    kind: ProtocolKind,
    levels: Vec<f64>,
    phases_deg: Vec<f64>,
) -> Result<RunOutput> {
    let mut rig = fresh_rig(setup, exciter)?;
    let settle = setup.protocol.settle;
    let scale = setup.protocol.time_scale;
    let thresholds = setup.control.thresholds;
    let mut records = Vec::with_capacity(levels.len() * phases_deg.len());
    for (level, &target) in levels.iter().enumerate() {
        let drive = match kind {
            ProtocolKind::Rct => Drive::Response(target),
            ProtocolKind::Ect => Drive::Base(target),
            ProtocolKind::Prt => unreachable!("PRT is not phase stepped"),
        };
        for (point, &ph) in phases_deg.iter().enumerate() {
            let lag = ph.to_radians();
            rig.set_target_lag(lag);
            rig.set_drive(drive);
            let rec = match settle_point(&mut rig, &settle, scale, target, &thresholds) {
                Ok((a, flag)) => {
                    let gain = rig.exciter().gain_now();
                    let q = Quality::from_stats(&a.stats, &thresholds, flag);
                    SteadyRecord::from_analysis(a, kind, level, point, Direction::Up, target, lag, gain, q)
                }
                Err(e) => {
                    rig.restart();
                    let mut r = divergent(kind, level, point, Direction::Up, target, format!("diverged: {e}"));
                    r.target_lag = lag;
                    r
                }
            };
            records.push(rec);
        }
    }
    Ok(RunOutput {
        records,
        exciter: rig.into_exciter(),
    })
}

/// Response controlled test with phase stepping.
pub fn run_rct(setup: &Setup) -> Result<Vec<SteadyRecord>> {
    Ok(run_rct_with(setup, None)?.records)
}

pub fn run_rct_with(setup: &Setup, exciter: Option<Exciter>) -> Result<RunOutput> {
    let c = setup.protocol.rct;
    run_phase_stepped(
        setup,
        exciter,
        ProtocolKind::Rct,
        linspace(c.amp_min, c.amp_max, c.levels),
        linspace(c.phase_min, c.phase_max, c.points),
    )
}

/// Excitation controlled test with phase stepping.
pub fn run_ect(setup: &Setup) -> Result<Vec<SteadyRecord>> {
    Ok(run_ect_with(setup, None)?.records)
}

pub fn run_ect_with(setup: &Setup, exciter: Option<Exciter>) -> Result<RunOutput> {
    let c = setup.protocol.ect;
    run_phase_stepped(
        setup,
        exciter,
        ProtocolKind::Ect,
        linspace(c.accel_min, c.accel_max, c.levels),
        linspace(c.phase_min, c.phase_max, c.points),
    )
}
