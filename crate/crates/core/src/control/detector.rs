use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dsp::wrap_phase;

/// Acceptance limits; every comparison is strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityThresholds {
    pub amp_dev_pct: f64,
    pub freq_std_hz: f64,
    pub phase_std_deg: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            amp_dev_pct: 2.0,
            freq_std_hz: 0.2,
            phase_std_deg: 2.5,
        }
    }
}

impl QualityThresholds {
    /// Looser phase tolerance, for the circle-fit error analysis.
    pub fn relaxed_phase() -> Self {
        Self {
            phase_std_deg: 3.5,
            ..Self::default()
        }
    }

    pub fn passes(&self, amp_dev_pct: f64, freq_std_hz: f64, phase_std_deg: f64) -> bool {
        amp_dev_pct < self.amp_dev_pct
            && freq_std_hz < self.freq_std_hz
            && phase_std_deg < self.phase_std_deg
    }
}

/// Control-error statistics over an analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    /// RMS deviation of the controlled amplitude, % of the reference.
    pub amp_dev_pct: f64,
    /// Standard deviation of the instantaneous frequency (Hz).
    pub freq_std_hz: f64,
    /// RMS deviation of the phase lag from its set value (deg).
    pub phase_std_deg: f64,
    /// Mean phase error (deg).
    pub phase_err_deg: f64,
    pub mean_freq: f64,
    pub mean_lag: f64,
    pub mean_amp: f64,
}

impl WindowStats {
    pub const ZERO: WindowStats = WindowStats {
        amp_dev_pct: 0.0,
        freq_std_hz: 0.0,
        phase_std_deg: 0.0,
        phase_err_deg: 0.0,
        mean_freq: 0.0,
        mean_lag: 0.0,
        mean_amp: 0.0,
    };

    /// `amp_target = None` measures deviation about the window mean.
    pub fn compute(
        amp: &[f64],
        amp_target: Option<f64>,
        inst_freq: &[f64],
        lag: &[f64],
        target_lag: f64,
    ) -> WindowStats {
        let n = amp.len().min(inst_freq.len()).min(lag.len());
        if n == 0 {
            return WindowStats::ZERO;
        }
        let mean = |x: &[f64]| x[..n].iter().sum::<f64>() / n as f64;
        let mean_amp = mean(amp);
        let reference = amp_target.unwrap_or(mean_amp);
        let amp_dev_pct = if reference > 0.0 {
            let ms = amp[..n].iter().map(|a| (a - reference).powi(2)).sum::<f64>() / n as f64;
            100.0 * ms.sqrt() / reference
        } else {
            0.0
        };
        let mean_freq = mean(inst_freq);
        let var_f = inst_freq[..n].iter().map(|f| (f - mean_freq).powi(2)).sum::<f64>() / n as f64;
        let errs: Vec<f64> = lag[..n].iter().map(|l| wrap_phase(l - target_lag)).collect();
        let mean_err = errs.iter().sum::<f64>() / n as f64;
        let ms_err = errs.iter().map(|e| e * e).sum::<f64>() / n as f64;
        WindowStats {
            amp_dev_pct,
            freq_std_hz: var_f.sqrt() / (2.0 * PI),
            phase_std_deg: ms_err.sqrt().to_degrees(),
            phase_err_deg: mean_err.to_degrees(),
            mean_freq,
            mean_lag: target_lag + mean_err,
            mean_amp,
        }
    }
}

/// Verdict of [`steady_state_detector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Steadiness {
    pub is_steady: bool,
    pub amp_dev_pct: f64,
    pub freq_std_hz: f64,
    pub phase_std_deg: f64,
}

pub fn steady_state_detector(stats: &WindowStats, thresholds: &QualityThresholds) -> Steadiness {
    Steadiness {
        is_steady: thresholds.passes(stats.amp_dev_pct, stats.freq_std_hz, stats.phase_std_deg),
        amp_dev_pct: stats.amp_dev_pct,
        freq_std_hz: stats.freq_std_hz,
        phase_std_deg: stats.phase_std_deg,
    }
}
