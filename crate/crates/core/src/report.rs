//! Identification over one run's records and the cross-protocol summary.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ident::{
    backbone_from_prt, circle_fit, energy_decomposition, frc_bounds, predict_frc, Backbone,
    BackbonePoint, CircleFit, Direction, NyquistSet,
};
use crate::plant::PlantConfig;
use crate::protocols::{linspace, ProtocolConfig, ProtocolKind, SteadyRecord};

fn hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolCount {
    pub protocol: ProtocolKind,
    pub total: usize,
    pub accepted: usize,
}

/// Circle fit of one RCT level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: usize,
    /// Response amplitude set point (m).
    pub amplitude: f64,
    pub fit: Option<CircleFit>,
    pub error: Option<String>,
}

/// PRT power-balance damping against the RCT all-pairs interval at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingCheck {
    pub level: usize,
    pub amplitude: f64,
    pub rct_freq_hz: f64,
    pub prt_freq_hz: Option<f64>,
    pub d_prt: Option<f64>,
    pub d_min: f64,
    pub d_mean: f64,
    pub d_max: f64,
    pub freq_diff_hz: Option<f64>,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EctPointCheck {
    pub level: usize,
    pub point: usize,
    pub lag_deg: f64,
    pub freq_hz: f64,
    pub modal_amplitude: f64,
    pub accepted: bool,
    pub inside: bool,
    /// Frequency offsets from the up/down predictions (Hz).
    pub offset_up_hz: Option<f64>,
    pub offset_down_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EctLevel {
    pub level: usize,
    /// Base acceleration set point (m/s^2).
    pub accel: f64,
    pub accepted: usize,
    pub inside: usize,
    pub band_width_hz: Option<f64>,
    /// Predicted phase-resonant peak from the up backbone.
    pub peak_freq_hz: Option<f64>,
    pub peak_amplitude: Option<f64>,
    /// Accepted record closest to 90 deg lag against the backbone.
    pub resonance_freq_diff_hz: Option<f64>,
    pub resonance_amp_diff_pct: Option<f64>,
    pub error: Option<String>,
}

/// Energy fractions at one PRT steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub point: usize,
    pub direction: Direction,
    pub freq_hz: f64,
    pub modal_amplitude: f64,
    pub e12: f64,
    pub e22: f64,
    /// Largest fraction outside E(1,1), E(1,2), E(2,2).
    pub max_other: f64,
    pub max_other_entry: (usize, usize),
    /// Harmonic sum over the directly averaged energy.
    pub closure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identified {
    pub source: ProtocolKind,
    pub modal_amplitude: f64,
    pub freq_hz: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub config_hash: String,
    /// One-based run index.
    pub run: u32,
    pub seed: u64,
    pub plant: PlantConfig,
    pub counts: Vec<ProtocolCount>,
    pub identified: Option<Identified>,
    pub backbone: Vec<BackbonePoint>,
    pub circle_fits: Vec<LevelFit>,
    pub damping: Vec<DampingCheck>,
    pub ect_levels: Vec<EctLevel>,
    pub ect_points: Vec<EctPointCheck>,
    pub energy: Vec<EnergyRow>,
}

/// Accepted PRT backbone; empty when no PRT ran.
pub fn prt_backbone(records: &[SteadyRecord], plant: &PlantConfig) -> Result<Backbone> {
    let acc: Vec<SteadyRecord> = records
        .iter()
        .filter(|r| r.protocol == ProtocolKind::Prt && r.is_accepted())
        .cloned()
        .collect();
    if acc.is_empty() {
        return Ok(Backbone::default());
    }
    backbone_from_prt(&acc, plant.e_factors[0], plant.b_factors[0])
}

pub fn rct_circle_fits(records: &[SteadyRecord], protocol: &ProtocolConfig) -> Vec<LevelFit> {
    let c = protocol.rct;
    linspace(c.amp_min, c.amp_max, c.levels)
        .into_iter()
        .enumerate()
        .filter_map(|(level, amplitude)| {
            let recs: Vec<SteadyRecord> = records
                .iter()
                .filter(|r| r.protocol == ProtocolKind::Rct && r.level == level)
                .cloned()
                .collect();
            if recs.is_empty() {
                return None;
            }
            let (fit, error) = match circle_fit(&NyquistSet::from_records(amplitude, &recs)) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Some(LevelFit {
                level,
                amplitude,
                fit,
                error,
            })
        })
        .collect()
}

/// PRT–RCT comparison at the RCT amplitudes. Levels outside the PRT
/// amplitude range have no PRT value and count as not within.
pub fn damping_checks(backbone: &Backbone, fits: &[LevelFit], pick: f64) -> Vec<DampingCheck> {
    fits.iter()
        .filter_map(|lf| {
            let fit = lf.fit.as_ref()?;
            let modal = lf.amplitude / pick.abs();
            let prt = backbone.interpolate(modal);
            let rct_freq_hz = hz(fit.omega_n);
            let d_prt = prt.map(|p| p.damping);
            Some(DampingCheck {
                level: lf.level,
                amplitude: lf.amplitude,
                rct_freq_hz,
                prt_freq_hz: prt.map(|p| hz(p.omega)),
                d_prt,
                d_min: fit.d_min,
                d_mean: fit.d_mean,
                d_max: fit.d_max,
                freq_diff_hz: prt.map(|p| (hz(p.omega) - rct_freq_hz).abs()),
                within: d_prt.is_some_and(|d| d >= fit.d_min && d <= fit.d_max),
            })
        })
        .collect()
}

/// ECT records against the FRCs predicted from the up and down backbones.
pub fn ect_checks(
    records: &[SteadyRecord],
    backbone: &Backbone,
    protocol: &ProtocolConfig,
    plant: &PlantConfig,
) -> (Vec<EctLevel>, Vec<EctPointCheck>) {
    let c = protocol.ect;
    let pick = plant.e_factors[0].abs();
    let up = backbone.direction(Direction::Up);
    let down = backbone.direction(Direction::Down);
    let mut levels = Vec::new();
    let mut points = Vec::new();
    for (level, accel) in linspace(c.accel_min, c.accel_max, c.levels).into_iter().enumerate() {
        let recs: Vec<&SteadyRecord> = records
            .iter()
            .filter(|r| r.protocol == ProtocolKind::Ect && r.level == level)
            .collect();
        if recs.is_empty() {
            continue;
        }
        let mut row = EctLevel {
            level,
            accel,
            accepted: recs.iter().filter(|r| r.is_accepted()).count(),
            inside: 0,
            band_width_hz: None,
            peak_freq_hz: None,
            peak_amplitude: None,
            resonance_freq_diff_hz: None,
            resonance_amp_diff_pct: None,
            error: None,
        };
        let bounds = match frc_bounds(&up, &down, accel) {
            Ok(b) => b,
            Err(e) => {
                row.error = Some(e.to_string());
                levels.push(row);
                continue;
            }
        };
        row.band_width_hz = Some(hz(bounds.band_width()));
        if let Some(p) = bounds.up.peak() {
            row.peak_freq_hz = Some(hz(p.omega));
            row.peak_amplitude = Some(p.modal_amplitude);
        }
        for r in &recs {
            let a = r.response.coeff(1).norm() / pick;
            let cont = bounds.contains(r.omega, a, r.phase_lag);
            let inside = r.is_accepted() && cont.inside;
            row.inside += inside as usize;
            points.push(EctPointCheck {
                level,
                point: r.point,
                lag_deg: r.phase_lag.to_degrees(),
                freq_hz: r.freq_hz(),
                modal_amplitude: a,
                accepted: r.is_accepted(),
                inside,
                offset_up_hz: cont.offset_up.map(hz),
                offset_down_hz: cont.offset_down.map(hz),
            });
        }
        let near = recs
            .iter()
            .filter(|r| r.is_accepted())
            .min_by(|x, y| {
                (x.phase_lag - PI / 2.0)
                    .abs()
                    .total_cmp(&(y.phase_lag - PI / 2.0).abs())
            });
        if let Some(r) = near {
            let a = r.response.coeff(1).norm() / pick;
            if let Some(b) = backbone.interpolate(a) {
                row.resonance_freq_diff_hz = Some((r.freq_hz() - hz(b.omega)).abs());
            }
            if let Some(pa) = row.peak_amplitude {
                row.resonance_amp_diff_pct = Some(100.0 * (a - pa).abs() / pa);
            }
        }
        levels.push(row);
    }
    (levels, points)
}

const INTERACTION: [(usize, usize); 2] = [(1, 2), (2, 2)];

pub fn energy_rows(records: &[SteadyRecord], plant: &PlantConfig) -> Vec<EnergyRow> {
    records
        .iter()
        .filter(|r| r.protocol == ProtocolKind::Prt && r.is_accepted())
        .filter_map(|r| {
            let t = energy_decomposition(&r.modal, r.omega, plant.omegas()).ok()?;
            let (max_other, max_other_entry) = t.max_fraction_excluding(&INTERACTION);
            Some(EnergyRow {
                point: r.point,
                direction: r.direction,
                freq_hz: r.freq_hz(),
                modal_amplitude: r.modal[0].coeff(1).norm(),
                e12: t.fraction(1, 2),
                e22: t.fraction(2, 2),
                max_other,
                max_other_entry,
                closure: t.total / r.direct_energy,
            })
        })
        .collect()
}

fn identified(backbone: &Backbone, fits: &[LevelFit], pick: f64) -> Option<Identified> {
    if let Some(p) = backbone.sorted().points.first() {
        return Some(Identified {
            source: ProtocolKind::Prt,
            modal_amplitude: p.modal_amplitude,
            freq_hz: hz(p.omega),
            damping: p.damping,
        });
    }
    fits.iter().find_map(|lf| {
        let f = lf.fit.as_ref()?;
        Some(Identified {
            source: ProtocolKind::Rct,
            modal_amplitude: lf.amplitude / pick.abs(),
            freq_hz: hz(f.omega_n),
            damping: f.d_mean,
        })
    })
}

/// Run every identification step that the available records allow.
pub fn analyze_run(
    scenario: &str,
    config_hash: &str,
    run: u32,
    seed: u64,
    plant: &PlantConfig,
    protocol: &ProtocolConfig,
    records: &[SteadyRecord],
) -> Result<RunReport> {
    let counts = [ProtocolKind::Prt, ProtocolKind::Rct, ProtocolKind::Ect]
        .into_iter()
        .filter_map(|k| {
            let total = records.iter().filter(|r| r.protocol == k).count();
            (total > 0).then(|| ProtocolCount {
                protocol: k,
                total,
                accepted: records.iter().filter(|r| r.protocol == k && r.is_accepted()).count(),
            })
        })
        .collect();
    let backbone = prt_backbone(records, plant)?;
    let circle_fits = rct_circle_fits(records, protocol);
    let pick = plant.e_factors[0];
    let damping = if backbone.is_empty() {
        Vec::new()
    } else {
        damping_checks(&backbone, &circle_fits, pick)
    };
    let (ect_levels, ect_points) = if backbone.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        ect_checks(records, &backbone, protocol, plant)
    };
    Ok(RunReport {
        scenario: scenario.to_string(),
        config_hash: config_hash.to_string(),
        run,
        seed,
        plant: *plant,
        counts,
        identified: identified(&backbone, &circle_fits, pick),
        backbone: backbone.points.clone(),
        circle_fits,
        damping,
        ect_levels,
        ect_points,
        energy: energy_rows(records, plant),
    })
}

/// Prediction for one level from a backbone, for the FRC output table.
pub fn predicted_frcs(backbone: &Backbone, protocol: &ProtocolConfig) -> Vec<(Direction, crate::ident::Frc)> {
    let c = protocol.ect;
    let mut out = Vec::new();
    for dir in [Direction::Up, Direction::Down] {
        let bb = backbone.direction(dir);
        for accel in linspace(c.accel_min, c.accel_max, c.levels) {
            if let Ok(f) = predict_frc(&bb, accel) {
                out.push((dir, f));
            }
        }
    }
    out
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

impl RunReport {
    pub fn max_e22(&self) -> Option<f64> {
        self.energy.iter().map(|e| e.e22).reduce(f64::max)
    }

    pub fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} run {}\n", self.scenario, self.run);
        let _ = writeln!(s, "config_hash `{}`, seed {}\n", self.config_hash, self.seed);
        let _ = writeln!(
            s,
            "Plant: f1 {:.4} Hz, f2/f1 {:.4}, d1 {}, d2 {}\n",
            hz(self.plant.omega1),
            self.plant.omega2 / self.plant.omega1,
            self.plant.d1,
            self.plant.d2
        );
        let _ = writeln!(s, "| protocol | records | accepted |\n|---|---|---|");
        for c in &self.counts {
            let _ = writeln!(s, "| {} | {} | {} |", c.protocol, c.total, c.accepted);
        }
        if let Some(id) = &self.identified {
            let _ = writeln!(
                s,
                "\nIdentified ({} at {:.4e} m): f = {:.4} Hz, D = {:.5}",
                id.source, id.modal_amplitude, id.freq_hz, id.damping
            );
        }
        if !self.backbone.is_empty() {
            let bb = Backbone::new(self.backbone.clone()).sorted();
            let f: Vec<f64> = bb.points.iter().map(|p| hz(p.omega)).collect();
            let d: Vec<f64> = bb.points.iter().map(|p| p.damping).collect();
            let (fmin, fmax) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let (dmin, dmax) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let _ = writeln!(
                s,
                "\n## Backbone\n\n{} points, a {:.3e}..{:.3e} m, f {:.4}..{:.4} Hz, D {:.5}..{:.5}",
                bb.len(),
                bb.points[0].modal_amplitude,
                bb.points[bb.len() - 1].modal_amplitude,
                fmin,
                fmax,
                dmin,
                dmax
            );
        }
        if !self.circle_fits.is_empty() {
            let title = if self.damping.is_empty() { "RCT circle fits" } else { "PRT vs RCT damping" };
            let _ = writeln!(s, "\n## {title}\n\n| level | amplitude (m) | f RCT (Hz) | f PRT (Hz) | D PRT | D min | D mean | D max | within |\n|---|---|---|---|---|---|---|---|---|");
            for lf in &self.circle_fits {
                let chk = self.damping.iter().find(|c| c.level == lf.level);
                match (&lf.fit, chk) {
                    (Some(f), Some(c)) => {
                        let _ = writeln!(
                            s,
                            "| {} | {:.3e} | {:.4} | {} | {} | {:.5} | {:.5} | {:.5} | {} |",
                            lf.level,
                            lf.amplitude,
                            hz(f.omega_n),
                            opt(c.prt_freq_hz, 4),
                            opt(c.d_prt, 5),
                            f.d_min,
                            f.d_mean,
                            f.d_max,
                            if c.within { "yes" } else { "no" }
                        );
                    }
                    (Some(f), None) => {
                        let _ = writeln!(
                            s,
                            "| {} | {:.3e} | {:.4} | - | - | {:.5} | {:.5} | {:.5} | - |",
                            lf.level,
                            lf.amplitude,
                            hz(f.omega_n),
                            f.d_min,
                            f.d_mean,
                            f.d_max
                        );
                    }
                    (None, _) => {
                        let _ = writeln!(
                            s,
                            "| {} | {:.3e} | fit failed: {} |||||||",
                            lf.level,
                            lf.amplitude,
                            lf.error.as_deref().unwrap_or("")
                        );
                    }
                }
            }
        }
        if !self.ect_levels.is_empty() {
            let _ = writeln!(s, "\n## ECT vs predicted FRC bounds\n\n| level (m/s^2) | accepted | inside | band (Hz) | peak f (Hz) | 90 deg f diff (Hz) | 90 deg amp diff (%) |\n|---|---|---|---|---|---|---|");
            for l in &self.ect_levels {
                let _ = writeln!(
                    s,
                    "| {:.3} | {} | {} | {} | {} | {} | {} |",
                    l.accel,
                    l.accepted,
                    l.inside,
                    opt(l.band_width_hz, 5),
                    opt(l.peak_freq_hz, 4),
                    opt(l.resonance_freq_diff_hz, 4),
                    opt(l.resonance_amp_diff_pct, 2)
                );
            }
        }
        if !self.energy.is_empty() {
            let peak = self
                .energy
                .iter()
                .max_by(|a, b| a.e22.total_cmp(&b.e22))
                .expect("non-empty");
            let other = self.energy.iter().map(|e| e.max_other).fold(0.0, f64::max);
            let _ = writeln!(
                s,
                "\n## Energy fractions\n\nmax E(2,2)/E(1,1) = {:.4} at {:.4} Hz, a {:.3e} m; max other fraction {:.4}",
                peak.e22, peak.freq_hz, peak.modal_amplitude, other
            );
        }
        s
    }
}

/// Cross-run comparison produced by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub run: u32,
    pub ratio: f64,
    pub freq_hz: Option<f64>,
    pub damping: Option<f64>,
    pub max_e22: Option<f64>,
    pub damping_within: usize,
    pub damping_levels: usize,
    pub ect_inside: usize,
    pub ect_accepted: usize,
}

pub fn compare(reports: &[RunReport]) -> Result<Vec<ComparisonRow>> {
    if reports.is_empty() {
        return Err(Error::Missing("no run reports".into()));
    }
    Ok(reports
        .iter()
        .map(|r| ComparisonRow {
            scenario: r.scenario.clone(),
            run: r.run,
            ratio: r.plant.omega2 / r.plant.omega1,
            freq_hz: r.identified.as_ref().map(|i| i.freq_hz),
            damping: r.identified.as_ref().map(|i| i.damping),
            max_e22: r.max_e22(),
            damping_within: r.damping.iter().filter(|c| c.within).count(),
            damping_levels: r.damping.len(),
            ect_inside: r.ect_levels.iter().map(|l| l.inside).sum(),
            ect_accepted: r.ect_levels.iter().map(|l| l.accepted).sum(),
        })
        .collect())
}

pub fn comparison_markdown(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("# Comparison\n\n| scenario | run | f2/f1 | f (Hz) | D | max E22/E11 | PRT D within RCT | ECT inside/accepted |\n|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {:.3} | {} | {} | {} | {}/{} | {}/{} |",
            r.scenario,
            r.run,
            r.ratio,
            opt(r.freq_hz, 4),
            opt(r.damping, 5),
            opt(r.max_e22, 4),
            r.damping_within,
            r.damping_levels,
            r.ect_inside,
            r.ect_accepted
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::Quality;
    use num_complex::Complex64;

    fn bp(a: f64, w: f64, d: f64) -> BackbonePoint {
        BackbonePoint {
            a,
            modal_amplitude: a,
            omega: w,
            damping: d,
            direction: Direction::Up,
            pick_projection: 1.0,
            base_projection: 1.0,
        }
    }

    fn fit(level: usize, amplitude: f64, wn: f64, lo: f64, hi: f64) -> LevelFit {
        LevelFit {
            level,
            amplitude,
            fit: Some(CircleFit {
                level: amplitude,
                d_mean: 0.5 * (lo + hi),
                d_min: lo,
                d_max: hi,
                omega_n: wn,
                circle: crate::ident::Circle {
                    center: Complex64::new(0.0, -1.0),
                    radius: 1.0,
                    residual: 0.0,
                },
                resonance: 0,
                pairs: vec![lo, hi],
            }),
            error: None,
        }
    }

    #[test]
    fn damping_check_uses_closed_interval_and_range() {
        let bb = Backbone::new(vec![bp(1e-4, 600.0, 0.004), bp(1e-3, 600.0, 0.006)]);
        let fits = vec![
            fit(0, 5e-5, 600.0, 0.003, 0.005),
            fit(1, 1e-4, 600.0, 0.004, 0.005),
            fit(2, 5.5e-4, 600.0, 0.0040, 0.0049),
        ];
        let c = damping_checks(&bb, &fits, 1.0);
        assert!(!c[0].within && c[0].d_prt.is_none());
        assert!(c[1].within);
        assert!(!c[2].within);
        assert_eq!(c[1].freq_diff_hz, Some(0.0));
    }

    #[test]
    fn counts_and_identified_from_prt() {
        let plant = PlantConfig::linear();
        let mut r = SteadyRecord::empty(ProtocolKind::Prt);
        let w = plant.omega1;
        let a = 1e-4;
        let f = 2.0 * plant.d1 * w * w * a;
        r.omega = w;
        r.response = crate::dsp::HarmonicSpectrum::new(w, vec![Complex64::default(), Complex64::new(a, 0.0)]);
        r.modal[0] = r.response.clone();
        r.base_accel = crate::dsp::HarmonicSpectrum::new(w, vec![Complex64::default(), Complex64::new(0.0, -f)]);
        r.quality = Quality {
            amp_dev_pct: 0.0,
            freq_std_hz: 0.0,
            phase_std_deg: 0.0,
            phase_err_deg: 0.0,
            accepted: true,
            flag: None,
        };
        let mut rejected = r.clone();
        rejected.quality.accepted = false;
        let rep = analyze_run("s", "h", 1, 0, &plant, &ProtocolConfig::table(), &[r, rejected]).unwrap();
        assert_eq!(rep.counts, vec![ProtocolCount { protocol: ProtocolKind::Prt, total: 2, accepted: 1 }]);
        let id = rep.identified.unwrap();
        assert!((id.freq_hz - 101.0).abs() < 1e-9);
        assert!((id.damping - plant.d1).abs() < 1e-12, "{}", id.damping);
    }

    #[test]
    fn compare_requires_reports() {
        assert!(compare(&[]).is_err());
    }
}
