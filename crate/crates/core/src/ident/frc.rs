use serde::{Deserialize, Serialize};

use super::backbone::{Backbone, BackbonePoint};
use crate::error::{Error, Result};

/// Flank of a frequency response curve relative to phase resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Peak,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrcPoint {
    /// rad/s
    pub omega: f64,
    /// Predicted modal amplitude.
    pub modal_amplitude: f64,
    /// Predicted `|q_m,1|`.
    pub response_amplitude: f64,
    /// Phase lag of the modal response (rad).
    pub phase_lag: f64,
    pub branch: Branch,
}

/// Curve predicted for one excitation level, ordered from the lower flank
/// over the peak down the upper flank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Frc {
    /// Base acceleration amplitude (m/s^2).
    pub level: f64,
    pub points: Vec<FrcPoint>,
}

impl Frc {
    pub fn peak(&self) -> Option<&FrcPoint> {
        self.points.iter().find(|p| p.branch == Branch::Peak)
    }

    /// Frequency on one flank at a modal amplitude, by linear interpolation.
    pub fn flank_frequency(&self, modal_amplitude: f64, branch: Branch) -> Option<f64> {
        let mut pts: Vec<&FrcPoint> = self
            .points
            .iter()
            .filter(|p| p.branch == branch || p.branch == Branch::Peak)
            .collect();
        pts.sort_by(|a, b| a.modal_amplitude.total_cmp(&b.modal_amplitude));
        pts.windows(2).find_map(|w| {
            let (p, q) = (w[0], w[1]);
            if modal_amplitude < p.modal_amplitude || modal_amplitude > q.modal_amplitude {
                return None;
            }
            let span = q.modal_amplitude - p.modal_amplitude;
            let s = if span > 0.0 {
                (modal_amplitude - p.modal_amplitude) / span
            } else {
                0.0
            };
            Some(p.omega + s * (q.omega - p.omega))
        })
    }
}

/// Number of amplitude samples used between backbone points.
pub const REFINE: usize = 16;

fn modal_lag(p: &BackbonePoint, omega: f64) -> f64 {
    (2.0 * p.damping * p.omega * omega).atan2(p.omega * p.omega - omega * omega)
}

/// Forced response predicted from a backbone for base acceleration `level`.
///
/// At each amplitude `a` the single-mode balance
/// `|w^2 - O^2 + 2 i D w O| a = |b| A` is solved for `O^2`; up to two
/// flank roots exist. The phase-resonant peak where `|b| A = 2 D w^2 a` is
/// inserted exactly.
pub fn predict_frc(backbone: &Backbone, level: f64) -> Result<Frc> {
    if !(level > 0.0) {
        return Err(Error::InvalidConfig(format!("excitation level {level}")));
    }
    let bb = backbone.sorted();
    if bb.len() < 2 {
        return Err(Error::InsufficientData("backbone needs 2 points".into()));
    }
    let pts = &bb.points;
    let mut samples = Vec::with_capacity(pts.len() * REFINE);
    for w in pts.windows(2) {
        for k in 0..REFINE {
            let a = w[0].modal_amplitude + (w[1].modal_amplitude - w[0].modal_amplitude) * k as f64 / REFINE as f64;
            samples.push(lerp_point(&w[0], &w[1], a));
        }
    }
    samples.push(*pts.last().expect("non-empty"));

    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for p in &samples {
        let a = p.modal_amplitude;
        if a <= 0.0 {
            continue;
        }
        let r = p.base_projection.abs() * level / a;
        let w2 = p.omega * p.omega;
        let c = 1.0 - 2.0 * p.damping * p.damping;
        let disc = w2 * w2 * (c * c - 1.0) + r * r;
        if disc < 0.0 {
            continue;
        }
        let s = disc.sqrt();
        for (x, branch) in [(w2 * c - s, Branch::Lower), (w2 * c + s, Branch::Upper)] {
            if x <= 0.0 {
                continue;
            }
            let omega = x.sqrt();
            let fp = FrcPoint {
                omega,
                modal_amplitude: a,
                response_amplitude: a * p.pick_projection.abs(),
                phase_lag: modal_lag(p, omega),
                branch,
            };
            let same_side = match branch {
                Branch::Lower => omega <= p.omega,
                _ => omega >= p.omega,
            };
            if same_side {
                match branch {
                    Branch::Lower => lower.push(fp),
                    _ => upper.push(fp),
                }
            }
        }
    }
    let mut out = lower;
    for peak in resonance_points(pts, level) {
        out.push(FrcPoint {
            omega: peak.omega,
            modal_amplitude: peak.modal_amplitude,
            response_amplitude: peak.modal_amplitude * peak.pick_projection.abs(),
            phase_lag: std::f64::consts::FRAC_PI_2,
            branch: Branch::Peak,
        });
    }
    upper.reverse();
    out.extend(upper);
    Ok(Frc { level, points: out })
}

fn lerp_point(p: &BackbonePoint, q: &BackbonePoint, a: f64) -> BackbonePoint {
    let span = q.modal_amplitude - p.modal_amplitude;
    let s = if span > 0.0 {
        (a - p.modal_amplitude) / span
    } else {
        0.0
    };
    let l = |x: f64, y: f64| x + s * (y - x);
    BackbonePoint {
        a: l(p.a, q.a),
        modal_amplitude: a,
        omega: l(p.omega, q.omega),
        damping: l(p.damping, q.damping),
        direction: p.direction,
        pick_projection: l(p.pick_projection, q.pick_projection),
        base_projection: l(p.base_projection, q.base_projection),
    }
}

/// Backbone points (interpolated) at which `|b| A = 2 D w^2 a`.
pub fn resonance_points(sorted: &[BackbonePoint], level: f64) -> Vec<BackbonePoint> {
    let g = |p: &BackbonePoint| 2.0 * p.damping * p.omega * p.omega * p.modal_amplitude - p.base_projection.abs() * level;
    let mut out = Vec::new();
    for w in sorted.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        let (gp, gq) = (g(p), g(q));
        if gp == 0.0 {
            out.push(*p);
            continue;
        }
        if gp * gq >= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (p.modal_amplitude, q.modal_amplitude);
        let mut glo = gp;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(&lerp_point(p, q, mid));
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (gm < 0.0) == (glo < 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        out.push(lerp_point(p, q, 0.5 * (lo + hi)));
    }
    if let Some(last) = sorted.last() {
        if g(last) == 0.0 {
            out.push(*last);
        }
    }
    out
}

/// Curves predicted from the up- and down-stepping backbones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrcBounds {
    pub level: f64,
    pub up: Frc,
    pub down: Frc,
}

/// Where a measured point falls relative to the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub inside: bool,
    /// Signed frequency offsets from the two predicted flanks (rad/s).
    pub offset_up: Option<f64>,
    pub offset_down: Option<f64>,
}

impl FrcBounds {
    /// A point is inside when it lies between the two predicted flanks at
    /// its own amplitude, on the flank given by its phase lag.
    pub fn contains(&self, omega: f64, modal_amplitude: f64, lag: f64) -> Containment {
        let branch = if lag < std::f64::consts::FRAC_PI_2 {
            Branch::Lower
        } else {
            Branch::Upper
        };
        let off_up = self.up.flank_frequency(modal_amplitude, branch).map(|f| omega - f);
        let off_down = self.down.flank_frequency(modal_amplitude, branch).map(|f| omega - f);
        let inside = match (off_up, off_down) {
            (Some(a), Some(b)) => a * b <= 0.0,
            _ => false,
        };
        Containment {
            inside,
            offset_up: off_up,
            offset_down: off_down,
        }
    }

    /// Widest frequency separation of the two curves over shared amplitudes.
    pub fn band_width(&self) -> f64 {
        let mut w: f64 = 0.0;
        for p in &self.up.points {
            let b = if p.branch == Branch::Peak { Branch::Lower } else { p.branch };
            if let Some(f) = self.down.flank_frequency(p.modal_amplitude, b) {
                w = w.max((p.omega - f).abs());
            }
        }
        w
    }
}

pub fn frc_bounds(backbone_up: &Backbone, backbone_down: &Backbone, level: f64) -> Result<FrcBounds> {
    Ok(FrcBounds {
        level,
        up: predict_frc(backbone_up, level)?,
        down: predict_frc(backbone_down, level)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::Direction;
    use crate::plant::PlantConfig;
    use std::f64::consts::PI;

    fn flat(w: f64, d: f64, dir: Direction) -> Backbone {
        Backbone::new(
            (1..=40)
                .map(|k| BackbonePoint {
                    a: k as f64 * 5e-5,
                    modal_amplitude: k as f64 * 5e-5,
                    omega: w,
                    damping: d,
                    direction: dir,
                    pick_projection: 1.0,
                    base_projection: 1.0,
                })
                .collect(),
        )
    }

    #[test]
    fn linear_backbone_reproduces_linear_frc() {
        let plant = PlantConfig::linear();
        let frc = predict_frc(&flat(plant.omega1, plant.d1, Direction::Up), 1.0).unwrap();
        assert!(frc.points.len() > 100);
        for p in &frc.points {
            let g = plant.linear_frf(p.omega).norm() / (p.omega * p.omega);
            assert!((p.response_amplitude - g).abs() < 1e-3 * g, "{} {}", p.response_amplitude, g);
        }
    }

    #[test]
    fn peak_lies_on_backbone() {
        let mut bb = flat(600.0, 0.004, Direction::Up);
        for (k, p) in bb.points.iter_mut().enumerate() {
            p.omega = 600.0 * (1.0 - 0.02 * (k as f64 / 40.0));
            p.damping = 0.004 + 0.002 * k as f64 / 40.0;
        }
        let frc = predict_frc(&bb, 2.0).unwrap();
        let peak = frc.peak().unwrap();
        let on_bb = bb.interpolate(peak.modal_amplitude).unwrap();
        assert!((peak.omega - on_bb.omega).abs() < 1e-9 * on_bb.omega);
        let lhs = 2.0 * on_bb.damping * on_bb.omega.powi(2) * peak.modal_amplitude;
        assert!((lhs - 2.0).abs() < 1e-9 * 2.0);
    }

    #[test]
    fn identical_backbones_give_coincident_bounds() {
        let bb = flat(2.0 * PI * 101.0, 0.004, Direction::Up);
        let b = frc_bounds(&bb, &bb, 1.0).unwrap();
        assert_eq!(b.up, b.down);
        assert_eq!(b.band_width(), 0.0);
    }

    #[test]
    fn containment_between_flanks() {
        let w = 2.0 * PI * 101.0;
        let up = flat(w, 0.004, Direction::Up);
        let down = flat(w * 1.002, 0.004, Direction::Down);
        let b = frc_bounds(&up, &down, 1.0).unwrap();
        assert!(b.band_width() > 0.0);
        let a = 2e-4;
        let f_up = b.up.flank_frequency(a, Branch::Lower).unwrap();
        let f_dn = b.down.flank_frequency(a, Branch::Lower).unwrap();
        assert!(b.contains(0.5 * (f_up + f_dn), a, 1.0).inside);
        assert!(!b.contains(f_up - 1.0, a, 1.0).inside);
    }

    #[test]
    fn unreachable_amplitudes_skipped() {
        let frc = predict_frc(&flat(600.0, 0.01, Direction::Up), 5.0).unwrap();
        let peak = 5.0 / (2.0 * 0.01 * 600.0 * 600.0);
        assert!(frc.peak().is_some());
        assert!(frc.points.iter().all(|p| p.modal_amplitude <= peak * (1.0 + 1e-9)));
    }
}
