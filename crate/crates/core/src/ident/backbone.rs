use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::power_balance::power_balance_damping;
use crate::protocols::SteadyRecord;

/// Stepping direction of the amplitude parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One phase-resonant sample of the amplitude-dependent modal properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackbonePoint {
    /// Response amplitude, `sqrt(sum_h |q_m,h|^2)` for h = 1..=H (m).
    pub a: f64,
    /// Mass-normalized modal amplitude `|q_m,1| / |e_m^T phi_1|` (m).
    pub modal_amplitude: f64,
    /// Modal angular frequency (rad/s).
    pub omega: f64,
    pub damping: f64,
    pub direction: Direction,
    /// `e_m^T phi_1(a)`.
    pub pick_projection: f64,
    /// `phi_1^H(a) M b`.
    pub base_projection: f64,
}

/// Backbone as an ordered list of samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Backbone {
    pub points: Vec<BackbonePoint>,
}

impl Backbone {
    pub fn new(points: Vec<BackbonePoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points of one stepping direction, in their original order.
    pub fn direction(&self, dir: Direction) -> Backbone {
        Backbone::new(
            self.points
                .iter()
                .copied()
                .filter(|p| p.direction == dir)
                .collect(),
        )
    }

    /// Copy sorted by increasing modal amplitude.
    pub fn sorted(&self) -> Backbone {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.modal_amplitude.total_cmp(&b.modal_amplitude));
        Backbone::new(pts)
    }

    /// Linear interpolation of (omega, damping, a) at a modal amplitude.
    ///
    /// Returns `None` outside the sampled range.
    pub fn interpolate(&self, modal_amplitude: f64) -> Option<BackbonePoint> {
        let pts = &self.sorted().points;
        if pts.is_empty() {
            return None;
        }
        let first = pts.first()?;
        let last = pts.last()?;
        if modal_amplitude < first.modal_amplitude || modal_amplitude > last.modal_amplitude {
            return None;
        }
        let idx = pts
            .windows(2)
            .position(|w| modal_amplitude <= w[1].modal_amplitude)
            .unwrap_or(0);
        if pts.len() == 1 {
            return Some(*first);
        }
        let (p, q) = (pts[idx], pts[idx + 1]);
        let span = q.modal_amplitude - p.modal_amplitude;
        let s = if span > 0.0 {
            (modal_amplitude - p.modal_amplitude) / span
        } else {
            0.0
        };
        let lerp = |x: f64, y: f64| x + s * (y - x);
        Some(BackbonePoint {
            a: lerp(p.a, q.a),
            modal_amplitude,
            omega: lerp(p.omega, q.omega),
            damping: lerp(p.damping, q.damping),
            direction: p.direction,
            pick_projection: lerp(p.pick_projection, q.pick_projection),
            base_projection: lerp(p.base_projection, q.base_projection),
        })
    }
}

/// Backbone from accepted phase-resonance records.
///
/// The modal frequency is the mean instantaneous PLL frequency over the
/// analysis window and the damping follows from the fundamental-harmonic
/// power balance.
pub fn backbone_from_prt(records: &[SteadyRecord], pick: f64, base: f64) -> Result<Backbone> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no PRT records".into()));
    }
    let mut points = Vec::with_capacity(records.len());
    for r in records {
        let damping = power_balance_damping(r, pick, base)?;
        points.push(BackbonePoint {
            a: r.response.amplitude_metric(),
            modal_amplitude: r.response.coeff(1).norm() / pick.abs(),
            omega: r.omega,
            damping,
            direction: r.direction,
            pick_projection: pick,
            base_projection: base,
        });
    }
    Ok(Backbone::new(points))
}
