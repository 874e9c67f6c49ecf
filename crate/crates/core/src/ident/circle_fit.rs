use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::SteadyRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistPoint {
    /// rad/s
    pub omega: f64,
    pub frf: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    /// RMS radial residual.
    pub residual: f64,
}

/// FRF points of one response level in the Nyquist plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NyquistSet {
    pub level: f64,
    pub points: Vec<NyquistPoint>,
}

impl NyquistSet {
    pub fn new(level: f64, points: Vec<NyquistPoint>) -> Self {
        Self { level, points }
    }

    /// Accepted records only.
    pub fn from_records(level: f64, records: &[SteadyRecord]) -> Self {
        let points = records
            .iter()
            .filter(|r| r.is_accepted())
            .map(|r| NyquistPoint {
                omega: r.omega,
                frf: r.frf(),
            })
            .collect();
        Self { level, points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub level: f64,
    pub d_mean: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Frequency of the resonant point (rad/s).
    pub omega_n: f64,
    pub circle: Circle,
    pub resonance: usize,
    /// Every (below, above) pair estimate.
    pub pairs: Vec<f64>,
}

/// Algebraic least-squares circle `x^2 + y^2 + c0 x + c1 y + c2 = 0`.
pub fn fit_circle(points: &[Complex64]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points for a circle", points.len())));
    }
    // centre and scale for conditioning
    let n = points.len() as f64;
    let mean = points.iter().sum::<Complex64>() / n;
    let scale = points.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::Degenerate("coincident points".into()));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let z = (p - mean) / scale;
        let row = Vector3::new(z.re, z.im, 1.0);
        ata += row * row.transpose();
        atb += row * -(z.norm_sqr());
    }
    let svd = ata.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Degenerate("collinear points".into()));
    }
    let c = svd
        .solve(&atb, 0.0)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let center_n = Complex64::new(-0.5 * c[0], -0.5 * c[1]);
    let r2 = center_n.norm_sqr() - c[2];
    if !(r2 > 0.0) {
        return Err(Error::Degenerate("imaginary radius".into()));
    }
    let radius = r2.sqrt() * scale;
    let center = mean + center_n * scale;
    let residual = (points
        .iter()
        .map(|p| ((p - center).norm() - radius).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Circle {
        center,
        radius,
        residual,
    })
}

/// Damping from a circle fit and all pairs of points straddling resonance.
///
/// The resonant point is the one reaching farthest along the direction of
/// the circle centre (largest magnitude of the imaginary part and smallest
/// real part for a single-mode receptance). For each pair
/// `D = |Ob^2 - Oa^2| / (2 On^2) / (tan(p1/2) + tan(p2/2))`, with `p1`,
/// `p2` the angles subtended at the centre between resonance and each point.
pub fn circle_fit(nyq: &NyquistSet) -> Result<CircleFit> {
    let pts = &nyq.points;
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "circle fit needs 4 points, got {}",
            pts.len()
        )));
    }
    let circle = fit_circle(&pts.iter().map(|p| p.frf).collect::<Vec<_>>())?;
    let dir = circle.center / circle.center.norm();
    let resonance = pts
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            let pa = (a.frf * dir.conj()).re;
            let pb = (b.frf * dir.conj()).re;
            pa.total_cmp(&pb)
                .then_with(|| b.frf.re.abs().total_cmp(&a.frf.re.abs()))
        })
        .map(|(i, _)| i)
        .expect("non-empty");
    let r = pts[resonance];
    let arm = r.frf - circle.center;
    let angle = |p: &NyquistPoint| ((p.frf - circle.center) / arm).arg().abs();
    let below: Vec<&NyquistPoint> = pts.iter().filter(|p| p.omega < r.omega).collect();
    let above: Vec<&NyquistPoint> = pts.iter().filter(|p| p.omega > r.omega).collect();
    if below.is_empty() || above.is_empty() {
        return Err(Error::InsufficientData("points on one side of resonance only".into()));
    }
    let wn2 = r.omega * r.omega;
    let mut pairs = Vec::with_capacity(below.len() * above.len());
    for a in &below {
        for b in &above {
            let t = (0.5 * angle(a)).tan() + (0.5 * angle(b)).tan();
            pairs.push((b.omega * b.omega - a.omega * a.omega).abs() / (2.0 * wn2) / t);
        }
    }
    let d_mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let d_min = pairs.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = pairs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CircleFit {
        level: nyq.level,
        d_mean,
        d_min,
        d_max,
        omega_n: r.omega,
        circle,
        resonance,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantConfig;
    use std::f64::consts::PI;

    const D: f64 = 0.004;

    fn w0() -> f64 {
        2.0 * PI * 101.0
    }

    /// Hysteretic single-mode receptance, on which the pair formula is exact.
    fn hysteretic(omegas: &[f64]) -> NyquistSet {
        let w = w0();
        let pts = omegas
            .iter()
            .map(|&o| NyquistPoint {
                omega: o,
                frf: Complex64::new(1.0, 0.0) / Complex64::new(w * w - o * o, 2.0 * D * w * w),
            })
            .collect();
        NyquistSet::new(1.0, pts)
    }

    /// Frequency of a linear viscous oscillator at phase lag `lag`.
    fn omega_at_lag(w: f64, d: f64, lag: f64) -> f64 {
        // w^2 - O^2 = 2 d w O / tan(lag)
        let c = 2.0 * d * w / lag.tan();
        if lag == PI / 2.0 {
            return w;
        }
        0.5 * (-c + (c * c + 4.0 * w * w).sqrt())
    }

    #[test]
    fn exact_on_hysteretic_circle() {
        let w = w0();
        let omegas: Vec<f64> = (-6..=6).map(|k| w * (1.0 + 0.0015 * k as f64)).collect();
        let fit = circle_fit(&hysteretic(&omegas)).unwrap();
        assert_eq!(fit.omega_n, w);
        for d in &fit.pairs {
            assert!((d / D - 1.0).abs() < 1e-6, "{d}");
        }
        assert!((fit.d_max / fit.d_min - 1.0).abs() < 1e-6);
        assert!(fit.circle.residual < 1e-9 * fit.circle.radius);
    }

    #[test]
    fn half_power_pair() {
        let w = w0();
        let wa = w * (1.0 - 2.0 * D).sqrt();
        let wb = w * (1.0 + 2.0 * D).sqrt();
        let fit = circle_fit(&hysteretic(&[wa, w * 0.999, w, w * 1.001, wb])).unwrap();
        let set = hysteretic(&[wa, wb]);
        let c = fit.circle.center;
        let r = Complex64::new(0.0, -1.0 / (2.0 * D * w * w));
        for p in &set.points {
            let phi = ((p.frf - c) / (r - c)).arg().abs();
            assert!((phi - PI / 2.0).abs() < 1e-9);
        }
        let pair = (wb * wb - wa * wa) / (2.0 * w * w) / 2.0;
        assert!((pair - D).abs() < 1e-12);
        let half_power = (wb - wa) / (2.0 * w);
        assert!((pair - half_power).abs() < 2.0 * D * D);
    }

    #[test]
    fn viscous_base_frf_on_phase_grid() {
        // twelve points over 75..105 deg on the receptance used by the rig
        let plant = PlantConfig::linear();
        let pts: Vec<NyquistPoint> = (0..12)
            .map(|k| {
                let lag = (75.0 + 30.0 * k as f64 / 11.0f64).to_radians();
                let o = omega_at_lag(plant.omega1, plant.d1, lag);
                NyquistPoint {
                    omega: o,
                    frf: plant.linear_frf(o),
                }
            })
            .collect();
        let fit = circle_fit(&NyquistSet::new(1.0, pts)).unwrap();
        assert!((fit.d_mean / D - 1.0).abs() < 1e-3);
        assert!(fit.d_min < D && fit.d_max > D);
        assert!((fit.d_max - fit.d_min) / D < 0.015);
    }

    #[test]
    fn one_sided_rejected() {
        let w = w0();
        let omegas: Vec<f64> = (0..6).map(|k| w * (1.0 + 0.002 * k as f64)).collect();
        assert!(circle_fit(&hysteretic(&omegas)).is_err());
    }

    #[test]
    fn collinear_rejected() {
        let pts: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64, 2.0 * k as f64)).collect();
        assert!(matches!(fit_circle(&pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn circle_recovered() {
        let c = Complex64::new(3.0, -2.0);
        let pts: Vec<Complex64> = (0..7).map(|k| c + Complex64::from_polar(5.0, 0.3 * k as f64)).collect();
        let fit = fit_circle(&pts).unwrap();
        assert!((fit.center - c).norm() < 1e-10);
        assert!((fit.radius - 5.0).abs() < 1e-10);
    }
}
