use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 8;
pub const MIN_PERIODS: f64 = 10.0;

/// Uniformly sampled signal segment starting at absolute time `t0`.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub samples: &'a [f64],
    pub t0: f64,
    pub dt: f64,
}

impl<'a> Window<'a> {
    pub fn new(samples: &'a [f64], t0: f64, dt: f64) -> Self {
        Self { samples, t0, dt }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn periods(&self, omega: f64) -> f64 {
        self.duration() * omega / (2.0 * PI)
    }
}

/// Complex harmonic coefficients of a periodic signal,
/// `x(t) = Re sum_h X_h exp(i h Omega t)`; index 0 is the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpectrumRepr", try_from = "SpectrumRepr")]
pub struct HarmonicSpectrum {
    pub omega: f64,
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    freq: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<HarmonicSpectrum> for SpectrumRepr {
    fn from(s: HarmonicSpectrum) -> Self {
        SpectrumRepr {
            freq: s.omega / (2.0 * PI),
            re: s.coeffs.iter().map(|c| c.re).collect(),
            im: s.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<SpectrumRepr> for HarmonicSpectrum {
    type Error = String;
    fn try_from(r: SpectrumRepr) -> std::result::Result<Self, String> {
        if r.re.len() != r.im.len() || r.re.is_empty() {
            return Err("mismatched spectrum arrays".into());
        }
        Ok(HarmonicSpectrum {
            omega: 2.0 * PI * r.freq,
            coeffs: r
                .re
                .into_iter()
                .zip(r.im)
                .map(|(a, b)| Complex64::new(a, b))
                .collect(),
        })
    }
}

impl HarmonicSpectrum {
    pub fn new(omega: f64, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "spectrum needs a mean term");
        Self { omega, coeffs }
    }

    /// Highest harmonic index.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `X_h`; zero beyond the stored order.
    pub fn coeff(&self, h: usize) -> Complex64 {
        self.coeffs.get(h).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn amplitude_metric(&self) -> f64 {
        amplitude_metric(self)
    }

    pub fn reconstruct(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(h, c)| (c * Complex64::from_polar(1.0, h as f64 * self.omega * t)).re)
            .sum()
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        Self::new(self.omega, self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Drop the mean and every harmonic above `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let mut c: Vec<Complex64> = self.coeffs.iter().take(order + 1).copied().collect();
        c[0] = Complex64::default();
        Self::new(self.omega, c)
    }
}

/// `a = sqrt(sum_{h>=1} |X_h|^2)`.
pub fn amplitude_metric(s: &HarmonicSpectrum) -> f64 {
    s.coeffs[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Least-squares harmonic fit of a window at fundamental `omega`.
///
/// The window must span at least [`MIN_PERIODS`] periods. Phases refer to
/// absolute time, so spectra of different signals over the same window are
/// directly comparable.
pub fn fourier_coeffs(window: &Window<'_>, omega: f64, order: usize) -> Result<HarmonicSpectrum> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidConfig(format!("fundamental {omega} rad/s")));
    }
    let periods = window.periods(omega);
    if periods < MIN_PERIODS {
        return Err(Error::WindowTooShort {
            periods,
            required: MIN_PERIODS,
        });
    }
    if window.samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("window sample"));
    }
    let n = 2 * order + 1;
    let mut ata = DMatrix::<f64>::zeros(n, n);
    let mut atb = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; n];
    for (k, &x) in window.samples.iter().enumerate() {
        let t = window.t0 + k as f64 * window.dt;
        row[0] = 1.0;
        let (s1, c1) = (omega * t).sin_cos();
        let (mut s, mut c) = (s1, c1);
        for h in 1..=order {
            row[2 * h - 1] = c;
            row[2 * h] = s;
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        for i in 0..n {
            atb[i] += row[i] * x;
            for j in i..n {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            ata[(i, j)] = ata[(j, i)];
        }
    }
    let sol = ata
        .cholesky()
        .ok_or_else(|| Error::Degenerate("harmonic basis".into()))?
        .solve(&atb);
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(Complex64::new(sol[0], 0.0));
    for h in 1..=order {
        coeffs.push(Complex64::new(sol[2 * h - 1], -sol[2 * h]));
    }
    Ok(HarmonicSpectrum::new(omega, coeffs))
}

/// Result of frequency-domain integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrated {
    pub spectrum: HarmonicSpectrum,
    /// Mean of the integrand, which has no periodic antiderivative.
    pub discarded_mean: f64,
}

/// Antiderivative with zero mean: `X_h = V_h / (i h Omega)`.
pub fn integrate_velocity(v: &HarmonicSpectrum) -> Integrated {
    let mut c = Vec::with_capacity(v.coeffs.len());
    c.push(Complex64::default());
    for (h, vh) in v.coeffs.iter().enumerate().skip(1) {
        c.push(vh / Complex64::new(0.0, h as f64 * v.omega));
    }
    Integrated {
        spectrum: HarmonicSpectrum::new(v.omega, c),
        discarded_mean: v.coeffs[0].re,
    }
}

pub fn differentiate(x: &HarmonicSpectrum) -> HarmonicSpectrum {
    let c = x
        .coeffs
        .iter()
        .enumerate()
        .map(|(h, xh)| xh * Complex64::new(0.0, h as f64 * x.omega))
        .collect();
    HarmonicSpectrum::new(x.omega, c)
}
