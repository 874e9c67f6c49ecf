use serde::{Deserialize, Serialize};

use crate::dsp::HarmonicSpectrum;
use crate::error::{Error, Result};
use crate::plant::MODES;

/// Period-averaged mechanical energy split by mode and harmonic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    /// Fundamental (rad/s).
    pub omega: f64,
    /// `entries[m][h - 1] = E(m+1, h)` per unit modal mass (J/kg).
    pub entries: Vec<Vec<f64>>,
    pub total: f64,
}

impl EnergyTable {
    /// `E(m, h)` with one-based mode and harmonic indices; zero beyond the order.
    pub fn entry(&self, m: usize, h: usize) -> f64 {
        self.entries
            .get(m - 1)
            .and_then(|row| row.get(h - 1))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn order(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    /// `E(m, h) / E(1, 1)`.
    pub fn fraction(&self, m: usize, h: usize) -> f64 {
        self.entry(m, h) / self.entry(1, 1)
    }

    /// Largest fraction among entries not in `skip`.
    pub fn max_fraction_excluding(&self, skip: &[(usize, usize)]) -> (f64, (usize, usize)) {
        let mut best = (0.0, (1, 1));
        for m in 1..=self.entries.len() {
            for h in 1..=self.order() {
                if (m, h) == (1, 1) || skip.contains(&(m, h)) {
                    continue;
                }
                let f = self.fraction(m, h);
                if f > best.0 {
                    best = (f, (m, h));
                }
            }
        }
        best
    }
}

/// `E(m, h) = 1/4 [(h Omega)^2 + w_m^2] |eta_m,h|^2` for h >= 1.
pub fn energy_decomposition(
    modal: &[HarmonicSpectrum; MODES],
    omega: f64,
    omegas: [f64; MODES],
) -> Result<EnergyTable> {
    let order = modal.iter().map(|s| s.order()).max().unwrap_or(0);
    let mut entries = Vec::with_capacity(MODES);
    let mut total = 0.0;
    for m in 0..MODES {
        let row: Vec<f64> = (1..=order)
            .map(|h| {
                let hw = h as f64 * omega;
                0.25 * (hw * hw + omegas[m] * omegas[m]) * modal[m].coeff(h).norm_sqr()
            })
            .collect();
        total += row.iter().sum::<f64>();
        entries.push(row);
    }
    if !(entries[0].first().copied().unwrap_or(0.0) > 0.0) {
        return Err(Error::ZeroReferenceEnergy);
    }
    Ok(EnergyTable {
        omega,
        entries,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn spec(w: f64, c: &[Complex64]) -> HarmonicSpectrum {
        HarmonicSpectrum::new(w, c.to_vec())
    }

    #[test]
    fn single_mode_single_harmonic() {
        let w = 600.0;
        let z = Complex64::default();
        let s1 = spec(w, &[z, Complex64::new(1e-3, 0.0), z, z]);
        let s2 = spec(w, &[z, z, z, z]);
        let t = energy_decomposition(&[s1, s2], w, [w, 1.89 * w]).unwrap();
        assert!((t.entry(1, 1) - 0.5 * w * w * 1e-6).abs() < 1e-18);
        assert_eq!(t.max_fraction_excluding(&[]).0, 0.0);
        assert!((t.total - t.entry(1, 1)).abs() < 1e-18);
    }

    #[test]
    fn zero_reference_rejected() {
        let z = Complex64::default();
        let s = spec(1.0, &[z, z, Complex64::new(1.0, 0.0)]);
        assert!(matches!(
            energy_decomposition(&[s.clone(), s], 1.0, [1.0, 2.0]),
            Err(Error::ZeroReferenceEnergy)
        ));
    }

    proptest! {
        #[test]
        fn non_negative_and_summing(
            re in prop::collection::vec(-1.0f64..1.0, 18),
            im in prop::collection::vec(-1.0f64..1.0, 18),
        ) {
            let c: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
            let mut c1 = c[..9].to_vec();
            c1[1] += Complex64::new(2.0, 0.0);
            let t = energy_decomposition(&[spec(3.0, &c1), spec(3.0, &c[9..])], 3.0, [3.0, 5.5]).unwrap();
            let sum: f64 = t.entries.iter().flatten().sum();
            prop_assert!(t.entries.iter().flatten().all(|e| *e >= 0.0));
            prop_assert!((sum - t.total).abs() <= 1e-12 * t.total);
        }
    }
}
