//! Scenario files: one TOML document describing plant, exciter, controller,
//! protocol schedule and run count.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exciter::ExciterConfig;
use crate::plant::PlantConfig;
use crate::protocols::{ControlConfig, ProtocolConfig, ProtocolKind, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Linear,
    Aligned,
    Misaligned,
    Hardening,
}

/// Plant selection: a preset, an optional frequency scale and explicit
/// overrides of individual parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub preset: Preset,
    /// Multiplies both modal frequencies; nonlinear coefficients follow so
    /// the backbone keeps its normalized shape.
    #[serde(default = "one")]
    pub frequency_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_factors: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_factors: Option<[f64; 2]>,
}

fn one() -> f64 {
    1.0
}

impl PlantSpec {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset,
            frequency_scale: 1.0,
            f1_hz: None,
            ratio: None,
            d1: None,
            d2: None,
            beta: None,
            gamma: None,
            alpha: None,
            mu: None,
            v_ref: None,
            b_factors: None,
            e_factors: None,
        }
    }

    pub fn build(&self) -> Result<PlantConfig> {
        if !(self.frequency_scale.is_finite() && self.frequency_scale > 0.0) {
            return Err(Error::InvalidConfig(format!("frequency_scale {}", self.frequency_scale)));
        }
        let base = match self.preset {
            Preset::Linear => PlantConfig::linear(),
            Preset::Aligned => PlantConfig::aligned(),
            Preset::Misaligned => PlantConfig::misaligned(),
            Preset::Hardening => PlantConfig::hardening(),
        };
        let ratio = self.ratio.unwrap_or(base.omega2 / base.omega1);
        let omega1 = self.f1_hz.map_or(base.omega1, |f| 2.0 * PI * f) * self.frequency_scale;
        // rescale the nonlinear coefficients with the new omega1^2
        let s2 = (omega1 / base.omega1).powi(2);
        let mut p = PlantConfig {
            omega1,
            omega2: ratio * omega1,
            beta: base.beta * s2,
            gamma: base.gamma * s2,
            alpha: base.alpha * s2,
            mu: base.mu * omega1 / base.omega1,
            ..base
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(d1, d2, beta, gamma, alpha, mu, v_ref, b_factors, e_factors);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_run")]
    pub repeat: u32,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<ProtocolKind>,
    pub plant: PlantSpec,
    #[serde(default)]
    pub exciter: ExciterConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
}

fn one_run() -> u32 {
    1
}

fn default_protocols() -> Vec<ProtocolKind> {
    vec![ProtocolKind::Prt, ProtocolKind::Rct]
}

impl Scenario {
    pub fn new(name: impl Into<String>, plant: PlantSpec) -> Self {
        Self {
            name: name.into(),
            description: String::new(),
            seed: 0,
            repeat: 1,
            protocols: default_protocols(),
            plant,
            exciter: ExciterConfig::default(),
            control: ControlConfig::default(),
            protocol: ProtocolConfig::table(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Missing(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(Error::InvalidConfig(format!(
                "scenario name {:?} must be non-empty ASCII letters, digits, '-' or '_'",
                self.name
            )));
        }
        if self.repeat == 0 {
            return Err(Error::InvalidConfig("repeat must be at least 1".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::InvalidConfig("no protocols selected".into()));
        }
        self.setup(0)?.validate()
    }

    /// Requested protocols with PRT first, the rest in listed order, no repeats.
    pub fn schedule(&self) -> Vec<ProtocolKind> {
        let mut out = Vec::new();
        if self.protocols.contains(&ProtocolKind::Prt) {
            out.push(ProtocolKind::Prt);
        }
        for &k in &self.protocols {
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    /// Simulation setup for run `index` (zero-based).
    pub fn setup(&self, index: u32) -> Result<Setup> {
        let mut s = Setup::new(self.plant.build()?, self.exciter, self.control, self.protocol);
        s.seed = self.seed.wrapping_add(index as u64);
        Ok(s)
    }

    /// Canonical TOML rendering of the parsed scenario.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "lin"
[plant]
preset = "linear"
"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.repeat, 1);
        assert_eq!(s.protocol, ProtocolConfig::table());
        assert_eq!(s.plant.build().unwrap(), PlantConfig::linear());
        assert_eq!(s.schedule(), vec![ProtocolKind::Prt, ProtocolKind::Rct]);
    }

    #[test]
    fn canonical_round_trip_keeps_hash() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        let again = Scenario::from_toml(&s.canonical()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.config_hash(), again.config_hash());
        assert_eq!(s.config_hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        b.seed = 9;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(Scenario::from_toml(&text).is_err());
        let text = "name = \"x\"\n[plant]\npreset = \"aligned\"\nomega = 3\n";
        assert!(Scenario::from_toml(text).is_err());
    }

    #[test]
    fn bad_names_rejected() {
        assert!(Scenario::from_toml("name = \"a b\"\n[plant]\npreset = \"linear\"\n").is_err());
        assert!(Scenario::from_toml("name = \"\"\n[plant]\npreset = \"linear\"\n").is_err());
    }

    #[test]
    fn frequency_scale_keeps_normalized_shape() {
        let mut spec = PlantSpec::preset(Preset::Aligned);
        spec.frequency_scale = 1.005;
        let p = spec.build().unwrap();
        let q = PlantConfig::calibrated(PlantConfig::aligned().omega1 * 1.005, 1.89);
        for (x, y) in [(p.omega1, q.omega1), (p.omega2, q.omega2), (p.beta, q.beta), (p.gamma, q.gamma), (p.alpha, q.alpha), (p.mu, q.mu)] {
            assert!((x - y).abs() <= 1e-12 * y.abs(), "{x} {y}");
        }
    }

    #[test]
    fn overrides_apply_last() {
        let mut spec = PlantSpec::preset(Preset::Aligned);
        spec.ratio = Some(1.84);
        spec.alpha = Some(0.0);
        let p = spec.build().unwrap();
        assert!((p.omega2 / p.omega1 - 1.84).abs() < 1e-12);
        assert_eq!(p.alpha, 0.0);
    }

    #[test]
    fn schedule_puts_prt_first() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        s.protocols = vec![ProtocolKind::Ect, ProtocolKind::Prt, ProtocolKind::Ect];
        assert_eq!(s.schedule(), vec![ProtocolKind::Prt, ProtocolKind::Ect]);
    }
}
