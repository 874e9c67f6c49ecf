//! Short end-to-end checks on the linear plant with full-length holds.

use anyhow::{bail, Result};

use vibelab_core::campaign::run_once;
use vibelab_core::control::QualityThresholds;
use vibelab_core::output::records_csv;
use vibelab_core::protocols::ProtocolKind;
use vibelab_core::scenario::{PlantSpec, Preset, Scenario};

const FREQ_REL: f64 = 1e-4;
const DAMPING_REL: f64 = 0.02;

fn scenario() -> Scenario {
    let mut s = Scenario::new("selftest", PlantSpec::preset(Preset::Linear));
    s.protocols = vec![ProtocolKind::Prt, ProtocolKind::Rct];
    s.protocol.prt.levels = 3;
    s.protocol.rct.levels = 2;
    s
}

fn line(ok: bool, what: &str, detail: String) -> bool {
    println!("{} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run() -> Result<()> {
    let s = scenario();
    let plant = s.plant.build()?;
    let f1 = plant.omega1 / (2.0 * std::f64::consts::PI);
    let a = run_once(&s, 1)?;
    let b = run_once(&s, 1)?;
    let mut all = true;

    let worst_f = a
        .report
        .backbone
        .iter()
        .map(|p| (p.omega / plant.omega1 - 1.0).abs())
        .fold(0.0, f64::max);
    let worst_d = a
        .report
        .backbone
        .iter()
        .map(|p| (p.damping / plant.d1 - 1.0).abs())
        .fold(0.0, f64::max);
    let n = a.report.backbone.len();
    all &= line(
        n == 6 && worst_f < FREQ_REL,
        "PRT frequency",
        format!("{n} accepted points, worst relative error {worst_f:.2e} vs {f1} Hz"),
    );
    all &= line(n == 6 && worst_d < DAMPING_REL, "PRT damping", format!("worst relative error {worst_d:.2e}"));
    let fits: Vec<f64> = a.report.circle_fits.iter().filter_map(|f| f.fit.as_ref().map(|f| f.d_mean)).collect();
    let worst_cf = fits.iter().map(|d| (d / plant.d1 - 1.0).abs()).fold(0.0, f64::max);
    all &= line(
        fits.len() == 2 && worst_cf < DAMPING_REL,
        "RCT circle fit",
        format!("{} levels, worst relative error {worst_cf:.2e}", fits.len()),
    );
    let t = QualityThresholds::default();
    let filter_ok = t.passes(1.999, 0.199, 2.499) && !t.passes(2.0, 0.1, 1.0) && !t.passes(1.0, 0.2, 1.0) && !t.passes(1.0, 0.1, 2.5);
    all &= line(filter_ok, "quality thresholds", "strict at 2 %, 0.2 Hz, 2.5 deg".into());
    let hash = s.config_hash();
    let same = records_csv(&hash, &a.records)? == records_csv(&hash, &b.records)?;
    all &= line(same, "determinism", "two runs give identical record bytes".into());
    if !all {
        bail!("selftest failed");
    }
    Ok(())
}
