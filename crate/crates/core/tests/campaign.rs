use std::f64::consts::PI;

use vibelab_core::campaign::{run_once, run_scenario};
use vibelab_core::protocols::{ProtocolConfig, ProtocolKind};
use vibelab_core::scenario::{PlantSpec, Preset, Scenario};

fn short(preset: Preset, protocols: &[ProtocolKind]) -> Scenario {
    let mut s = Scenario::new("short", PlantSpec::preset(preset));
    s.protocols = protocols.to_vec();
    s.protocol = ProtocolConfig::compressed(10.0);
    s.protocol.prt.levels = 8;
    s.protocol.rct.levels = 2;
    s.protocol.ect.levels = 2;
    s.protocol.ect.points = 8;
    s
}

#[test]
fn linear_prt_and_rct_return_model_values() {
    let mut s = short(Preset::Linear, &[ProtocolKind::Rct, ProtocolKind::Prt]);
    s.protocol.time_scale = 1.0;
    let run = run_once(&s, 1).unwrap();
    let plant = s.plant.build().unwrap();
    assert_eq!(run.records.first().unwrap().protocol, ProtocolKind::Prt);
    let prt = run.records_of(ProtocolKind::Prt);
    assert_eq!(prt.len(), 16);
    assert_eq!(run.records_of(ProtocolKind::Rct).len(), 2 * s.protocol.rct.points);
    let accepted = prt.iter().filter(|r| r.is_accepted()).count();
    assert_eq!(accepted, 16);
    assert_eq!(run.report.backbone.len(), accepted);
    for p in &run.report.backbone {
        assert!((p.omega / plant.omega1 - 1.0).abs() < 1e-4, "{}", p.omega / (2.0 * PI));
        assert!((p.damping / plant.d1 - 1.0).abs() < 0.02, "{}", p.damping);
    }
    assert_eq!(run.report.damping.len(), 2);
    for lf in &run.report.circle_fits {
        let d = lf.fit.as_ref().unwrap().d_mean;
        assert!((d / plant.d1 - 1.0).abs() < 0.02, "{d}");
    }
}

#[test]
fn nonlinear_run_fills_every_report_section() {
    let s = short(Preset::Aligned, &[ProtocolKind::Prt, ProtocolKind::Ect]);
    let run = run_once(&s, 1).unwrap();
    let r = &run.report;
    assert_eq!(r.counts.len(), 2);
    assert!(!r.backbone.is_empty());
    assert_eq!(r.ect_levels.len(), 2);
    assert_eq!(r.ect_points.len(), 16, "{:?}", r.ect_levels);
    assert!(r.ect_levels.iter().all(|l| l.error.is_none() && l.band_width_hz.is_some()));
    assert!(r.circle_fits.is_empty() && r.damping.is_empty());
    assert_eq!(r.energy.len(), r.backbone.len());
    for e in &r.energy {
        assert!((e.closure - 1.0).abs() < 0.01, "{}", e.closure);
    }
    // softening at the low end of the backbone
    let plant = s.plant.build().unwrap();
    assert!(r.backbone.iter().all(|p| p.omega < plant.omega1));
}

#[test]
fn repeats_advance_the_seed() {
    let mut s = short(Preset::Linear, &[ProtocolKind::Prt]);
    s.repeat = 2;
    s.seed = 40;
    let runs = run_scenario(&s).unwrap();
    assert_eq!(runs.iter().map(|r| (r.index, r.seed)).collect::<Vec<_>>(), vec![(1, 40), (2, 41)]);
    assert_eq!(runs[1].report.run, 2);
    assert_eq!(runs[0].report.config_hash, s.config_hash());
}
