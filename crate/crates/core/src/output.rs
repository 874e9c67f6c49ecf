//! Record, backbone, FRC and report files.
//!
//! CSV files start with a `# config_hash=<sha256>` line followed by a fixed
//! header. Nothing time- or host-dependent is written, so reruns of a
//! scenario produce identical bytes.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::campaign::CampaignRun;
use crate::error::{Error, Result};
use crate::ident::{energy_decomposition, Backbone, Branch, Direction};
use crate::plant::oracle::OracleBackbone;
use crate::plant::PlantConfig;
use crate::protocols::{ProtocolKind, SteadyRecord};
use crate::report::{comparison_markdown, predicted_frcs, ComparisonRow, RunReport};
use crate::scenario::Scenario;

/// Columns of the record CSV, in file order.
pub const RECORD_COLUMNS: [&str; 26] = [
    "protocol",
    "level",
    "point",
    "direction",
    "setpoint",
    "target_lag_deg",
    "freq_hz",
    "phase_lag_deg",
    "voltage",
    "exciter_gain",
    "response_amp",
    "response_h1",
    "base_accel_h1",
    "frf_re",
    "frf_im",
    "modal1_h1",
    "modal2_h2",
    "direct_energy",
    "amp_dev_pct",
    "freq_std_hz",
    "phase_std_deg",
    "phase_err_deg",
    "accepted",
    "flag",
    "t_start",
    "t_end",
];

#[derive(Serialize)]
struct RecordRow<'a> {
    protocol: &'a str,
    level: usize,
    point: usize,
    direction: &'a str,
    setpoint: f64,
    target_lag_deg: f64,
    freq_hz: f64,
    phase_lag_deg: f64,
    voltage: f64,
    exciter_gain: f64,
    response_amp: f64,
    response_h1: f64,
    base_accel_h1: f64,
    frf_re: f64,
    frf_im: f64,
    modal1_h1: f64,
    modal2_h2: f64,
    direct_energy: f64,
    amp_dev_pct: f64,
    freq_std_hz: f64,
    phase_std_deg: f64,
    phase_err_deg: f64,
    accepted: bool,
    flag: &'a str,
    t_start: f64,
    t_end: f64,
}

impl<'a> RecordRow<'a> {
    fn new(r: &'a SteadyRecord) -> Self {
        let frf = r.frf();
        Self {
            protocol: r.protocol.as_str(),
            level: r.level,
            point: r.point,
            direction: r.direction.as_str(),
            setpoint: r.setpoint,
            target_lag_deg: r.target_lag.to_degrees(),
            freq_hz: r.freq_hz(),
            phase_lag_deg: r.phase_lag.to_degrees(),
            voltage: r.voltage,
            exciter_gain: r.exciter_gain,
            response_amp: r.amplitude(),
            response_h1: r.response.coeff(1).norm(),
            base_accel_h1: r.base_accel_amplitude(),
            frf_re: frf.re,
            frf_im: frf.im,
            modal1_h1: r.modal[0].coeff(1).norm(),
            modal2_h2: r.modal[1].coeff(2).norm(),
            direct_energy: r.direct_energy,
            amp_dev_pct: r.quality.amp_dev_pct,
            freq_std_hz: r.quality.freq_std_hz,
            phase_std_deg: r.quality.phase_std_deg,
            phase_err_deg: r.quality.phase_err_deg,
            accepted: r.quality.accepted,
            flag: r.quality.flag.as_deref().unwrap_or(""),
            t_start: r.t_start,
            t_end: r.t_end,
        }
    }
}

#[derive(Serialize)]
struct BackboneRow {
    direction: &'static str,
    modal_amplitude: f64,
    amplitude_metric: f64,
    freq_hz: f64,
    damping: f64,
}

#[derive(Serialize)]
struct FrcRow {
    backbone: &'static str,
    level: f64,
    branch: &'static str,
    freq_hz: f64,
    modal_amplitude: f64,
    response_amplitude: f64,
    phase_lag_deg: f64,
}

fn csv_bytes<T: Serialize>(hash: &str, rows: impl IntoIterator<Item = T>, header: Option<&[&str]>) -> Result<Vec<u8>> {
    let mut out = format!("# config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(header.is_none())
            .from_writer(&mut out);
        if let Some(h) = header {
            w.write_record(h)?;
        }
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// CSV of records with the frozen column set.
pub fn records_csv(hash: &str, records: &[SteadyRecord]) -> Result<Vec<u8>> {
    csv_bytes(hash, records.iter().map(RecordRow::new), Some(&RECORD_COLUMNS))
}

pub fn backbone_csv(hash: &str, backbone: &Backbone) -> Result<Vec<u8>> {
    let rows = backbone.points.iter().map(|p| BackboneRow {
        direction: p.direction.as_str(),
        modal_amplitude: p.modal_amplitude,
        amplitude_metric: p.a,
        freq_hz: p.omega / (2.0 * std::f64::consts::PI),
        damping: p.damping,
    });
    csv_bytes(
        hash,
        rows,
        Some(&["direction", "modal_amplitude", "amplitude_metric", "freq_hz", "damping"]),
    )
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Lower => "lower",
        Branch::Peak => "peak",
        Branch::Upper => "upper",
    }
}

pub fn frc_csv(hash: &str, frcs: &[(Direction, crate::ident::Frc)]) -> Result<Vec<u8>> {
    let rows = frcs.iter().flat_map(|(dir, f)| {
        f.points.iter().map(move |p| FrcRow {
            backbone: dir.as_str(),
            level: f.level,
            branch: branch_name(p.branch),
            freq_hz: p.omega / (2.0 * std::f64::consts::PI),
            modal_amplitude: p.modal_amplitude,
            response_amplitude: p.response_amplitude,
            phase_lag_deg: p.phase_lag.to_degrees(),
        })
    });
    csv_bytes(
        hash,
        rows,
        Some(&["backbone", "level", "branch", "freq_hz", "modal_amplitude", "response_amplitude", "phase_lag_deg"]),
    )
}

#[derive(Serialize)]
struct OracleRow {
    modal_amplitude: f64,
    freq_hz: f64,
    freq_ratio: f64,
    damping: f64,
    forcing: f64,
    amplitude_metric: f64,
    e12: f64,
    e22: f64,
    residual: f64,
}

/// Harmonic-balance backbone table.
pub fn oracle_csv(hash: &str, plant: &PlantConfig, oracle: &OracleBackbone) -> Result<Vec<u8>> {
    let rows = oracle.solutions.iter().map(|s| {
        let t = energy_decomposition(&s.modal_spectra(), s.omega, plant.omegas()).ok();
        OracleRow {
            modal_amplitude: s.modal_amplitude,
            freq_hz: s.omega / (2.0 * std::f64::consts::PI),
            freq_ratio: s.omega / plant.omega1,
            damping: s.damping,
            forcing: s.forcing,
            amplitude_metric: s.amplitude_metric,
            e12: t.as_ref().map_or(0.0, |t| t.fraction(1, 2)),
            e22: t.as_ref().map_or(0.0, |t| t.fraction(2, 2)),
            residual: s.residual,
        }
    });
    csv_bytes(
        hash,
        rows,
        Some(&["modal_amplitude", "freq_hz", "freq_ratio", "damping", "forcing", "amplitude_metric", "e12", "e22", "residual"]),
    )
}

fn stem(name: &str, what: &str, run: u32) -> String {
    format!("{name}_{what}_run{run:03}")
}

/// File name of the record CSV of one protocol and run.
pub fn records_file(name: &str, kind: ProtocolKind, run: u32) -> String {
    format!("{}.csv", stem(name, kind.as_str(), run))
}

pub fn report_file(name: &str, run: u32) -> String {
    format!("{}.json", stem(name, "report", run))
}

/// Write every output of one run into `dir`; returns the paths written.
pub fn write_run(dir: &Path, scenario: &Scenario, run: &CampaignRun) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let hash = scenario.config_hash();
    let name = &scenario.name;
    let mut written = Vec::new();
    let mut put = |file: String, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(file);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    for kind in scenario.schedule() {
        put(records_file(name, kind, run.index), records_csv(&hash, &run.records_of(kind))?)?;
    }
    let backbone = Backbone::new(run.report.backbone.clone());
    if !backbone.is_empty() {
        put(format!("{}.csv", stem(name, "backbone", run.index)), backbone_csv(&hash, &backbone)?)?;
        let frcs = predicted_frcs(&backbone, &scenario.protocol);
        put(format!("{}.csv", stem(name, "frc", run.index)), frc_csv(&hash, &frcs)?)?;
    }
    put(
        format!("{}.json", stem(name, "records", run.index)),
        serde_json::to_vec_pretty(&run.records)?,
    )?;
    put(report_file(name, run.index), serde_json::to_vec_pretty(&run.report)?)?;
    put(format!("{}.md", stem(name, "summary", run.index)), run.report.markdown().into_bytes())?;
    Ok(written)
}

/// `comparison.md` and `comparison.json` in `dir`.
pub fn write_comparison(dir: &Path, rows: &[ComparisonRow]) -> Result<[PathBuf; 2]> {
    let md = dir.join("comparison.md");
    let json = dir.join("comparison.json");
    fs::write(&md, comparison_markdown(rows))?;
    fs::write(&json, serde_json::to_vec_pretty(rows)?)?;
    Ok([md, json])
}

/// Load the run reports of a scenario, failing with the full list of
/// missing files.
pub fn read_reports(dir: &Path, scenario: &Scenario) -> Result<Vec<RunReport>> {
    let paths: Vec<PathBuf> = (1..=scenario.repeat)
        .map(|i| dir.join(report_file(&scenario.name, i)))
        .collect();
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Missing(format!("run outputs not found: {}", missing.join(", "))));
    }
    paths
        .iter()
        .map(|p| Ok(serde_json::from_slice(&fs::read(p)?)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_csv_has_hash_line_and_frozen_header() {
        let recs = vec![SteadyRecord::empty(ProtocolKind::Rct)];
        let text = String::from_utf8(records_csv("abc", &recs).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config_hash=abc"));
        assert_eq!(lines.next().unwrap(), RECORD_COLUMNS.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with("rct,0,0,up,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn empty_record_set_still_has_header() {
        let text = String::from_utf8(records_csv("h", &[]).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn file_names_encode_scenario_protocol_and_run() {
        assert_eq!(records_file("cfg1-aligned", ProtocolKind::Prt, 2), "cfg1-aligned_prt_run002.csv");
        assert_eq!(report_file("x", 10), "x_report_run010.json");
    }

    #[test]
    fn missing_reports_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Scenario::new("m", crate::scenario::PlantSpec::preset(crate::scenario::Preset::Linear));
        s.repeat = 2;
        let err = read_reports(dir.path(), &s).unwrap_err().to_string();
        assert!(err.contains("m_report_run001.json") && err.contains("m_report_run002.json"), "{err}");
    }
}
