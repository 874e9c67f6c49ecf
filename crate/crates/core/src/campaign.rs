//! Running a scenario: protocols in order on one rig lineage, then identification.

use crate::error::Result;
use crate::exciter::Exciter;
use crate::protocols::{run_ect_with, run_prt_with, run_rct_with, ProtocolKind, RunOutput, SteadyRecord};
use crate::report::{analyze_run, RunReport};
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct CampaignRun {
    /// One-based.
    pub index: u32,
    pub seed: u64,
    pub records: Vec<SteadyRecord>,
    pub report: RunReport,
}

impl CampaignRun {
    pub fn records_of(&self, kind: ProtocolKind) -> Vec<SteadyRecord> {
        self.records.iter().filter(|r| r.protocol == kind).cloned().collect()
    }
}

/// One run. The exciter, including its drift clock, carries over from one
/// protocol to the next.
pub fn run_once(scenario: &Scenario, index: u32) -> Result<CampaignRun> {
    let setup = scenario.setup(index.saturating_sub(1))?;
    let mut exciter: Option<Exciter> = None;
    let mut records = Vec::new();
    for kind in scenario.schedule() {
        let RunOutput { records: recs, exciter: ex } = match kind {
            ProtocolKind::Prt => run_prt_with(&setup, exciter.take())?,
            ProtocolKind::Rct => run_rct_with(&setup, exciter.take())?,
            ProtocolKind::Ect => run_ect_with(&setup, exciter.take())?,
        };
        exciter = Some(ex);
        records.extend(recs);
    }
    let report = analyze_run(
        &scenario.name,
        &scenario.config_hash(),
        index,
        setup.seed,
        &setup.plant,
        &setup.protocol,
        &records,
    )?;
    Ok(CampaignRun {
        index,
        seed: setup.seed,
        records,
        report,
    })
}

pub fn run_scenario(scenario: &Scenario) -> Result<Vec<CampaignRun>> {
    (1..=scenario.repeat).map(|i| run_once(scenario, i)).collect()
}
