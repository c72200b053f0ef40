//! Scenario engine: loads a scenario, runs Stages 0 to 6 between the
//! agents, and reports what happened.
//!
//! Every message between agents goes through an [`events::EventLog`], and
//! the privacy and sensor-lifecycle checks in the report are assertions
//! over that log.

mod batch;
pub mod events;
mod run;
mod scenario;

pub use batch::{batch, BatchStats};
pub use run::{
    agent_rng, build_requests, lifecycle_violations, plaintext_hits, run, run_with_seed,
    AuditSummary, HarnessError, PrivacyCheck, QueryOutcome, RunOutcome, RunReport,
};
pub use scenario::{AuditSpec, RiderSpec, Scenario, ScenarioError};

use std::fs;
use std::io;
use std::path::Path;

/// Writes a run directory: the report, the event log, receipts, `sigma`
/// and one proof bundle per proved query.
pub fn write_run_dir(out: &RunOutcome, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), out.report.to_text())?;
    fs::write(dir.join("events.log"), out.log.to_text())?;
    fs::write(dir.join("sigma.txt"), format!("{}\n", out.report.sigma))?;
    let receipts: String = out.receipts.iter().map(|r| r.to_text() + "\n").collect();
    fs::write(dir.join("receipts.txt"), receipts)?;
    for (i, (name, bytes)) in out.bundles.iter().enumerate() {
        fs::write(dir.join(format!("proof_{i:02}_{name}.bin")), bytes)?;
    }
    Ok(())
}
