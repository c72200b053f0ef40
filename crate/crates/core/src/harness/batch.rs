//! Many seeds of one scenario, run in parallel.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::run::{run_with_seed, HarnessError};
use super::scenario::Scenario;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub scenario: String,
    pub runs: usize,
    pub detections: usize,
    pub frequency: f64,
    /// Normal-approximation 95% interval for the detection rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_fine: f64,
    pub all_accepted_runs: usize,
}

impl BatchStats {
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "batch scenario={} runs={}", self.scenario, self.runs);
        let _ = writeln!(
            o,
            "detection count={} frequency={:.4} ci95=[{:.4}, {:.4}]",
            self.detections, self.frequency, self.ci_low, self.ci_high
        );
        let _ = writeln!(o, "fine mean={:.4}", self.mean_fine);
        let _ = writeln!(o, "accepted_runs {}", self.all_accepted_runs);
        o
    }
}

/// Runs seeds `scenario.seed .. scenario.seed + n`. Each seed gets its own
/// state, so the result does not depend on thread scheduling.
pub fn batch(scenario: &Scenario, n: usize) -> Result<BatchStats, HarnessError> {
    let n = n.max(1);
    let results: Vec<(bool, f64, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let out = run_with_seed(scenario, scenario.seed.wrapping_add(i))?;
            Ok((
                out.report.detected(),
                out.report.total_fine,
                out.report.all_accepted(),
            ))
        })
        .collect::<Result<_, HarnessError>>()?;
    let detections = results.iter().filter(|r| r.0).count();
    let f = detections as f64 / n as f64;
    let half = 1.96 * (f * (1.0 - f) / n as f64).sqrt();
    Ok(BatchStats {
        scenario: scenario.name.clone(),
        runs: n,
        detections,
        frequency: f,
        ci_low: (f - half).max(0.0),
        ci_high: (f + half).min(1.0),
        mean_fine: results.iter().map(|r| r.1).sum::<f64>() / n as f64,
        all_accepted_runs: results.iter().filter(|r| r.2).count(),
    })
}
