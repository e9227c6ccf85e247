use std::path::Path;

use super::experiment::{ExperimentId, RunReport, TABLE_ROWS};
use super::{write_atomic, PipelineError, Result};
use crate::stategen::LossBudget;

/// Photon-number table: rows `n = 0..7`, one value and one sigma column per
/// experiment. Missing sigmas (bootstrap disabled) are left empty.
pub fn emit_table1(reports: &[RunReport], path: &Path) -> Result<()> {
    let columns = ExperimentId::ALL
        .iter()
        .map(|id| {
            reports
                .iter()
                .find(|r| r.experiment == id.as_str())
                .and_then(|r| r.tomography.as_ref())
                .ok_or_else(|| PipelineError::MissingReport(id.to_string()))
                .map(|t| (id, t))
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["n".to_string()];
        for (id, _) in &columns {
            header.push(id.to_string());
            header.push(format!("{id}_sigma"));
        }
        csv.write_record(&header)?;
        for n in 0..TABLE_ROWS {
            let mut row = vec![n.to_string()];
            for (_, t) in &columns {
                row.push(t.photon_numbers[n].to_string());
                row.push(t.photon_number_sigmas.as_ref().map(|s| s[n].to_string()).unwrap_or_default());
            }
            csv.write_record(&row)?;
        }
        csv.flush()
    })
}

/// Loss budget as `element,loss_percent`.
pub fn emit_table2(budget: &LossBudget, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["element", "loss_percent"])?;
        for (name, loss) in budget.rows() {
            csv.write_record([name.to_string(), format!("{loss:.1}")])?;
        }
        csv.flush()
    })
}
