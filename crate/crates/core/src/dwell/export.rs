use std::io::Write;

use super::balance::DwellState;
use super::golden::Probe;
use crate::error::{Error, Result};
use crate::model::TargetNetwork;

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Balancing history as CSV: `iteration, k_p, max_peak, g_avg`, then
/// `peak_<id>` and `dwell_<id>` for every target of the cycle.
pub fn write_balance_csv<W: Write>(state: &DwellState, network: &TargetNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["iteration", "k_p", "max_peak", "g_avg"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for &i in &state.targets {
        header.push(format!("peak_{}", network.targets[i].id));
    }
    for &i in &state.targets {
        header.push(format!("dwell_{}", network.targets[i].id));
    }
    w.write_record(&header).map_err(csv_error)?;
    for row in &state.trace {
        let mut rec = vec![
            row.iteration.to_string(),
            row.k_p.to_string(),
            row.max_peak.to_string(),
            row.g_avg.to_string(),
        ];
        rec.extend(row.peaks.iter().map(f64::to_string));
        rec.extend(row.totals.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Period-search probes as CSV: `period, g_con, t_min, t_max`.
pub fn write_probes_csv<W: Write>(probes: &[Probe], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["period", "g_con", "t_min", "t_max"]).map_err(csv_error)?;
    for p in probes {
        w.write_record([
            p.period.to_string(),
            p.g_con.to_string(),
            p.bracket[0].to_string(),
            p.bracket[1].to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
