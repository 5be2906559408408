//! Run report emission: a flat key=value text form for golden files and
//! a JSON document for scripting. Both are byte-deterministic for a
//! given config and seed.

use serde::Serialize;

use crate::config::SimConfig;
use crate::engine::ExecutionReport;
use crate::timing::{baseline_movement_energy, EnergyLedger, RunStats};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub workload: String,
    pub config: SimConfig,
    pub events: crate::engine::EventCounts,
    pub ledger: EnergyLedger<f64>,
    pub stats: RunStats<f64>,
    /// Workload-specific extras, e.g. the off-chip movement baseline.
    pub extras: Vec<(String, String)>,
}

impl RunReport {
    pub fn new(
        workload: impl Into<String>,
        config: &SimConfig,
        execution: &ExecutionReport,
        ledger: EnergyLedger<f64>,
        stats: RunStats<f64>,
    ) -> Self {
        let mut extras = Vec::new();
        if stats.shifts_executed > 0 {
            let row_bytes = (execution.columns_per_row / 8) as u64;
            let (low, high) = baseline_movement_energy::<f64>(row_bytes, false);
            extras.push(("baseline_row_read_low_nj".into(), fmt_f64(low)));
            extras.push(("baseline_row_read_high_nj".into(), fmt_f64(high)));
        }
        RunReport {
            workload: workload.into(),
            config: config.clone(),
            events: execution.totals(),
            ledger,
            stats,
            extras,
        }
    }

    /// Flat text form, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("workload", self.workload.clone());
        push("columns_per_row", self.config.geometry.columns_per_row.to_string());
        push("events_aap", self.events.aap.to_string());
        push("events_tra", self.events.tra.to_string());
        push("events_notx", self.events.notx.to_string());
        push("events_act", self.events.act.to_string());
        push("events_pre", self.events.pre.to_string());
        push("events_rd", self.events.rd.to_string());
        push("events_wr", self.events.wr.to_string());
        push("shifts", self.events.shifts.to_string());
        let totals = self.ledger.totals();
        push("energy_active_nj", fmt_f64(totals.active_nj));
        push("energy_burst_nj", fmt_f64(totals.burst_nj));
        push("energy_refresh_nj", fmt_f64(totals.refresh_nj));
        push("energy_precharge_nj", fmt_f64(totals.precharge_nj));
        push("energy_standby_nj", fmt_f64(totals.standby_nj));
        push("energy_total_nj", fmt_f64(totals.total_nj()));
        push("total_time_ns", fmt_f64(self.stats.total_time_ns));
        if let Some(v) = self.stats.latency_per_shift_ns {
            push("latency_per_shift_ns", fmt_f64(v));
        }
        if let Some(v) = self.stats.throughput_mops {
            push("throughput_mops", fmt_f64(v));
        }
        if let Some(v) = self.stats.energy_per_shift_nj {
            push("energy_per_shift_nj", fmt_f64(v));
        }
        if let Some(v) = self.stats.energy_per_kb_nj {
            push("energy_per_kb_nj", fmt_f64(v));
        }
        for (k, v) in &self.extras {
            push(k, v.clone());
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Fixed-precision float formatting so reports stay byte-stable and
/// readable; six decimals cover every calibrated quantity.
pub fn fmt_f64(v: f64) -> String {
    let s = format!("{v:.6}");
    // Trim trailing zeros but keep one decimal.
    let trimmed = s.trim_end_matches('0');
    let trimmed = if trimmed.ends_with('.') {
        &s[..trimmed.len() + 1]
    } else {
        trimmed
    };
    trimmed.to_string()
}
