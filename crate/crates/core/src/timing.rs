//! Latency and energy accounting for executed command events.
//!
//! Calibrated against a DDR3-1333 4Gb part: one AAP costs 51.9 ns and
//! 7.56 nJ of activation energy, a run's first shift adds a 1.1 ns /
//! 1.081 nJ setup term, and refresh accrues 77.117 nJ per elapsed tREFI
//! (prorating the final partial interval by default). Refresh is
//! non-blocking unless the blocking mode is selected, in which case each
//! whole interval also stalls the timeline by one row cycle.

use std::collections::BTreeMap;

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::engine::{EventCounts, ExecutionReport};
use crate::error::{Error, Result};

/// Time a 64-byte burst occupies on the DDR3-1333 bus: 8 beats at 0.75 ns.
pub const BURST_64B_NS: f64 = 6.0;

/// DDR3 per-64B-transfer energy range used for the off-chip movement
/// baseline, in nJ.
pub const BASELINE_TRANSFER_NJ: (f64, f64) = (10.0, 15.0);

fn c<F: Float + FromPrimitive>(v: f64) -> F {
    F::from_f64(v).expect("constant representable")
}

/// Core DRAM timing set, nanoseconds except tREFI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingParams<F> {
    pub t_rcd_ns: F,
    pub t_rp_ns: F,
    pub t_ras_ns: F,
    pub t_rc_ns: F,
    pub t_refi_us: F,
    /// Calibrated composite cost of one AAP.
    pub t_aap_ns: F,
    /// One-time overhead charged to runs that contain shifts.
    pub t_shift_setup_ns: F,
}

impl<F: Float + FromPrimitive> TimingParams<F> {
    /// Standard DDR3-1333 timing.
    pub fn ddr3_1333() -> Self {
        Self {
            t_rcd_ns: c(13.5),
            t_rp_ns: c(13.5),
            t_ras_ns: c(36.0),
            t_rc_ns: c(49.5),
            t_refi_us: c(7.8),
            t_aap_ns: c(51.9),
            t_shift_setup_ns: c(1.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let close = (self.t_rc_ns - (self.t_ras_ns + self.t_rp_ns)).abs() < c(1e-9);
        if !close {
            return Err(Error::Config("tRC must equal tRAS + tRP".into()));
        }
        Ok(())
    }

    pub fn t_refi_ns(&self) -> F {
        self.t_refi_us * c(1000.0)
    }
}

impl<F: Float + FromPrimitive> Default for TimingParams<F> {
    fn default() -> Self {
        Self::ddr3_1333()
    }
}

/// How refresh events are counted against elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RefreshEventModel {
    /// Ranks refresh every tREFI, staggered within the channel, so a
    /// system event fires each tREFI / ranks_per_channel at
    /// e_ref / ranks_per_channel. Reproduces the reference breakdown
    /// exactly (0 / 1x / 2.5x / 13.5x of e_ref across the workloads).
    RankStaggered,
    /// Events accrue fractionally: elapsed / tREFI.
    Prorated,
    /// Only whole elapsed tREFI intervals fire.
    WholeIntervals,
}

/// Whether refresh stalls the command timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RefreshMode {
    EnergyOnly,
    Blocking,
}

/// Energy calibration constants, nanojoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams<F> {
    pub e_aap_active_nj: F,
    /// Charged once per run containing shifts; booked under precharge
    /// (the run-constant precharge/standby residue of the calibration).
    pub e_shift_overhead_nj: F,
    pub e_ref_event_nj: F,
    pub e_burst_per_64b_nj: F,
    pub p_standby_nw: F,
    pub refresh_event_model: RefreshEventModel,
}

impl<F: Float + FromPrimitive> EnergyParams<F> {
    pub fn ddr3_1333() -> Self {
        Self {
            e_aap_active_nj: c(7.56),
            e_shift_overhead_nj: c(1.081),
            e_ref_event_nj: c(77.117),
            e_burst_per_64b_nj: c(12.5),
            p_standby_nw: c(0.0),
            refresh_event_model: RefreshEventModel::RankStaggered,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.e_aap_active_nj,
            self.e_shift_overhead_nj,
            self.e_ref_event_nj,
            self.e_burst_per_64b_nj,
            self.p_standby_nw,
        ];
        if fields.iter().any(|v| *v < F::zero()) {
            return Err(Error::Config("energy constants must be >= 0".into()));
        }
        Ok(())
    }
}

impl<F: Float + FromPrimitive> Default for EnergyParams<F> {
    fn default() -> Self {
        Self::ddr3_1333()
    }
}

/// Per-bank energy accumulators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BankLedger<F> {
    pub active_nj: F,
    pub burst_nj: F,
    pub refresh_nj: F,
    pub precharge_nj: F,
    pub standby_nj: F,
}

impl<F: Float> Default for BankLedger<F> {
    fn default() -> Self {
        Self {
            active_nj: F::zero(),
            burst_nj: F::zero(),
            refresh_nj: F::zero(),
            precharge_nj: F::zero(),
            standby_nj: F::zero(),
        }
    }
}

impl<F: Float> BankLedger<F> {
    pub fn total_nj(&self) -> F {
        self.active_nj + self.burst_nj + self.refresh_nj + self.precharge_nj + self.standby_nj
    }

    fn add(&mut self, other: &Self) {
        self.active_nj = self.active_nj + other.active_nj;
        self.burst_nj = self.burst_nj + other.burst_nj;
        self.refresh_nj = self.refresh_nj + other.refresh_nj;
        self.precharge_nj = self.precharge_nj + other.precharge_nj;
        self.standby_nj = self.standby_nj + other.standby_nj;
    }
}

/// Energy bookkeeping for a whole run: per-bank categories plus the
/// command tallies they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger<F: Float> {
    pub banks: BTreeMap<usize, BankLedger<F>>,
    pub counts: EventCounts,
}

impl<F: Float> Default for EnergyLedger<F> {
    fn default() -> Self {
        Self {
            banks: BTreeMap::new(),
            counts: EventCounts::default(),
        }
    }
}

impl<F: Float> EnergyLedger<F> {
    pub fn totals(&self) -> BankLedger<F> {
        let mut sum = BankLedger::default();
        for b in self.banks.values() {
            sum.add(b);
        }
        sum
    }

    pub fn total_nj(&self) -> F {
        self.totals().total_nj()
    }

    /// Component-wise sum, for bank-parallel runs merged at report level.
    pub fn merged(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (bank, ledger) in &other.banks {
            out.banks.entry(*bank).or_default().add(ledger);
        }
        out.counts.add(&other.counts);
        out
    }
}

/// Derived per-run figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats<F> {
    pub total_time_ns: F,
    pub shifts_executed: u64,
    pub latency_per_shift_ns: Option<F>,
    pub throughput_mops: Option<F>,
    pub energy_per_shift_nj: Option<F>,
    pub energy_per_kb_nj: Option<F>,
}

fn bank_busy_ns<F: Float + FromPrimitive>(counts: &EventCounts, timing: &TimingParams<F>) -> F {
    let n = |v: u64| c::<F>(v as f64);
    n(counts.aap + counts.notx) * timing.t_aap_ns
        + n(counts.tra + counts.dra) * timing.t_rc_ns
        + n(counts.act) * timing.t_ras_ns
        + n(counts.pre) * timing.t_rp_ns
        + n(counts.rd + counts.wr) * c(BURST_64B_NS)
}

/// Prices a completed execution. Returns the per-bank ledger and the
/// derived run statistics.
///
/// Banks run in parallel: the run's span is the longest bank timeline
/// (plus the one-time shift setup). Refresh energy for the span is
/// attributed to the trace's scope bank.
pub fn cost_trace<F: Float + FromPrimitive>(
    report: &ExecutionReport,
    timing: &TimingParams<F>,
    energy: &EnergyParams<F>,
    refresh_mode: RefreshMode,
) -> Result<(EnergyLedger<F>, RunStats<F>)> {
    timing.validate()?;
    energy.validate()?;

    let totals = report.totals();
    let mut ledger = EnergyLedger::<F>::default();
    ledger.counts = totals;

    let mut span = F::zero();
    for (bank, counts) in &report.per_bank {
        let busy = bank_busy_ns(counts, timing);
        span = span.max(busy);
        let n = |v: u64| c::<F>(v as f64);
        let entry = ledger.banks.entry(*bank).or_default();
        entry.active_nj = n(counts.aap + counts.notx + counts.tra + counts.dra)
            * energy.e_aap_active_nj
            + n(counts.act) * energy.e_aap_active_nj / c(2.0);
        entry.burst_nj = n(counts.rd + counts.wr) * energy.e_burst_per_64b_nj;
    }

    let any_events = totals != EventCounts::default();
    let mut total_time = span;
    if totals.shifts > 0 {
        total_time = total_time + timing.t_shift_setup_ns;
        ledger
            .banks
            .entry(report.bank_scope)
            .or_default()
            .precharge_nj = energy.e_shift_overhead_nj;
    }

    // Refresh schedule over the run span, charged to the scope bank.
    // The staggered model fires an event every tREFI / ranks at
    // e_ref / ranks; the other models work in whole-tREFI units.
    let ranks = c::<F>(report.ranks_per_channel.max(1) as f64);
    let (interval, per_event) = match energy.refresh_event_model {
        RefreshEventModel::RankStaggered => {
            (timing.t_refi_ns() / ranks, energy.e_ref_event_nj / ranks)
        }
        _ => (timing.t_refi_ns(), energy.e_ref_event_nj),
    };
    let refresh_events: F = if total_time > F::zero() && interval > F::zero() {
        match refresh_mode {
            RefreshMode::EnergyOnly => match energy.refresh_event_model {
                RefreshEventModel::Prorated => total_time / interval,
                _ => (total_time / interval).floor(),
            },
            RefreshMode::Blocking => {
                // Whole intervals only; each stalls the timeline by one
                // row cycle, which can itself cross further intervals.
                let mut events = F::zero();
                loop {
                    let due = (total_time / interval).floor();
                    if due > events {
                        total_time = total_time + (due - events) * timing.t_rc_ns;
                        events = due;
                    } else {
                        break events;
                    }
                }
            }
        }
    } else {
        F::zero()
    };
    if refresh_events > F::zero() {
        let entry = ledger.banks.entry(report.bank_scope).or_default();
        entry.refresh_nj = refresh_events * per_event;
    }

    if energy.p_standby_nw > F::zero() {
        // nW * ns = 1e-18 J = 1e-9 nJ.
        let entry = ledger.banks.entry(report.bank_scope).or_default();
        entry.standby_nj = energy.p_standby_nw * total_time * c(1e-9);
    }

    if any_events && total_time <= F::zero() {
        return Err(Error::Invariant(
            "nonzero event stream priced to a zero-duration run".into(),
        ));
    }

    let shifts = totals.shifts;
    let stats = if shifts > 0 {
        let nshift = c::<F>(shifts as f64);
        let per_shift_energy = ledger.total_nj() / nshift;
        let row_kb = c::<F>(report.columns_per_row as f64 / 8.0 / 1024.0);
        RunStats {
            total_time_ns: total_time,
            shifts_executed: shifts,
            latency_per_shift_ns: Some(total_time / nshift),
            throughput_mops: Some(nshift * c(1000.0) / total_time),
            energy_per_shift_nj: Some(per_shift_energy),
            energy_per_kb_nj: Some(per_shift_energy / row_kb),
        }
    } else {
        RunStats {
            total_time_ns: total_time,
            shifts_executed: 0,
            latency_per_shift_ns: None,
            throughput_mops: None,
            energy_per_shift_nj: None,
            energy_per_kb_nj: None,
        }
    };

    Ok((ledger, stats))
}

/// Energy range (low, high) in nJ for moving `bytes` over the DDR3 bus,
/// at 10-15 nJ per 64-byte transfer; a writeback doubles it.
pub fn baseline_movement_energy<F: Float + FromPrimitive>(bytes: u64, writeback: bool) -> (F, F) {
    assert!(bytes > 0, "baseline movement needs a positive byte count");
    let transfers = c::<F>(bytes.div_ceil(64) as f64);
    let factor = if writeback { c(2.0) } else { c(1.0) };
    (
        transfers * c(BASELINE_TRANSFER_NJ.0) * factor,
        transfers * c(BASELINE_TRANSFER_NJ.1) * factor,
    )
}

/// Linear bank-parallel scaling; energy per operation is unchanged.
pub fn aggregate_throughput<F: Float + FromPrimitive>(per_bank_mops: F, banks: usize) -> F {
    per_bank_mops * c(banks as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift_report(shifts: u64) -> ExecutionReport {
        let mut report = ExecutionReport {
            columns_per_row: 65_536,
            ranks_per_channel: 2,
            bank_scope: 0,
            commands_executed: shifts as usize,
            ..Default::default()
        };
        report.per_bank.insert(
            0,
            EventCounts {
                aap: 4 * shifts,
                shifts,
                ..Default::default()
            },
        );
        report
    }

    fn defaults() -> (TimingParams<f64>, EnergyParams<f64>) {
        (TimingParams::ddr3_1333(), EnergyParams::ddr3_1333())
    }

    #[test]
    fn single_shift_matches_calibration() {
        let (t, e) = defaults();
        let (ledger, stats) =
            cost_trace(&shift_report(1), &t, &e, RefreshMode::EnergyOnly).unwrap();
        let totals = ledger.totals();
        assert!((totals.active_nj - 30.24).abs() < 1e-9);
        assert_eq!(totals.burst_nj, 0.0);
        // 208.7 ns does not reach the first staggered refresh slot.
        assert_eq!(totals.refresh_nj, 0.0);
        assert!((totals.total_nj() - 31.321).abs() < 1e-9);
        assert!((stats.total_time_ns - 208.7).abs() < 1e-9);
    }

    #[test]
    fn staggered_refresh_reproduces_reference_multiples() {
        let (t, e) = defaults();
        for (shifts, expect_events) in [(1u64, 0.0), (50, 2.0), (100, 5.0), (512, 27.0)] {
            let (ledger, _) =
                cost_trace(&shift_report(shifts), &t, &e, RefreshMode::EnergyOnly).unwrap();
            let refresh = ledger.totals().refresh_nj;
            let expect = expect_events * 77.117 / 2.0;
            assert!(
                (refresh - expect).abs() < 1e-9,
                "{shifts} shifts: {refresh} vs {expect}"
            );
        }
    }

    #[test]
    fn empty_report_is_all_zero() {
        let (t, e) = defaults();
        let report = ExecutionReport {
            columns_per_row: 65_536,
            ..Default::default()
        };
        let (ledger, stats) = cost_trace(&report, &t, &e, RefreshMode::EnergyOnly).unwrap();
        assert_eq!(ledger.total_nj(), 0.0);
        assert_eq!(stats.total_time_ns, 0.0);
        assert!(stats.latency_per_shift_ns.is_none());
    }

    #[test]
    fn refresh_grows_with_runtime() {
        let (t, e) = defaults();
        let (l50, _) = cost_trace(&shift_report(50), &t, &e, RefreshMode::EnergyOnly).unwrap();
        let (l512, _) = cost_trace(&shift_report(512), &t, &e, RefreshMode::EnergyOnly).unwrap();
        assert!(l50.totals().refresh_nj > 0.0);
        assert!(l512.totals().refresh_nj > 10.0 * l50.totals().refresh_nj);
    }

    #[test]
    fn alternative_refresh_models() {
        let (t, mut e) = defaults();
        e.refresh_event_model = RefreshEventModel::WholeIntervals;
        let (ledger, _) = cost_trace(&shift_report(50), &t, &e, RefreshMode::EnergyOnly).unwrap();
        // 10.38 us elapsed -> exactly one whole 7.8 us interval.
        assert!((ledger.totals().refresh_nj - 77.117).abs() < 1e-9);

        e.refresh_event_model = RefreshEventModel::Prorated;
        let (ledger, stats) =
            cost_trace(&shift_report(50), &t, &e, RefreshMode::EnergyOnly).unwrap();
        let expect = stats.total_time_ns / 7800.0 * 77.117;
        assert!((ledger.totals().refresh_nj - expect).abs() < 1e-9);
    }

    #[test]
    fn blocking_mode_stalls_timeline() {
        let (t, e) = defaults();
        let (_, free) = cost_trace(&shift_report(512), &t, &e, RefreshMode::EnergyOnly).unwrap();
        let (_, blocked) = cost_trace(&shift_report(512), &t, &e, RefreshMode::Blocking).unwrap();
        assert!(blocked.total_time_ns > free.total_time_ns);
    }

    #[test]
    fn zero_burst_for_pim_only_traces() {
        let (t, e) = defaults();
        let mut report = shift_report(10);
        report.per_bank.get_mut(&0).unwrap().tra = 7;
        report.per_bank.get_mut(&0).unwrap().act = 2;
        report.per_bank.get_mut(&0).unwrap().pre = 2;
        let (ledger, _) = cost_trace(&report, &t, &e, RefreshMode::EnergyOnly).unwrap();
        assert_eq!(ledger.totals().burst_nj, 0.0);
    }

    #[test]
    fn baseline_8kb_read() {
        let (low, high) = baseline_movement_energy::<f64>(8 * 1024, false);
        assert_eq!((low, high), (1280.0, 1920.0));
        let (low, high) = baseline_movement_energy::<f64>(8 * 1024, true);
        assert_eq!((low, high), (2560.0, 3840.0));
        let (low, high) = baseline_movement_energy::<f64>(64, false);
        assert_eq!((low, high), (10.0, 15.0));
    }

    #[test]
    fn throughput_scaling() {
        assert_eq!(aggregate_throughput(4.82_f64, 8), 38.56);
        assert_eq!(aggregate_throughput(4.82_f64, 32), 154.24);
        assert_eq!(aggregate_throughput(4.82_f64, 1), 4.82);
    }

    #[test]
    fn works_in_f32_too() {
        let t = TimingParams::<f32>::ddr3_1333();
        let e = EnergyParams::<f32>::ddr3_1333();
        let (ledger, stats) =
            cost_trace(&shift_report(1), &t, &e, RefreshMode::EnergyOnly).unwrap();
        assert!((ledger.total_nj() - 31.321).abs() < 1e-3);
        assert!((stats.total_time_ns - 208.7).abs() < 1e-3);
    }

    #[test]
    fn bad_trc_rejected() {
        let mut t = TimingParams::<f64>::ddr3_1333();
        t.t_rc_ns = 50.0;
        let e = EnergyParams::ddr3_1333();
        assert!(cost_trace(&shift_report(1), &t, &e, RefreshMode::EnergyOnly).is_err());
    }
}
