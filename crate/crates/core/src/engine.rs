//! Bit-exact execution of DRAM and PIM commands over [`MemoryState`].
//!
//! Every command is decomposed into activations against the stripe
//! latches of the addressed subarray:
//!
//! * sensing a data row loads both stripes and restores the row;
//! * sensing a migration row drives only the bitlines its port reaches,
//!   the other latches keep their previous values;
//! * restoring into a data row writes the full row from both stripes;
//! * restoring into a migration row captures the port-side latch into
//!   each cell's shared capacitor (the bottom boundary cell's unwired
//!   port captures 0).
//!
//! A shift is exactly four AAPs. For a right shift the top migration row
//! parks the even-column bits and the bottom row the odd-column bits;
//! releasing them through the opposite ports lands every bit one column
//! over. The vacated boundary column is filled with 0 and the
//! overflowing source bit is discarded (logical shift, see
//! [`SHIFT_FILL_BIT`]).

use std::collections::BTreeMap;

use crate::command::{Command, CommandTrace};
use crate::error::{Error, Result};
use crate::geometry::{port_column, MigRow, Port, Row, RowAddress};
use crate::subarray::MemoryState;

/// Fill value driven into the vacated boundary column of a shift. The
/// migration wiring cannot rotate through the row boundary, so shifts are
/// logical by construction.
pub const SHIFT_FILL_BIT: bool = false;

/// Number of AAP commands composing one shift.
pub const AAPS_PER_SHIFT: u64 = 4;

/// Per-bank command event tallies, the unit handed to costing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct EventCounts {
    pub aap: u64,
    pub tra: u64,
    pub dra: u64,
    pub notx: u64,
    pub act: u64,
    pub pre: u64,
    pub rd: u64,
    pub wr: u64,
    pub shifts: u64,
}

impl EventCounts {
    pub fn add(&mut self, other: &EventCounts) {
        self.aap += other.aap;
        self.tra += other.tra;
        self.dra += other.dra;
        self.notx += other.notx;
        self.act += other.act;
        self.pre += other.pre;
        self.rd += other.rd;
        self.wr += other.wr;
        self.shifts += other.shifts;
    }
}

/// Events produced by a completed execution, grouped by flat bank.
/// Carries the geometry facts costing needs (row width, rank count).
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ExecutionReport {
    pub commands_executed: usize,
    pub per_bank: BTreeMap<usize, EventCounts>,
    pub columns_per_row: usize,
    pub ranks_per_channel: usize,
    pub bank_scope: usize,
}

impl ExecutionReport {
    pub fn totals(&self) -> EventCounts {
        let mut t = EventCounts::default();
        for c in self.per_bank.values() {
            t.add(c);
        }
        t
    }

    pub fn merge(&mut self, other: &ExecutionReport) {
        self.commands_executed += other.commands_executed;
        for (bank, counts) in &other.per_bank {
            self.per_bank.entry(*bank).or_default().add(counts);
        }
    }
}

/// Executes commands against a memory, accumulating the event report.
pub struct Executor<'m> {
    mem: &'m mut MemoryState,
    report: ExecutionReport,
}

impl<'m> Executor<'m> {
    pub fn new(mem: &'m mut MemoryState) -> Self {
        let geometry = *mem.geometry();
        Executor {
            mem,
            report: ExecutionReport {
                columns_per_row: geometry.columns_per_row,
                ranks_per_channel: geometry.ranks_per_channel,
                ..Default::default()
            },
        }
    }

    pub fn memory(&self) -> &MemoryState {
        self.mem
    }

    pub fn finish(self) -> ExecutionReport {
        self.report
    }

    fn counts(&mut self, bank: usize) -> &mut EventCounts {
        self.report.per_bank.entry(bank).or_default()
    }

    fn require_precharged(&self, addr: &RowAddress) -> Result<()> {
        let bank = addr.flat_bank(self.mem.geometry());
        if !self.mem.bank_precharged(bank) {
            return Err(Error::Protocol(format!("bank {bank} has an open row")));
        }
        Ok(())
    }

    fn require_data_row(addr: &RowAddress, what: &str) -> Result<usize> {
        match addr.row {
            Row::Data(r) => Ok(r),
            Row::Mig(_) => Err(Error::Address(format!("{what} must be a data row"))),
        }
    }

    /// First half of an AAP: activate and sense into the stripe latches.
    fn sense(&mut self, addr: &RowAddress, port: Option<Port>) -> Result<()> {
        let geometry = *self.mem.geometry();
        let bank = addr.flat_bank(&geometry);
        let sub = self.mem.subarray_mut(bank, addr.subarray);
        match addr.row {
            Row::Data(r) => {
                if port.is_some() {
                    return Err(Error::Protocol("port given for a data row".into()));
                }
                sub.sense_data_row(r);
            }
            Row::Mig(side) => {
                let port = port.ok_or_else(|| {
                    Error::Protocol("migration-row activation needs a port".into())
                })?;
                for cell in 0..geometry.half_columns() {
                    if let Some(col) = port_column(side, cell, port, geometry.columns_per_row) {
                        let bit = sub.mig_row(side).get(cell);
                        sub.set_latch(col, bit);
                    }
                }
            }
        }
        sub.open_row = Some(addr.row);
        Ok(())
    }

    /// Second half of an AAP: drive the latches into the destination row.
    fn restore(&mut self, addr: &RowAddress, port: Option<Port>) -> Result<()> {
        let geometry = *self.mem.geometry();
        let bank = addr.flat_bank(&geometry);
        let sub = self.mem.subarray_mut(bank, addr.subarray);
        match addr.row {
            Row::Data(r) => {
                if port.is_some() {
                    return Err(Error::Protocol("port given for a data row".into()));
                }
                sub.restore_data_row(r);
            }
            Row::Mig(side) => {
                let port = port.ok_or_else(|| {
                    Error::Protocol("migration-row restore needs a port".into())
                })?;
                for cell in 0..geometry.half_columns() {
                    let bit = match port_column(side, cell, port, geometry.columns_per_row) {
                        Some(col) => sub.latch(col),
                        // Unwired boundary port: nothing to share with.
                        None => false,
                    };
                    sub.mig_row_mut(side).set(cell, bit);
                }
            }
        }
        Ok(())
    }

    fn precharge_subarray(&mut self, bank: usize, subarray: usize) {
        self.mem.subarray_mut(bank, subarray).open_row = None;
    }

    /// ACT-ACT-PRE copy. Leaves the bank precharged and the source intact.
    pub fn aap(
        &mut self,
        src: &RowAddress,
        src_port: Option<Port>,
        dst: &RowAddress,
        dst_port: Option<Port>,
    ) -> Result<()> {
        let geometry = *self.mem.geometry();
        src.validate(&geometry)?;
        dst.validate(&geometry)?;
        if !src.same_subarray(dst) {
            return Err(Error::Address(
                "AAP crosses subarrays; use NOTX for neighbor copies".into(),
            ));
        }
        self.require_precharged(src)?;
        let bank = src.flat_bank(&geometry);
        self.sense(src, src_port)?;
        self.restore(dst, dst_port)?;
        self.precharge_subarray(bank, src.subarray);
        self.counts(bank).aap += 1;
        Ok(())
    }

    /// Triple-row activation: all three rows end holding bitwise MAJ.
    pub fn tra(&mut self, a: &RowAddress, b: &RowAddress, c: &RowAddress) -> Result<()> {
        let geometry = *self.mem.geometry();
        for addr in [a, b, c] {
            addr.validate(&geometry)?;
        }
        if !a.same_subarray(b) || !a.same_subarray(c) {
            return Err(Error::Address("TRA rows must share a subarray".into()));
        }
        let (ra, rb, rc) = (
            Self::require_data_row(a, "TRA operand")?,
            Self::require_data_row(b, "TRA operand")?,
            Self::require_data_row(c, "TRA operand")?,
        );
        if ra == rb || ra == rc || rb == rc {
            return Err(Error::Protocol("TRA requires three distinct rows".into()));
        }
        self.require_precharged(a)?;
        let bank = a.flat_bank(&geometry);
        let sub = self.mem.subarray_mut(bank, a.subarray);
        for col in 0..geometry.columns_per_row {
            let (x, y, z) = (
                sub.data_row(ra).get(col),
                sub.data_row(rb).get(col),
                sub.data_row(rc).get(col),
            );
            let maj = (x & y) | (y & z) | (x & z);
            sub.data_row_mut(ra).set(col, maj);
            sub.data_row_mut(rb).set(col, maj);
            sub.data_row_mut(rc).set(col, maj);
            sub.set_latch(col, maj);
        }
        self.counts(bank).tra += 1;
        Ok(())
    }

    /// Dual-row activation. With no third reference the shared bitline
    /// only resolves where the two cells agree; any disagreeing column is
    /// an indeterminate charge share and is rejected rather than given an
    /// invented value.
    pub fn dra(&mut self, a: &RowAddress, b: &RowAddress) -> Result<()> {
        let geometry = *self.mem.geometry();
        a.validate(&geometry)?;
        b.validate(&geometry)?;
        if !a.same_subarray(b) {
            return Err(Error::Address("DRA rows must share a subarray".into()));
        }
        let (ra, rb) = (
            Self::require_data_row(a, "DRA operand")?,
            Self::require_data_row(b, "DRA operand")?,
        );
        if ra == rb {
            return Err(Error::Protocol("DRA requires two distinct rows".into()));
        }
        self.require_precharged(a)?;
        let bank = a.flat_bank(&geometry);
        let sub = self.mem.subarray_mut(bank, a.subarray);
        for col in 0..geometry.columns_per_row {
            if sub.data_row(ra).get(col) != sub.data_row(rb).get(col) {
                return Err(Error::Protocol(format!(
                    "DRA charge share indeterminate at column {col}"
                )));
            }
        }
        for col in 0..geometry.columns_per_row {
            sub.set_latch(col, sub.data_row(ra).get(col));
        }
        self.counts(bank).dra += 1;
        Ok(())
    }

    /// Cross-subarray inverting copy through the shared stripe.
    pub fn not_xsub(&mut self, src: &RowAddress, dst: &RowAddress) -> Result<()> {
        let geometry = *self.mem.geometry();
        src.validate(&geometry)?;
        dst.validate(&geometry)?;
        if !src.same_bank(dst) || src.subarray.abs_diff(dst.subarray) != 1 {
            return Err(Error::Address(
                "NOTX needs adjacent subarrays sharing a stripe".into(),
            ));
        }
        let rs = Self::require_data_row(src, "NOTX source")?;
        let rd = Self::require_data_row(dst, "NOTX destination")?;
        self.require_precharged(src)?;
        let bank = src.flat_bank(&geometry);
        let inverted: crate::bits::BitRow = {
            let sub = self.mem.subarray_mut(bank, src.subarray);
            sub.sense_data_row(rs);
            sub.data_row(rs).iter().map(|b| !b).collect()
        };
        let dsub = self.mem.subarray_mut(bank, dst.subarray);
        *dsub.data_row_mut(rd) = inverted;
        dsub.sense_data_row(rd);
        // Priced as one AAP event by the costing layer.
        self.counts(bank).notx += 1;
        Ok(())
    }

    /// One-column displacement toward higher column indices:
    /// dst[i+1] = src[i], dst[0] = fill.
    pub fn shift_right(&mut self, src: &RowAddress, dst: &RowAddress) -> Result<()> {
        self.shift(src, dst, ShiftDir::Right)
    }

    /// One-column displacement toward lower column indices:
    /// dst[i] = src[i+1], dst[C-1] = fill.
    pub fn shift_left(&mut self, src: &RowAddress, dst: &RowAddress) -> Result<()> {
        self.shift(src, dst, ShiftDir::Left)
    }

    fn shift(&mut self, src: &RowAddress, dst: &RowAddress, dir: ShiftDir) -> Result<()> {
        let geometry = *self.mem.geometry();
        src.validate(&geometry)?;
        dst.validate(&geometry)?;
        if !src.same_subarray(dst) {
            return Err(Error::Address("shift src and dst must share a subarray".into()));
        }
        let rd = Self::require_data_row(dst, "shift destination")?;
        Self::require_data_row(src, "shift source")?;
        let bank = src.flat_bank(&geometry);
        let top = RowAddress { row: Row::Mig(MigRow::Top), ..*src };
        let bottom = RowAddress { row: Row::Mig(MigRow::Bottom), ..*src };
        // Park both column parities, then release them one column over.
        // In-place shifts (src == dst) are fine: the source is fully held
        // by the migration rows after the second AAP.
        match dir {
            ShiftDir::Right => {
                self.aap(src, None, &top, Some(Port::A))?;
                self.aap(src, None, &bottom, Some(Port::A))?;
                self.aap(&top, Some(Port::B), dst, None)?;
                self.aap(&bottom, Some(Port::B), dst, None)?;
            }
            ShiftDir::Left => {
                self.aap(src, None, &bottom, Some(Port::B))?;
                self.aap(src, None, &top, Some(Port::B))?;
                self.aap(&bottom, Some(Port::A), dst, None)?;
                self.aap(&top, Some(Port::A), dst, None)?;
            }
        }
        let boundary = match dir {
            ShiftDir::Right => 0,
            ShiftDir::Left => geometry.columns_per_row - 1,
        };
        self.mem
            .subarray_mut(bank, dst.subarray)
            .data_row_mut(rd)
            .set(boundary, SHIFT_FILL_BIT);
        self.counts(bank).shifts += 1;
        Ok(())
    }

    /// Bare activate; the bank stays open until a precharge.
    pub fn act(&mut self, addr: &RowAddress, port: Option<Port>) -> Result<()> {
        addr.validate(self.mem.geometry())?;
        self.require_precharged(addr)?;
        let bank = addr.flat_bank(self.mem.geometry());
        self.sense(addr, port)?;
        self.counts(bank).act += 1;
        Ok(())
    }

    pub fn pre(&mut self, flat_bank: usize) -> Result<()> {
        if flat_bank >= self.mem.geometry().total_banks() {
            return Err(Error::Address(format!("bank {flat_bank} out of range")));
        }
        for sub in 0..self.mem.geometry().subarrays_per_bank {
            self.precharge_subarray(flat_bank, sub);
        }
        self.counts(flat_bank).pre += 1;
        Ok(())
    }

    /// Column burst; only the energy event is modeled.
    pub fn read(&mut self, addr: &RowAddress) -> Result<()> {
        self.burst(addr, true)
    }

    pub fn write(&mut self, addr: &RowAddress) -> Result<()> {
        self.burst(addr, false)
    }

    fn burst(&mut self, addr: &RowAddress, is_read: bool) -> Result<()> {
        let geometry = *self.mem.geometry();
        addr.validate(&geometry)?;
        let bank = addr.flat_bank(&geometry);
        let open = self
            .mem
            .subarray(bank, addr.subarray)
            .and_then(|s| s.open_row);
        if open != Some(addr.row) {
            return Err(Error::Protocol("column access to a closed row".into()));
        }
        let counts = self.counts(bank);
        if is_read {
            counts.rd += 1;
        } else {
            counts.wr += 1;
        }
        Ok(())
    }

    pub fn execute(&mut self, cmd: &Command) -> Result<()> {
        match cmd {
            Command::Act { addr, port } => self.act(addr, *port),
            Command::Pre { flat_bank } => self.pre(*flat_bank),
            Command::Read { addr } => self.read(addr),
            Command::Write { addr } => self.write(addr),
            Command::Aap {
                src,
                src_port,
                dst,
                dst_port,
            } => self.aap(src, *src_port, dst, *dst_port),
            Command::Dra { a, b } => self.dra(a, b),
            Command::Tra { a, b, c } => self.tra(a, b, c),
            Command::NotXsub { src, dst } => self.not_xsub(src, dst),
            Command::ShiftLeft { src, dst } => self.shift_left(src, dst),
            Command::ShiftRight { src, dst } => self.shift_right(src, dst),
        }
    }
}

#[derive(Clone, Copy)]
enum ShiftDir {
    Left,
    Right,
}

/// Applies the trace in order. The first failing command aborts with its
/// index; the memory keeps the state reached up to that point.
pub fn run_trace(mem: &mut MemoryState, trace: &CommandTrace) -> Result<ExecutionReport> {
    let mut exec = Executor::new(mem);
    exec.report.bank_scope = trace.bank_scope;
    for (index, cmd) in trace.commands.iter().enumerate() {
        exec.execute(cmd).map_err(|e| Error::at_command(index, e))?;
        exec.report.commands_executed += 1;
    }
    Ok(exec.finish())
}
