//! Demonstration kernels compiled onto the PIM command set.
//!
//! Operands live horizontally, one bit per column, LSB at column 0 of
//! the lane; a shift toward higher columns is therefore an arithmetic
//! doubling. Command streams are static: data-dependent choices (the
//! GF reduction, partial-product selection) become branchless AND/OR
//! masking with a replicated condition bit.
//!
//! Values are kept dual-rail, the row and its complement, because the
//! in-array gate set (TRA majority with 0/1 control rows) is monotone
//! and the only inverter, the cross-subarray NOT, always lands the
//! complement in the neighboring subarray: an odd number of crossings
//! can never bring `NOT x` back to x's own subarray. Complement rails
//! are loaded with the operands and maintained through every gate by
//! De Morgan duals; XOR is then OR(AND(a, !b), AND(!a, b)).

use std::collections::BTreeMap;

use crate::bits::BitRow;
use crate::command::{Command, CommandTrace};
use crate::engine::{run_trace, EventCounts};
use crate::error::{Error, Result};
use crate::geometry::{DramGeometry, Row, RowAddress};
use crate::subarray::MemoryState;
use crate::timing::{cost_trace, EnergyParams, RefreshMode, TimingParams};

/// AES field reduction polynomial x^8 + x^4 + x^3 + x + 1.
pub const AES_POLY: u64 = 0x11B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    /// Bit-serial ripple-carry addition; result is width+1 bits.
    AddRipple,
    /// Shift-and-add multiplication; result is 2*width bits.
    MulShiftAdd,
    /// GF(2^8) multiplication with AES reduction; width must be 8.
    Gf256Mul,
}

use serde::Serialize;

/// Logical rows of a kernel's working set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Slot {
    // Dual-rail operands and accumulator.
    APos,
    ANeg,
    BPos,
    BNeg,
    AccPos,
    AccNeg,
    CarryPos,
    CarryNeg,
    MaskPos,
    MaskNeg,
    // Scratch.
    T0,
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    TraB,
    TraC,
    // Control rows and constants.
    Zero,
    Ones,
    OneHot0,
    OneHotW,
    Poly,
    PolyNeg,
}

impl Slot {
    fn all() -> &'static [Slot] {
        use Slot::*;
        &[
            APos, ANeg, BPos, BNeg, AccPos, AccNeg, CarryPos, CarryNeg, MaskPos, MaskNeg, T0, T1,
            T2, T3, T4, T5, T6, T7, TraB, TraC, Zero, Ones, OneHot0, OneHotW, Poly, PolyNeg,
        ]
    }
}

/// A compiled kernel: its row map, the constant rows the host loads, and
/// the static command trace.
#[derive(Debug, Clone)]
pub struct KernelProgram {
    pub kind: KernelKind,
    pub width: usize,
    pub geometry: DramGeometry,
    pub allocation: BTreeMap<Slot, RowAddress>,
    pub trace: CommandTrace,
    /// Slot holding the result and how many bits to read from it.
    pub output: (Slot, usize),
}

/// Event counts and the predicted cost of one execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCost {
    pub aap_count: u64,
    pub tra_count: u64,
    pub notx_count: u64,
    pub predicted_energy_nj: f64,
    pub predicted_latency_ns: f64,
}

impl KernelCost {
    /// Prices an event tally with the default DDR3-1333 calibration; the
    /// predicted energy is the activation energy of the events.
    pub fn from_counts(counts: &EventCounts, columns_per_row: usize) -> Self {
        let mut report = crate::engine::ExecutionReport {
            columns_per_row,
            ..Default::default()
        };
        report.per_bank.insert(0, *counts);
        let (ledger, stats) = cost_trace(
            &report,
            &TimingParams::<f64>::ddr3_1333(),
            &EnergyParams::<f64>::ddr3_1333(),
            RefreshMode::EnergyOnly,
        )
        .expect("default calibration is valid");
        KernelCost {
            aap_count: counts.aap,
            tra_count: counts.tra,
            notx_count: counts.notx,
            predicted_energy_nj: ledger.totals().active_nj,
            predicted_latency_ns: stats.total_time_ns,
        }
    }
}

/// Tallies the events a trace will produce when executed.
pub fn trace_event_counts(trace: &CommandTrace) -> EventCounts {
    let mut counts = EventCounts::default();
    for cmd in &trace.commands {
        match cmd {
            Command::Aap { .. } => counts.aap += 1,
            Command::Tra { .. } => counts.tra += 1,
            Command::Dra { .. } => counts.dra += 1,
            Command::NotXsub { .. } => counts.notx += 1,
            Command::ShiftLeft { .. } | Command::ShiftRight { .. } => {
                counts.aap += crate::engine::AAPS_PER_SHIFT;
                counts.shifts += 1;
            }
            Command::Act { .. } => counts.act += 1,
            Command::Pre { .. } => counts.pre += 1,
            Command::Read { .. } => counts.rd += 1,
            Command::Write { .. } => counts.wr += 1,
        }
    }
    counts
}

/// Smallest geometry a kernel of this kind/width fits in.
pub fn kernel_geometry(kind: KernelKind, width: usize) -> DramGeometry {
    let lane = match kind {
        KernelKind::AddRipple | KernelKind::Gf256Mul => width + 2,
        KernelKind::MulShiftAdd => 2 * width + 2,
    };
    let columns = lane + (lane % 2);
    DramGeometry::tiny(Slot::all().len() + 2, columns.max(4))
}

/// Assigns each slot a consecutive data row of bank 0, subarray 0.
pub fn default_allocation(geometry: &DramGeometry) -> Result<BTreeMap<Slot, RowAddress>> {
    let slots = Slot::all();
    if geometry.rows_per_subarray < slots.len() {
        return Err(Error::Kernel(format!(
            "kernel needs {} rows, subarray has {}",
            slots.len(),
            geometry.rows_per_subarray
        )));
    }
    Ok(slots
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, RowAddress::data(0, 0, 0, 0, i)))
        .collect())
}

struct Emitter<'a> {
    trace: CommandTrace,
    alloc: &'a BTreeMap<Slot, RowAddress>,
}

impl<'a> Emitter<'a> {
    fn row(&self, slot: Slot) -> RowAddress {
        self.alloc[&slot]
    }

    fn copy(&mut self, src: Slot, dst: Slot) {
        self.trace.push(Command::aap(self.row(src), self.row(dst)));
    }

    fn shr(&mut self, src: Slot, dst: Slot) {
        self.trace.push(Command::ShiftRight {
            src: self.row(src),
            dst: self.row(dst),
        });
    }

    fn shl(&mut self, src: Slot, dst: Slot) {
        self.trace.push(Command::ShiftLeft {
            src: self.row(src),
            dst: self.row(dst),
        });
    }

    /// out = MAJ(x, y, z). The TRA is destructive, so y and z are staged
    /// into the scratch rows; the result lands in `out`.
    fn maj_into(&mut self, out: Slot, x: Slot, y: Slot, z: Slot) {
        assert!(out != y && out != z && out != Slot::TraB && out != Slot::TraC);
        if out != x {
            self.copy(x, out);
        }
        self.copy(y, Slot::TraB);
        self.copy(z, Slot::TraC);
        self.trace.push(Command::Tra {
            a: self.row(out),
            b: self.row(Slot::TraB),
            c: self.row(Slot::TraC),
        });
    }

    /// out = x AND y (control row all-zero).
    fn and_into(&mut self, out: Slot, x: Slot, y: Slot) {
        self.maj_into(out, x, y, Slot::Zero);
    }

    /// out = x OR y (control row all-one).
    fn or_into(&mut self, out: Slot, x: Slot, y: Slot) {
        self.maj_into(out, x, y, Slot::Ones);
    }

    /// Dual-rail XOR: (out_p, out_n) = (x ^ y, !(x ^ y)). Reads complete
    /// before writes, so out may alias x.
    fn xor_into(&mut self, out_p: Slot, out_n: Slot, xp: Slot, xn: Slot, yp: Slot, yn: Slot) {
        use Slot::{T2, T3, T4, T5};
        for t in [T2, T3, T4, T5] {
            assert!(out_p != t && out_n != t && xp != t && xn != t && yp != t && yn != t);
        }
        self.and_into(T2, xp, yn);
        self.and_into(T3, xn, yp);
        self.and_into(T4, xp, yp);
        self.and_into(T5, xn, yn);
        self.or_into(out_p, T2, T3);
        self.or_into(out_n, T4, T5);
    }

    /// Dual-rail shift toward higher columns. The complement rail's
    /// vacated column 0 is re-asserted to 1: the positive rail shifts in
    /// the 0 fill there.
    fn shift_up_dual(&mut self, pos: Slot, neg: Slot) {
        self.shr(pos, pos);
        self.shr(neg, neg);
        self.or_into(neg, neg, Slot::OneHot0);
    }

    /// Replicates the bit selected by `onehot` from the dual-rail source
    /// into a lane mask covering `rounds` further columns in the given
    /// direction. MaskPos carries the bit, MaskNeg its complement; both
    /// are zero outside the swept lane.
    fn replicate(&mut self, src_p: Slot, src_n: Slot, onehot: Slot, rounds: usize, up: bool) {
        use Slot::{MaskNeg, MaskPos, T7};
        self.and_into(MaskPos, src_p, onehot);
        self.and_into(MaskNeg, src_n, onehot);
        for mask in [MaskPos, MaskNeg] {
            for _ in 0..rounds {
                if up {
                    self.shr(mask, T7);
                } else {
                    self.shl(mask, T7);
                }
                self.or_into(mask, mask, T7);
            }
        }
    }

    /// Ripple-carry sum of dual-rail (xp, xn) and (yp, yn) into the
    /// accumulator rails. Carries settle by iterating a full-row MAJ
    /// followed by a one-column displacement; one TRA per bit position
    /// per rail. MAJ is self-dual, so the complement carry uses the
    /// complement operands directly.
    fn ripple_add_into_acc(&mut self, xp: Slot, xn: Slot, yp: Slot, yn: Slot, positions: usize) {
        use Slot::{AccNeg, AccPos, CarryNeg, CarryPos, T0, T1, T2, T3};
        assert!((xp, xn) != (T2, T3) && (yp, yn) != (T2, T3));
        self.copy(Slot::Zero, CarryPos);
        self.copy(Slot::Ones, CarryNeg);
        for _ in 0..positions {
            self.maj_into(T2, xp, yp, CarryPos);
            self.maj_into(T3, xn, yn, CarryNeg);
            self.shr(T2, CarryPos);
            self.shr(T3, CarryNeg);
            self.or_into(CarryNeg, CarryNeg, Slot::OneHot0);
        }
        // sum = x ^ y ^ carry
        self.xor_into(T0, T1, xp, xn, yp, yn);
        self.xor_into(AccPos, AccNeg, T0, T1, CarryPos, CarryNeg);
    }
}

fn check_width(kind: KernelKind, width: usize) -> Result<()> {
    let ok = match kind {
        KernelKind::Gf256Mul => width == 8,
        _ => matches!(width, 4 | 8 | 16),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Kernel(format!(
            "unsupported width {width} for {kind:?}"
        )))
    }
}

fn lane_columns(kind: KernelKind, width: usize) -> usize {
    match kind {
        KernelKind::AddRipple | KernelKind::Gf256Mul => width + 1,
        KernelKind::MulShiftAdd => 2 * width,
    }
}

/// Compiles a kernel into a static command trace over the allocation.
pub fn compile_kernel(
    kind: KernelKind,
    width: usize,
    allocation: &BTreeMap<Slot, RowAddress>,
    geometry: &DramGeometry,
) -> Result<(KernelProgram, KernelCost)> {
    check_width(kind, width)?;
    geometry.validate()?;
    if geometry.columns_per_row < lane_columns(kind, width) + 1 {
        return Err(Error::Kernel(format!(
            "kernel lane needs {} columns, rows have {}",
            lane_columns(kind, width) + 1,
            geometry.columns_per_row
        )));
    }
    let mut seen = BTreeMap::new();
    for slot in Slot::all() {
        let addr = allocation
            .get(slot)
            .ok_or_else(|| Error::Kernel(format!("allocation missing slot {slot:?}")))?;
        addr.validate(geometry)?;
        let row = match addr.row {
            Row::Data(r) => r,
            Row::Mig(_) => {
                return Err(Error::Kernel("kernel slots must be data rows".into()))
            }
        };
        if let Some(prev) = seen.insert(row, *slot) {
            return Err(Error::Kernel(format!(
                "allocation collision: {prev:?} and {slot:?} share row {row}"
            )));
        }
        if !addr.same_subarray(&allocation[&Slot::Zero]) {
            return Err(Error::Kernel("kernel slots must share one subarray".into()));
        }
    }

    let mut e = Emitter {
        trace: CommandTrace::new(format!("{kind:?}-w{width}"), 0),
        alloc: allocation,
    };
    use Slot::*;

    let output = match kind {
        KernelKind::AddRipple => {
            e.ripple_add_into_acc(APos, ANeg, BPos, BNeg, width + 1);
            (AccPos, width + 1)
        }
        KernelKind::MulShiftAdd => {
            e.copy(Zero, AccPos);
            e.copy(Ones, AccNeg);
            for _ in 0..width {
                // Partial product: a AND replicated b0.
                e.replicate(BPos, BNeg, OneHot0, 2 * width - 1, true);
                e.and_into(T0, APos, MaskPos);
                e.or_into(T1, ANeg, MaskNeg);
                e.ripple_add_into_acc(AccPos, AccNeg, T0, T1, 2 * width);
                // a doubles, b advances to its next bit.
                e.shift_up_dual(APos, ANeg);
                e.shl(BPos, BPos);
                e.shl(BNeg, BNeg);
            }
            (AccPos, 2 * width)
        }
        KernelKind::Gf256Mul => {
            e.copy(Zero, AccPos);
            e.copy(Ones, AccNeg);
            for _ in 0..width {
                // acc ^= a AND replicated b0.
                e.replicate(BPos, BNeg, OneHot0, width, true);
                e.and_into(T0, APos, MaskPos);
                e.or_into(T1, ANeg, MaskNeg);
                e.xor_into(AccPos, AccNeg, AccPos, AccNeg, T0, T1);
                // a *= x, then reduce when the degree-8 bit appeared.
                e.shift_up_dual(APos, ANeg);
                e.replicate(APos, ANeg, OneHotW, width, false);
                e.and_into(T0, MaskPos, Poly);
                e.or_into(T1, MaskNeg, PolyNeg);
                e.xor_into(APos, ANeg, APos, ANeg, T0, T1);
                // Next multiplier bit to column 0; only column 0 is read,
                // so the complement rail needs no boundary repair here.
                e.shl(BPos, BPos);
                e.shl(BNeg, BNeg);
            }
            (AccPos, width)
        }
    };

    let counts = trace_event_counts(&e.trace);
    let cost = KernelCost::from_counts(&counts, geometry.columns_per_row);
    Ok((
        KernelProgram {
            kind,
            width,
            geometry: *geometry,
            allocation: allocation.clone(),
            trace: e.trace,
            output,
        },
        cost,
    ))
}

fn complement(row: &BitRow) -> BitRow {
    row.iter().map(|b| !b).collect()
}

/// Loads the constant rows a program expects.
fn write_constants(program: &KernelProgram, mem: &mut MemoryState) -> Result<()> {
    let columns = program.geometry.columns_per_row;
    let width = program.width;
    let onehot_w = BitRow::from_u64_lsb(1 << width, width + 1, columns);
    let poly = BitRow::from_u64_lsb(AES_POLY, width + 1, columns);
    let rows: [(Slot, BitRow); 6] = [
        (Slot::Zero, BitRow::zeros(columns)),
        (Slot::Ones, BitRow::ones(columns)),
        (Slot::OneHot0, BitRow::from_u64_lsb(1, 1, columns)),
        (Slot::OneHotW, onehot_w),
        (Slot::PolyNeg, complement(&poly)),
        (Slot::Poly, poly),
    ];
    for (slot, bits) in rows {
        mem.host_write_row(&program.allocation[&slot], &bits)?;
    }
    Ok(())
}

/// Executes a compiled kernel: loads operand rails and constants, runs
/// the trace, and reads the result back. Returns the output value and
/// the cost of the run as executed.
pub fn execute_kernel(
    program: &KernelProgram,
    a: u64,
    b: u64,
    mem: &mut MemoryState,
) -> Result<(u64, KernelCost)> {
    let width = program.width;
    if width < 64 && (a >> width != 0 || b >> width != 0) {
        return Err(Error::Kernel(format!(
            "operands {a:#x}, {b:#x} exceed width {width}"
        )));
    }
    if *mem.geometry() != program.geometry {
        return Err(Error::Kernel("memory geometry differs from program".into()));
    }
    write_constants(program, mem)?;
    let columns = program.geometry.columns_per_row;
    let a_row = BitRow::from_u64_lsb(a, width, columns);
    let b_row = BitRow::from_u64_lsb(b, width, columns);
    mem.host_write_row(&program.allocation[&Slot::ANeg], &complement(&a_row))?;
    mem.host_write_row(&program.allocation[&Slot::APos], &a_row)?;
    mem.host_write_row(&program.allocation[&Slot::BNeg], &complement(&b_row))?;
    mem.host_write_row(&program.allocation[&Slot::BPos], &b_row)?;

    let report = run_trace(mem, &program.trace)?;
    let (out_slot, out_width) = program.output;
    let out = mem.host_read_row(&program.allocation[&out_slot])?;
    let value = out.to_u64_lsb(out_width);
    let cost = KernelCost::from_counts(&report.totals(), columns);
    Ok((value, cost))
}

/// Convenience wrapper: default geometry/allocation, compile, execute.
pub fn run_kernel(kind: KernelKind, width: usize, a: u64, b: u64) -> Result<(u64, KernelCost)> {
    let geometry = kernel_geometry(kind, width);
    let allocation = default_allocation(&geometry)?;
    let (program, _) = compile_kernel(kind, width, &allocation, &geometry)?;
    let mut mem = crate::subarray::build_memory(geometry)?;
    execute_kernel(&program, a, b, &mut mem)
}
