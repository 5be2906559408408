//! Property-based invariants of the array model, the command engine,
//! and the costing layer.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use proptest::prelude::*;

use dramshift::bits::BitRow;
use dramshift::command::{format_trace, parse_trace, Command, CommandTrace};
use dramshift::engine::{run_trace, EventCounts, ExecutionReport, Executor};
use dramshift::geometry::{DramGeometry, RowAddress};
use dramshift::subarray::{build_memory, MemoryState};
use dramshift::timing::{cost_trace, EnergyParams, RefreshMode, TimingParams};

fn addr(sub: usize, row: usize) -> RowAddress {
    RowAddress::data(0, 0, 0, sub, row)
}

fn row_from_bits(bits: &[bool]) -> BitRow {
    bits.iter().copied().collect()
}

/// Displacement oracle, independent of the engine: one column toward
/// higher indices, zero fill.
fn oracle_right(src: &BitRow) -> BitRow {
    (0..src.len())
        .map(|i| if i == 0 { false } else { src.get(i - 1) })
        .collect()
}

fn oracle_left(src: &BitRow) -> BitRow {
    (0..src.len())
        .map(|i| if i + 1 == src.len() { false } else { src.get(i + 1) })
        .collect()
}

fn maj_oracle(a: &BitRow, b: &BitRow, c: &BitRow) -> BitRow {
    (0..a.len())
        .map(|i| {
            let (x, y, z) = (a.get(i), b.get(i), c.get(i));
            (x & y) | (y & z) | (x & z)
        })
        .collect()
}

fn memory_fingerprint(mem: &MemoryState) -> u64 {
    let mut hasher = DefaultHasher::new();
    for (key, sub) in mem.touched_subarrays() {
        key.hash(&mut hasher);
        for r in 0..mem.geometry().rows_per_subarray {
            sub.data_row(r).hash(&mut hasher);
        }
        sub.top_mig.hash(&mut hasher);
        sub.bottom_mig.hash(&mut hasher);
    }
    hasher.finish()
}

fn subarray_fingerprint(mem: &MemoryState, bank: usize, sub: usize) -> u64 {
    let mut hasher = DefaultHasher::new();
    match mem.subarray(bank, sub) {
        Some(s) => {
            for r in 0..mem.geometry().rows_per_subarray {
                s.data_row(r).hash(&mut hasher);
            }
        }
        None => {
            // Untouched subarrays read as zeros.
            BitRow::zeros(mem.geometry().columns_per_row).hash(&mut hasher);
        }
    }
    hasher.finish()
}

proptest! {
    #[test]
    fn host_row_roundtrip(bits in prop::collection::vec(any::<bool>(), 16), row in 0usize..8) {
        let mut mem = build_memory(DramGeometry::tiny(8, 16)).unwrap();
        let pattern = row_from_bits(&bits);
        mem.host_write_row(&addr(0, row), &pattern).unwrap();
        prop_assert_eq!(mem.host_read_row(&addr(0, row)).unwrap(), pattern);
    }

    #[test]
    fn shift_matches_oracle_random_widths(value in any::<u16>(), width in prop::sample::select(vec![4usize, 8, 16])) {
        let value = value as u64 & ((1 << width) - 1);
        let mut mem = build_memory(DramGeometry::tiny(4, width)).unwrap();
        let src = BitRow::from_u64_lsb(value, width, width);
        mem.host_write_row(&addr(0, 0), &src).unwrap();
        let mut exec = Executor::new(&mut mem);
        exec.shift_right(&addr(0, 0), &addr(0, 1)).unwrap();
        exec.shift_left(&addr(0, 0), &addr(0, 2)).unwrap();
        drop(exec);
        prop_assert_eq!(mem.host_read_row(&addr(0, 1)).unwrap(), oracle_right(&src));
        prop_assert_eq!(mem.host_read_row(&addr(0, 2)).unwrap(), oracle_left(&src));
        // Source row untouched by either shift.
        prop_assert_eq!(mem.host_read_row(&addr(0, 0)).unwrap(), src);
    }

    #[test]
    fn tra_equals_majority_oracle(a in any::<u8>(), b in any::<u8>(), c in any::<u8>()) {
        let mut mem = build_memory(DramGeometry::tiny(8, 8)).unwrap();
        let rows = [a as u64, b as u64, c as u64].map(|v| BitRow::from_u64_lsb(v, 8, 8));
        for (i, r) in rows.iter().enumerate() {
            mem.host_write_row(&addr(0, i), r).unwrap();
        }
        let mut exec = Executor::new(&mut mem);
        exec.tra(&addr(0, 0), &addr(0, 1), &addr(0, 2)).unwrap();
        drop(exec);
        let expect = maj_oracle(&rows[0], &rows[1], &rows[2]);
        // Destructive: all three operands hold the majority.
        for i in 0..3 {
            prop_assert_eq!(mem.host_read_row(&addr(0, i)).unwrap(), expect.clone());
        }
    }

    #[test]
    fn notx_involution(value in any::<u64>()) {
        let mut mem = build_memory(DramGeometry::tiny(4, 64)).unwrap();
        let src = BitRow::from_u64_lsb(value, 64, 64);
        mem.host_write_row(&addr(0, 0), &src).unwrap();
        let mut exec = Executor::new(&mut mem);
        exec.not_xsub(&addr(0, 0), &addr(1, 0)).unwrap();
        exec.not_xsub(&addr(1, 0), &addr(0, 1)).unwrap();
        drop(exec);
        prop_assert_eq!(mem.host_read_row(&addr(0, 1)).unwrap(), src);
    }

    #[test]
    fn shift_emits_exactly_four_aaps(n in 1usize..30) {
        let mut mem = build_memory(DramGeometry::tiny(4, 16)).unwrap();
        let mut trace = CommandTrace::new("p", 0);
        for i in 0..n {
            let dir_right = i % 2 == 0;
            let cmd = if dir_right {
                Command::ShiftRight { src: addr(0, 0), dst: addr(0, 1) }
            } else {
                Command::ShiftLeft { src: addr(0, 1), dst: addr(0, 0) }
            };
            trace.push(cmd);
        }
        let report = run_trace(&mut mem, &trace).unwrap();
        prop_assert_eq!(report.totals().aap, 4 * n as u64);
        prop_assert_eq!(report.totals().shifts, n as u64);
    }

    #[test]
    fn trace_text_roundtrip(ops in prop::collection::vec((0usize..4, 0usize..8, 0usize..8, 0usize..8), 1..20)) {
        let geometry = DramGeometry::tiny(8, 8);
        let mut trace = CommandTrace::new("t", 0);
        for (kind, a, b, c) in ops {
            let cmd = match kind {
                0 => Command::aap(addr(0, a), addr(0, b)),
                1 => Command::ShiftRight { src: addr(0, a), dst: addr(0, b) },
                2 => Command::ShiftLeft { src: addr(0, a), dst: addr(0, b) },
                _ => {
                    // TRA needs distinct rows; skew duplicates.
                    let b2 = if b == a { (a + 1) % 8 } else { b };
                    let mut c2 = c;
                    while c2 == a || c2 == b2 { c2 = (c2 + 1) % 8; }
                    Command::Tra { a: addr(0, a), b: addr(0, b2), c: addr(0, c2) }
                }
            };
            trace.push(cmd);
        }
        let text = format_trace(&trace, &geometry).unwrap();
        let parsed = parse_trace(&text, &geometry).unwrap();
        prop_assert_eq!(parsed.commands, trace.commands);
    }

    #[test]
    fn energy_additivity_under_linear_calibration(
        aap1 in 0u64..200, tra1 in 0u64..50, shifts1 in 0u64..20,
        aap2 in 0u64..200, tra2 in 0u64..50, shifts2 in 0u64..20,
    ) {
        let timing = TimingParams::<f64> {
            t_shift_setup_ns: 0.0,
            ..TimingParams::ddr3_1333()
        };
        let energy = EnergyParams::<f64> {
            e_shift_overhead_nj: 0.0,
            e_ref_event_nj: 0.0,
            ..EnergyParams::ddr3_1333()
        };
        let make = |aap, tra, shifts| {
            let mut r = ExecutionReport {
                columns_per_row: 64,
                ranks_per_channel: 2,
                ..Default::default()
            };
            r.per_bank.insert(0, EventCounts { aap, tra, shifts, ..Default::default() });
            r
        };
        let ra = make(aap1 + 4 * shifts1, tra1, shifts1);
        let rb = make(aap2 + 4 * shifts2, tra2, shifts2);
        let mut rab = ra.clone();
        rab.merge(&rb);
        let (la, _) = cost_trace(&ra, &timing, &energy, RefreshMode::EnergyOnly).unwrap();
        let (lb, _) = cost_trace(&rb, &timing, &energy, RefreshMode::EnergyOnly).unwrap();
        let (lab, _) = cost_trace(&rab, &timing, &energy, RefreshMode::EnergyOnly).unwrap();
        let sum = la.merged(&lb);
        let (t1, t2) = (lab.total_nj(), sum.total_nj());
        prop_assert!((t1 - t2).abs() <= 1e-9 * t1.max(1.0), "{t1} vs {t2}");
    }
}

/// Exhaustive oracle equivalence at 4 columns, both directions.
#[test]
fn shift_exhaustive_width4() {
    for value in 0..16u64 {
        let mut mem = build_memory(DramGeometry::tiny(4, 4)).unwrap();
        let src = BitRow::from_u64_lsb(value, 4, 4);
        mem.host_write_row(&addr(0, 0), &src).unwrap();
        let mut exec = Executor::new(&mut mem);
        exec.shift_right(&addr(0, 0), &addr(0, 1)).unwrap();
        exec.shift_left(&addr(0, 0), &addr(0, 2)).unwrap();
        drop(exec);
        assert_eq!(mem.host_read_row(&addr(0, 1)).unwrap(), oracle_right(&src));
        assert_eq!(mem.host_read_row(&addr(0, 2)).unwrap(), oracle_left(&src));
    }
}

/// Identical traces on identical initial states end bit-identical.
#[test]
fn determinism_across_replays() {
    let geometry = DramGeometry::tiny(8, 32);
    let mut seed_mem = build_memory(geometry).unwrap();
    let mut rng_rows = [0u64; 8];
    let mut x = 0x1234_5678_9ABC_DEF0u64;
    for (i, slot) in rng_rows.iter_mut().enumerate() {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *slot = x;
        seed_mem
            .host_write_row(&addr(0, i), &BitRow::from_u64_lsb(x, 32.min(64), 32))
            .unwrap();
    }
    let mut trace = CommandTrace::new("d", 0);
    trace.push(Command::ShiftRight { src: addr(0, 0), dst: addr(0, 4) });
    trace.push(Command::Tra { a: addr(0, 1), b: addr(0, 2), c: addr(0, 3) });
    trace.push(Command::ShiftLeft { src: addr(0, 4), dst: addr(0, 5) });
    trace.push(Command::aap(addr(0, 5), addr(0, 6)));
    trace.push(Command::NotXsub { src: addr(0, 6), dst: addr(1, 0) });

    let mut m1 = seed_mem.clone();
    let mut m2 = seed_mem.clone();
    let r1 = run_trace(&mut m1, &trace).unwrap();
    let r2 = run_trace(&mut m2, &trace).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(memory_fingerprint(&m1), memory_fingerprint(&m2));
}

/// Commands scoped to one subarray leave every other subarray
/// bit-identical (checked by hashing).
#[test]
fn isolation_of_untargeted_subarrays() {
    let geometry = DramGeometry {
        subarrays_per_bank: 3,
        ..DramGeometry::tiny(8, 16)
    };
    let mut mem = build_memory(geometry).unwrap();
    // Populate all subarrays of both banks' worth of rows.
    for sub in 0..3 {
        for row in 0..8 {
            let v = (sub as u64 * 31 + row as u64 * 7) & 0xFFFF;
            mem.host_write_row(&addr(sub, row), &BitRow::from_u64_lsb(v, 16, 16))
                .unwrap();
        }
    }
    let before: Vec<u64> = (1..3).map(|s| subarray_fingerprint(&mem, 0, s)).collect();
    let mut trace = CommandTrace::new("iso", 0);
    trace.push(Command::ShiftRight { src: addr(0, 0), dst: addr(0, 1) });
    trace.push(Command::Tra { a: addr(0, 2), b: addr(0, 3), c: addr(0, 4) });
    trace.push(Command::ShiftLeft { src: addr(0, 5), dst: addr(0, 5) });
    trace.push(Command::aap(addr(0, 6), addr(0, 7)));
    run_trace(&mut mem, &trace).unwrap();
    let after: Vec<u64> = (1..3).map(|s| subarray_fingerprint(&mem, 0, s)).collect();
    assert_eq!(before, after);
}

/// Migration rows always hold exactly columns/2 bits.
#[test]
fn migration_row_capacity() {
    use dramshift::geometry::MigRow;
    let mut mem = build_memory(DramGeometry::tiny(4, 16)).unwrap();
    let mut exec = Executor::new(&mut mem);
    exec.shift_right(&addr(0, 0), &addr(0, 1)).unwrap();
    exec.shift_left(&addr(0, 1), &addr(0, 2)).unwrap();
    drop(exec);
    for side in [MigRow::Top, MigRow::Bottom] {
        let mig = mem
            .host_read_row(&RowAddress::mig(0, 0, 0, 0, side))
            .unwrap();
        assert_eq!(mig.len(), 8);
    }
}

/// Large-row spot check: a 65,536-column shift against the oracle.
#[test]
fn full_width_row_shift() {
    let geometry = DramGeometry::tiny(2, 65_536);
    let mut mem = build_memory(geometry).unwrap();
    let mut src = BitRow::zeros(65_536);
    let mut state = 0xDEAD_BEEF_u64;
    for i in 0..65_536 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        src.set(i, state >> 63 != 0);
    }
    mem.host_write_row(&addr(0, 0), &src).unwrap();
    let mut exec = Executor::new(&mut mem);
    exec.shift_right(&addr(0, 0), &addr(0, 1)).unwrap();
    drop(exec);
    assert_eq!(mem.host_read_row(&addr(0, 1)).unwrap(), oracle_right(&src));
}
