//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Reference figures and tolerances are
//! pinned in code.
//!
//!   cargo test -p dramshift --test acceptance

use dramshift::bits::BitRow;
use dramshift::command::{Command, CommandTrace};
use dramshift::config::SimConfig;
use dramshift::engine::{run_trace, Executor};
use dramshift::geometry::{DramGeometry, RowAddress};
use dramshift::kernels::{
    compile_kernel, default_allocation, execute_kernel, kernel_geometry, KernelKind,
};
use dramshift::reliability::{mim_plate_area, monte_carlo, tech_node};
use dramshift::report::RunReport;
use dramshift::subarray::build_memory;
use dramshift::timing::{aggregate_throughput, baseline_movement_energy, cost_trace};
use dramshift::{EnergyLedger, RunStats};

fn addr(row: usize) -> RowAddress {
    RowAddress::data(0, 0, 0, 0, row)
}

/// Test-local displacement oracles, independent of the engine.
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

fn lcg_row(len: usize, seed: u64) -> BitRow {
    let mut state = seed;
    (0..len)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 63 != 0
        })
        .collect()
}

/// Runs the reference shift benchmark through the full pipeline:
/// in-place right shifts of row 0, bank 0, subarray 0, default config.
fn shift_bench(shifts: u64) -> (EnergyLedger, RunStats, RunReport) {
    let config = SimConfig::default();
    let mut mem = build_memory(config.geometry).unwrap();
    let mut trace = CommandTrace::new(format!("shift_bench_{shifts}"), 0);
    for _ in 0..shifts {
        trace.push(Command::ShiftRight {
            src: addr(0),
            dst: addr(0),
        });
    }
    let execution = run_trace(&mut mem, &trace).unwrap();
    let (ledger, stats) = cost_trace(
        &execution,
        &config.timing,
        &config.energy,
        config.refresh_mode,
    )
    .unwrap();
    let report = RunReport::new("shift_bench", &config, &execution, ledger.clone(), stats);
    (ledger, stats, report)
}

fn within(actual: f64, expected: f64, rel_tol: f64) -> bool {
    (actual - expected).abs() <= rel_tol * expected.abs()
}

fn sig3(x: f64) -> f64 {
    assert!(x > 0.0);
    let scale = 10f64.powf(x.log10().floor() - 2.0);
    (x / scale).round() * scale
}

#[test]
fn acceptance_01_shift_oracle_equivalence() {
    // Exhaustive at 8 columns, both directions.
    for value in 0..256u64 {
        let mut mem = build_memory(DramGeometry::tiny(4, 8)).unwrap();
        let src = BitRow::from_u64_lsb(value, 8, 8);
        mem.host_write_row(&addr(0), &src).unwrap();
        let mut exec = Executor::new(&mut mem);
        exec.shift_right(&addr(0), &addr(1)).unwrap();
        exec.shift_left(&addr(0), &addr(2)).unwrap();
        drop(exec);
        assert_eq!(mem.host_read_row(&addr(1)).unwrap(), oracle_right(&src));
        assert_eq!(mem.host_read_row(&addr(2)).unwrap(), oracle_left(&src));
    }
    // 1,000 random full 8KB rows per direction, zero mismatches.
    let geometry = DramGeometry::tiny(4, 65_536);
    let mut mem = build_memory(geometry).unwrap();
    for trial in 0..1000u64 {
        let src = lcg_row(65_536, 0x5EED + trial);
        mem.host_write_row(&addr(0), &src).unwrap();
        let mut exec = Executor::new(&mut mem);
        exec.shift_right(&addr(0), &addr(1)).unwrap();
        exec.shift_left(&addr(0), &addr(2)).unwrap();
        drop(exec);
        assert_eq!(mem.host_read_row(&addr(1)).unwrap(), oracle_right(&src), "trial {trial} right");
        assert_eq!(mem.host_read_row(&addr(2)).unwrap(), oracle_left(&src), "trial {trial} left");
    }
    println!("ACCEPTANCE 01 shift-oracle-equivalence: PASS");
}

#[test]
fn acceptance_02_four_aaps_per_shift() {
    let mut mem = build_memory(DramGeometry::tiny(4, 64)).unwrap();
    let mut trace = CommandTrace::new("aap_structure", 0);
    for i in 0..10_000usize {
        let cmd = if i % 2 == 0 {
            Command::ShiftRight { src: addr(0), dst: addr(1) }
        } else {
            Command::ShiftLeft { src: addr(1), dst: addr(0) }
        };
        trace.push(cmd);
    }
    let report = run_trace(&mut mem, &trace).unwrap();
    assert_eq!(report.totals().shifts, 10_000);
    assert_eq!(report.totals().aap, 40_000);
    println!("ACCEPTANCE 02 four-AAPs-per-shift: PASS");
}

#[test]
fn acceptance_03_table2_energy_reproduction() {
    // Single shift exact to 0.5%; multi-shift totals within 3%.
    let (ledger, _, _) = shift_bench(1);
    assert!(
        within(ledger.total_nj(), 31.321, 0.005),
        "single shift {}",
        ledger.total_nj()
    );
    let totals = ledger.totals();
    assert!(within(totals.active_nj, 30.24, 0.005));
    assert_eq!(totals.burst_nj, 0.0);
    assert_eq!(totals.refresh_nj, 0.0);

    for (n, expect_total) in [(50u64, 1592.52), (100, 3223.6), (512, 16554.6)] {
        let (ledger, _, _) = shift_bench(n);
        assert!(
            within(ledger.total_nj(), expect_total, 0.03),
            "{n} shifts: {} vs {expect_total}",
            ledger.total_nj()
        );
    }
    println!("ACCEPTANCE 03 table2-energy: PASS");
}

#[test]
fn acceptance_04_table3_latency_reproduction() {
    let (_, stats, _) = shift_bench(1);
    assert!(
        (stats.total_time_ns - 208.7).abs() < 1e-9,
        "single-shift latency {}",
        stats.total_time_ns
    );
    for (n, expect_us) in [(50u64, 10.291), (100, 20.733), (512, 106.272)] {
        let (_, stats, _) = shift_bench(n);
        let total_us = stats.total_time_ns / 1000.0;
        assert!(
            within(total_us, expect_us, 0.02),
            "{n} shifts: {total_us} us vs {expect_us} us"
        );
        let throughput = stats.throughput_mops.unwrap();
        assert!(
            within(throughput, 4.82, 0.02),
            "{n} shifts: {throughput} MOps/s"
        );
    }
    println!("ACCEPTANCE 04 table3-latency-throughput: PASS");
}

#[test]
fn acceptance_05_energy_per_kb_band() {
    for n in [1u64, 50, 100, 512] {
        let (_, stats, _) = shift_bench(n);
        let nj_per_kb = stats.energy_per_kb_nj.unwrap();
        assert!(
            (3.915..=4.041).contains(&nj_per_kb),
            "{n} shifts: {nj_per_kb} nJ/KB outside [3.915, 4.041]"
        );
    }
    println!("ACCEPTANCE 05 energy-per-kb-band: PASS");
}

#[test]
fn acceptance_06_bank_parallelism_arithmetic() {
    assert_eq!(aggregate_throughput(4.82_f64, 8), 38.56);
    assert_eq!(aggregate_throughput(4.82_f64, 32), 154.24);
    println!("ACCEPTANCE 06 bank-parallelism: PASS");
}

#[test]
fn acceptance_07_baseline_movement_energy() {
    let (low, high) = baseline_movement_energy::<f64>(8 * 1024, false);
    assert_eq!((low, high), (1280.0, 1920.0));
    println!("ACCEPTANCE 07 baseline-movement: PASS");
}

#[test]
fn acceptance_08_table4_variation_study() {
    let node = tech_node::<f64>("22nm").unwrap();
    let seed = SimConfig::default().seed;
    let trials = 100_000u64;
    let rates: Vec<f64> = [0.0, 0.05, 0.10, 0.20]
        .iter()
        .map(|level| monte_carlo(*level, trials, &node, seed).failure_rate())
        .collect();
    assert_eq!(rates[0], 0.0, "zero variation must never fail");
    assert!(
        (0.001..=0.02).contains(&rates[1]),
        "+/-5% rate {} outside [0.1%, 2%]",
        rates[1]
    );
    assert!(
        (rates[2] - 0.14).abs() <= 0.01,
        "+/-10% rate {} outside 14% +/- 1pp",
        rates[2]
    );
    assert!(
        (0.22..=0.38).contains(&rates[3]),
        "+/-20% rate {} outside [22%, 38%]",
        rates[3]
    );
    assert!(
        rates[0] < rates[1] && rates[1] < rates[2] && rates[2] < rates[3],
        "rates not strictly monotone: {rates:?}"
    );
    println!("ACCEPTANCE 08 table4-variation: PASS ({rates:?})");
}

#[test]
fn acceptance_09_mim_capacitor_geometry() {
    let (area, side) = mim_plate_area(25.0_f64, 8.0, 20.0);
    assert_eq!(sig3(area), sig3(1.129e6), "area {area}");
    assert_eq!(sig3(side), sig3(1063.0), "side {side}");
    println!("ACCEPTANCE 09 mim-geometry: PASS (area {area:.0} nm^2, side {side:.1} nm)");
}

#[test]
fn acceptance_10_kernel_oracles() {
    // GF(2^8): software oracle with the AES polynomial, all 65,536 pairs.
    fn gf256_oracle(mut a: u16, mut b: u16) -> u16 {
        let mut acc = 0u16;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            a <<= 1;
            if a & 0x100 != 0 {
                a ^= 0x11B;
            }
            b >>= 1;
        }
        acc & 0xFF
    }

    let geometry = kernel_geometry(KernelKind::Gf256Mul, 8);
    let allocation = default_allocation(&geometry).unwrap();
    let (program, _) = compile_kernel(KernelKind::Gf256Mul, 8, &allocation, &geometry).unwrap();
    let mut mem = build_memory(geometry).unwrap();
    for a in 0..256u64 {
        for b in 0..256u64 {
            let (p, _) = execute_kernel(&program, a, b, &mut mem).unwrap();
            assert_eq!(p, gf256_oracle(a as u16, b as u16) as u64, "gf {a:#x}*{b:#x}");
        }
    }

    // Shift-and-add multiply, all 65,536 8-bit pairs against the integer
    // product (low 16 bits).
    let geometry = kernel_geometry(KernelKind::MulShiftAdd, 8);
    let allocation = default_allocation(&geometry).unwrap();
    let (program, _) = compile_kernel(KernelKind::MulShiftAdd, 8, &allocation, &geometry).unwrap();
    let mut mem = build_memory(geometry).unwrap();
    for a in 0..256u64 {
        for b in 0..256u64 {
            let (p, _) = execute_kernel(&program, a, b, &mut mem).unwrap();
            assert_eq!(p, (a * b) & 0xFFFF, "mul {a}*{b}");
        }
    }

    // Ripple-carry add, exhaustive at 4 bits.
    let geometry = kernel_geometry(KernelKind::AddRipple, 4);
    let allocation = default_allocation(&geometry).unwrap();
    let (program, _) = compile_kernel(KernelKind::AddRipple, 4, &allocation, &geometry).unwrap();
    let mut mem = build_memory(geometry).unwrap();
    for a in 0..16u64 {
        for b in 0..16u64 {
            let (s, _) = execute_kernel(&program, a, b, &mut mem).unwrap();
            assert_eq!(s, a + b, "add {a}+{b}");
        }
    }
    println!("ACCEPTANCE 10 kernel-oracles: PASS");
}

#[test]
fn acceptance_11_deterministic_reports() {
    let (_, _, r1) = shift_bench(50);
    let (_, _, r2) = shift_bench(50);
    assert_eq!(r1.to_text(), r2.to_text());
    assert_eq!(r1.to_json(), r2.to_json());

    // Reliability outputs are reproducible for a fixed seed and differ
    // only in reliability results when the seed changes.
    let node = tech_node::<f64>("22nm").unwrap();
    let a = monte_carlo(0.1, 20_000, &node, 7);
    let b = monte_carlo(0.1, 20_000, &node, 7);
    assert_eq!(a.failures, b.failures);
    let (_, _, r_seed9) = shift_bench(50);
    assert_eq!(r1.to_text(), r_seed9.to_text());
    println!("ACCEPTANCE 11 determinism: PASS");
}
