//! Experiment harness: trace execution, the shift benchmark, the
//! Monte-Carlo reliability sweep, kernel runs, and capacitor geometry,
//! all driven by a flat key=value config.
//!
//! Exit codes: 0 success, 2 configuration/parse error, 3 trace or
//! protocol error, 4 self-test failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dramshift::command::{format_trace, parse_trace, Command, CommandTrace};
use dramshift::config::SimConfig;
use dramshift::engine::run_trace;
use dramshift::geometry::{Row, RowAddress};
use dramshift::kernels::{
    compile_kernel, default_allocation, execute_kernel, kernel_geometry, KernelKind,
};
use dramshift::reliability::{mim_plate_area, monte_carlo, tech_node};
use dramshift::report::{fmt_f64, RunReport};
use dramshift::subarray::build_memory;
use dramshift::timing::cost_trace;
use dramshift::Error;

#[derive(Parser)]
#[command(name = "dramshift", version, about = "In-DRAM shift simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file (flat key=value); defaults reproduce the DDR3-1333
    /// reference setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set columns_per_row=64 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Also write the machine-readable JSON report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write the text report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a command trace file on a zeroed memory.
    Run {
        trace: PathBuf,
        /// Print a row after the run, as b<bank>:s<subarray>:r<row>
        /// (repeatable).
        #[arg(long = "dump-row", value_name = "bB:sS:rR")]
        dump_rows: Vec<String>,
    },
    /// Shift a full row N times in bank 0, subarray 0 and price it.
    ShiftBench {
        #[arg(long)]
        shifts: u64,
    },
    /// Monte-Carlo process-variation sweep; emits CSV.
    Reliability {
        /// Comma-separated variation levels, e.g. 0,0.05,0.1,0.2.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Technology node preset; defaults to the config's node.
        #[arg(long)]
        node: Option<String>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compile and execute an arithmetic kernel.
    Kernel {
        #[arg(long, value_parser = parse_kind)]
        kind: KernelKind,
        #[arg(long)]
        width: usize,
        /// Left operand, hex (0x57) or decimal.
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Write the compiled trace in the text format.
        #[arg(long)]
        dump_trace: Option<PathBuf>,
    },
    /// MIM capacitor plate geometry for a target capacitance.
    Capacitor {
        /// Capacitance in fF.
        #[arg(long = "c")]
        c_ff: f64,
        /// Dielectric thickness in nm.
        #[arg(long = "d")]
        d_nm: f64,
        /// Relative permittivity.
        #[arg(long)]
        epsr: f64,
    },
    /// Quick built-in checks of the calibrated figures.
    SelfTest,
}

fn parse_kind(s: &str) -> Result<KernelKind, String> {
    match s {
        "add" | "add-ripple" => Ok(KernelKind::AddRipple),
        "mul" | "mul-shift-add" => Ok(KernelKind::MulShiftAdd),
        "gf256" | "gf256-mul" => Ok(KernelKind::Gf256Mul),
        other => Err(format!("unknown kernel kind '{other}' (add|mul|gf256)")),
    }
}

fn parse_operand(s: &str) -> Result<u64, Error> {
    let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        s.parse()
    };
    parsed.map_err(|_| Error::Config(format!("operand '{s}' is not a number")))
}

fn load_config(common: &Common) -> Result<SimConfig, Error> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            SimConfig::parse(&text)?
        }
        None => SimConfig::default(),
    };
    for assignment in &common.overrides {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{assignment}'")))?;
        config.set(key.trim(), value.trim())?;
    }
    config.validate()?;
    Ok(config)
}

fn emit_report(common: &Common, report: &RunReport) -> Result<(), Error> {
    let text = report.to_text();
    match &common.out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(path) = &common.json {
        fs::write(path, report.to_json())
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_dump_row(spec: &str) -> Result<(usize, usize, usize), Error> {
    let bad = || Error::Config(format!("--dump-row expects bB:sS:rR, got '{spec}'"));
    let mut parts = spec.split(':');
    let mut next = |prefix: char| -> Result<usize, Error> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(prefix))
            .and_then(|n| n.parse().ok())
            .ok_or_else(bad)
    };
    let bank = next('b')?;
    let sub = next('s')?;
    let row = next('r')?;
    Ok((bank, sub, row))
}

fn cmd_run(common: &Common, trace_path: &PathBuf, dump_rows: &[String]) -> Result<(), Error> {
    let config = load_config(common)?;
    let text = fs::read_to_string(trace_path)
        .map_err(|e| Error::Config(format!("{}: {e}", trace_path.display())))?;
    let trace = parse_trace(&text, &config.geometry)?;
    let mut mem = build_memory(config.geometry)?;
    let execution = run_trace(&mut mem, &trace)?;
    let (ledger, stats) = cost_trace(
        &execution,
        &config.timing,
        &config.energy,
        config.refresh_mode,
    )?;
    let mut report = RunReport::new("run", &config, &execution, ledger, stats);
    for spec in dump_rows {
        let (bank, sub, row) = parse_dump_row(spec)?;
        let addr = RowAddress::in_flat_bank(&config.geometry, bank, sub, Row::Data(row));
        let bits = mem.host_read_row(&addr)?;
        report
            .extras
            .push((format!("row_b{bank}_s{sub}_r{row}"), bits.to_hex()));
    }
    emit_report(common, &report)
}

fn cmd_shift_bench(common: &Common, shifts: u64) -> Result<(), Error> {
    let config = load_config(common)?;
    let mut mem = build_memory(config.geometry)?;
    let row = RowAddress::data(0, 0, 0, 0, 0);
    let mut trace = CommandTrace::new(format!("shift_bench_{shifts}"), 0);
    for _ in 0..shifts {
        trace.push(Command::ShiftRight { src: row, dst: row });
    }
    let execution = run_trace(&mut mem, &trace)?;
    let (ledger, stats) = cost_trace(
        &execution,
        &config.timing,
        &config.energy,
        config.refresh_mode,
    )?;
    let report = RunReport::new("shift_bench", &config, &execution, ledger, stats);
    emit_report(common, &report)
}

fn cmd_reliability(
    common: &Common,
    levels: &[f64],
    trials: u64,
    node_name: Option<&str>,
    csv_path: Option<&PathBuf>,
) -> Result<(), Error> {
    let config = load_config(common)?;
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let node = tech_node::<f64>(node_name.unwrap_or(&config.node))?;
    let mut csv = String::from("level,trials,failures,rate\n");
    for &level in levels {
        if !(0.0..=0.5).contains(&level) {
            return Err(Error::Config(format!(
                "variation level {level} outside [0, 0.5]"
            )));
        }
        let result = monte_carlo(level, trials, &node, config.seed);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(level),
            result.trials,
            result.failures,
            fmt_f64(result.failure_rate())
        ));
    }
    match csv_path {
        Some(path) => fs::write(path, &csv)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_kernel(
    common: &Common,
    kind: KernelKind,
    width: usize,
    a: &str,
    b: &str,
    dump_trace: Option<&PathBuf>,
) -> Result<(), Error> {
    let _ = load_config(common)?;
    let a = parse_operand(a)?;
    let b = parse_operand(b)?;
    let geometry = kernel_geometry(kind, width);
    let allocation = default_allocation(&geometry)?;
    let (program, predicted) = compile_kernel(kind, width, &allocation, &geometry)?;
    if let Some(path) = dump_trace {
        let text = format_trace(&program.trace, &geometry)?;
        fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    let mut mem = build_memory(geometry)?;
    let (value, cost) = execute_kernel(&program, a, b, &mut mem)?;
    debug_assert_eq!(predicted, cost);
    println!("kind = {kind:?}");
    println!("width = {width}");
    println!("a = {a:#x}");
    println!("b = {b:#x}");
    println!("result = {value:#x}");
    println!("aap_events = {}", cost.aap_count);
    println!("tra_events = {}", cost.tra_count);
    println!("predicted_energy_nj = {}", fmt_f64(cost.predicted_energy_nj));
    println!("predicted_latency_ns = {}", fmt_f64(cost.predicted_latency_ns));
    Ok(())
}

fn cmd_capacitor(c_ff: f64, d_nm: f64, epsr: f64) -> Result<(), Error> {
    if c_ff <= 0.0 || d_nm <= 0.0 || epsr <= 0.0 {
        return Err(Error::Config("capacitor inputs must be positive".into()));
    }
    let (area, side) = mim_plate_area(c_ff, d_nm, epsr);
    println!("c_ff = {}", fmt_f64(c_ff));
    println!("d_nm = {}", fmt_f64(d_nm));
    println!("eps_r = {}", fmt_f64(epsr));
    println!("area_nm2 = {}", fmt_f64(area));
    println!("side_nm = {}", fmt_f64(side));
    Ok(())
}

/// Spot checks of the calibrated figures; failure exits with code 4.
fn cmd_self_test(common: &Common) -> Result<bool, Error> {
    let config = load_config(common)?;
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("{name}: {}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let mut mem = build_memory(config.geometry)?;
    let row = RowAddress::data(0, 0, 0, 0, 0);
    let mut trace = CommandTrace::new("selftest", 0);
    trace.push(Command::ShiftRight { src: row, dst: row });
    let execution = run_trace(&mut mem, &trace)?;
    let (ledger, stats) = cost_trace(
        &execution,
        &config.timing,
        &config.energy,
        config.refresh_mode,
    )?;
    check(
        "single_shift_energy",
        (ledger.total_nj() - 31.321).abs() < 0.2,
    );
    check(
        "single_shift_latency",
        (stats.total_time_ns - 208.7).abs() < 1.0,
    );
    check("four_aaps", execution.totals().aap == 4);

    let (area, side) = mim_plate_area(25.0_f64, 8.0, 20.0);
    check("mim_area", (area / 1.129e6 - 1.0).abs() < 0.01);
    check("mim_side", (side / 1063.0 - 1.0).abs() < 0.01);

    let (ok_add, _) = dramshift::run_kernel(KernelKind::AddRipple, 4, 3, 5)?;
    check("add_3_plus_5", ok_add == 8);
    let (gf, _) = dramshift::run_kernel(KernelKind::Gf256Mul, 8, 0x57, 0x83)?;
    check("gf_57_x_83", gf == 0xC1);
    Ok(ok)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::AtCommand { source, .. } => exit_code_for(source),
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Run { trace, dump_rows } => cmd_run(&cli.common, trace, dump_rows),
        Cmd::ShiftBench { shifts } => cmd_shift_bench(&cli.common, *shifts),
        Cmd::Reliability {
            levels,
            trials,
            node,
            csv,
        } => cmd_reliability(&cli.common, levels, *trials, node.as_deref(), csv.as_ref()),
        Cmd::Kernel {
            kind,
            width,
            a,
            b,
            dump_trace,
        } => cmd_kernel(&cli.common, *kind, *width, a, b, dump_trace.as_ref()),
        Cmd::Capacitor { c_ff, d_nm, epsr } => cmd_capacitor(*c_ff, *d_nm, *epsr),
        Cmd::SelfTest => match cmd_self_test(&cli.common) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(4),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
