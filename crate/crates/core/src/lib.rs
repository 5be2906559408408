//! Command-level, bit-accurate simulator of open-bitline DRAM subarrays
//! augmented with migration-cell rows.
//!
//! The array model executes DRAM and PIM commands (AAP/RowClone, TRA
//! majority, cross-subarray NOT, and the 4-AAP bidirectional row shift)
//! over exact bit state; a calibrated DDR3-1333 layer prices the command
//! events; an analytic charge-sharing model drives Monte-Carlo process
//! variation studies; and a kernel layer compiles add/multiply/GF(2^8)
//! demonstrations onto the command set.
//!
//! The numeric layers are generic over the scalar via `num-traits`;
//! `f64`-backed aliases are exported here and used by the CLI.

pub mod bits;
pub mod command;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod reliability;
pub mod report;
pub mod subarray;
pub mod timing;

pub use bits::BitRow;
pub use command::{format_trace, parse_trace, Command, CommandTrace};
pub use config::SimConfig;
pub use engine::{run_trace, EventCounts, ExecutionReport, Executor};
pub use error::{Error, Result};
pub use geometry::{DramGeometry, MigRow, MigrationPort, Port, Row, RowAddress};
pub use kernels::{
    compile_kernel, default_allocation, execute_kernel, kernel_geometry, run_kernel, KernelCost,
    KernelKind, KernelProgram,
};
pub use reliability::{
    calibrate_threshold, mim_plate_area, monte_carlo, simulate_shift_trial, tech_node, tech_nodes,
};
pub use report::RunReport;
pub use subarray::{build_memory, MemoryState, SubarrayState};
pub use timing::{aggregate_throughput, baseline_movement_energy, cost_trace, RefreshMode};

/// Scalar bound for the generic numeric layers: `f32` or `f64`.
pub trait Real: num_traits::Float + num_traits::FromPrimitive {}
impl<T: num_traits::Float + num_traits::FromPrimitive> Real for T {}

/// f64-backed model types, the concrete instantiation the CLI and the
/// golden reports use.
pub type TimingParams = timing::TimingParams<f64>;
pub type EnergyParams = timing::EnergyParams<f64>;
pub type EnergyLedger = timing::EnergyLedger<f64>;
pub type RunStats = timing::RunStats<f64>;
pub type TechNodeParams = reliability::TechNodeParams<f64>;
pub type MarginModel = reliability::MarginModel<f64>;
pub type VariationTrial = reliability::VariationTrial<f64>;
pub type McResult = reliability::McResult<f64>;

/// Single-precision aliases for callers trading accuracy for footprint.
pub type TimingParamsF32 = timing::TimingParams<f32>;
pub type EnergyParamsF32 = timing::EnergyParams<f32>;
pub type TechNodeParamsF32 = reliability::TechNodeParams<f32>;
