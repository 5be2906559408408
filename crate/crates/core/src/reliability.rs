//! Analytic charge-sharing margin model and the Monte-Carlo process
//! variation study of the shift operation.
//!
//! Sensing succeeds when the bitline deviation after cell-to-bitline
//! charge sharing clears the amplifier threshold. A shift exposes four
//! sensing events (two source senses and the two migration-row
//! releases); destination restores are driven rail-to-rail by the
//! amplifiers and are treated as margin-free. Wordline rise time and
//! bitline RC derate the margin analytically instead of a transient
//! simulation.

use std::sync::OnceLock;

use num_traits::{Float, FromPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
pub const EPSILON_0_F_PER_M: f64 = 8.854_187_812_8e-12;

/// Subarray depth assumed by the variation study (rows on one bitline).
pub const MC_SUBARRAY_ROWS: usize = 512;

/// Sense-amp input capacitance at the 22nm reference node, fF; scaled
/// across nodes with the amplifier NMOS width.
pub const C_SA_INPUT_22NM_FF: f64 = 20.0;
const SA_NMOS_W_22NM_UM: f64 = 7.0;

/// Amplifier threshold in mV, fit once so that +/-10% variation at 22nm
/// fails 14% of trials (seed 1, 100k trials), then held fixed for every
/// other level and node.
pub const DEFAULT_SENSE_THRESHOLD_MV: f64 = 84.282226;

fn c<F: Float + FromPrimitive>(v: f64) -> F {
    F::from_f64(v).expect("constant representable")
}

/// Device and circuit parameters for one technology node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TechNodeParams<F> {
    pub node_name: &'static str,
    pub vdd_v: F,
    pub wl_boost_v: F,
    pub c_cell_ff: F,
    pub access_l_um: F,
    pub access_w_um: F,
    pub sa_nmos_w_um: F,
    pub bl_r_per_cell_mohm: F,
    pub bl_c_per_cell_ff: F,
    pub trise_ns: F,
}

impl<F: Float + FromPrimitive> TechNodeParams<F> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.vdd_v,
            self.wl_boost_v,
            self.c_cell_ff,
            self.access_l_um,
            self.access_w_um,
            self.sa_nmos_w_um,
            self.bl_r_per_cell_mohm,
            self.bl_c_per_cell_ff,
            self.trise_ns,
        ];
        if fields.iter().any(|v| *v <= F::zero()) {
            return Err(Error::Config(format!(
                "node {} has a non-positive parameter",
                self.node_name
            )));
        }
        Ok(())
    }
}

static NODE_NAMES: [&str; 6] = ["600nm", "180nm", "45nm", "22nm", "20nm", "10nm"];
static NODE_TABLE: OnceLock<Vec<TechNodeParams<f64>>> = OnceLock::new();

fn node_table() -> &'static [TechNodeParams<f64>] {
    NODE_TABLE.get_or_init(|| {
        let text = include_str!("../data/tech_nodes.csv");
        text.lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                assert_eq!(f.len(), 10, "malformed tech node row: {line}");
                let name = NODE_NAMES
                    .iter()
                    .find(|n| **n == f[0])
                    .unwrap_or_else(|| panic!("unknown node {}", f[0]));
                let v = |i: usize| f[i].parse::<f64>().expect("numeric field");
                TechNodeParams {
                    node_name: name,
                    vdd_v: v(1),
                    wl_boost_v: v(2),
                    c_cell_ff: v(3),
                    access_l_um: v(4),
                    access_w_um: v(5),
                    sa_nmos_w_um: v(6),
                    bl_r_per_cell_mohm: v(7),
                    bl_c_per_cell_ff: v(8),
                    trise_ns: v(9),
                }
            })
            .collect()
    })
}

/// All shipped node presets, 600nm down to 10nm.
pub fn tech_nodes<F: Float + FromPrimitive>() -> Vec<TechNodeParams<F>> {
    node_table().iter().map(convert).collect()
}

/// Looks up a preset by name, e.g. `"22nm"`.
pub fn tech_node<F: Float + FromPrimitive>(name: &str) -> Result<TechNodeParams<F>> {
    node_table()
        .iter()
        .find(|n| n.node_name == name)
        .map(convert)
        .ok_or_else(|| Error::Config(format!("unknown technology node '{name}'")))
}

fn convert<F: Float + FromPrimitive>(n: &TechNodeParams<f64>) -> TechNodeParams<F> {
    TechNodeParams {
        node_name: n.node_name,
        vdd_v: c(n.vdd_v),
        wl_boost_v: c(n.wl_boost_v),
        c_cell_ff: c(n.c_cell_ff),
        access_l_um: c(n.access_l_um),
        access_w_um: c(n.access_w_um),
        sa_nmos_w_um: c(n.sa_nmos_w_um),
        bl_r_per_cell_mohm: c(n.bl_r_per_cell_mohm),
        bl_c_per_cell_ff: c(n.bl_c_per_cell_ff),
        trise_ns: c(n.trise_ns),
    }
}

/// Charge-sharing margin model for one node and subarray depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginModel<F> {
    /// Nominal total bitline capacitance: rows x per-cell + amp input, fF.
    pub c_bitline_ff: F,
    pub v_precharge_v: F,
    pub sense_threshold_mv: F,
    pub rows_per_bitline: usize,
    pub c_sa_input_ff: F,
}

impl<F: Float + FromPrimitive> MarginModel<F> {
    pub fn for_node(node: &TechNodeParams<F>, rows_per_bitline: usize) -> Self {
        let c_sa = c::<F>(C_SA_INPUT_22NM_FF) * node.sa_nmos_w_um / c(SA_NMOS_W_22NM_UM);
        Self {
            c_bitline_ff: c::<F>(rows_per_bitline as f64) * node.bl_c_per_cell_ff + c_sa,
            v_precharge_v: node.vdd_v / c(2.0),
            sense_threshold_mv: c(DEFAULT_SENSE_THRESHOLD_MV),
            rows_per_bitline,
            c_sa_input_ff: c_sa,
        }
    }
}

/// One Monte-Carlo sample: the perturbed parameter set and its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationTrial<F> {
    pub seed: u64,
    pub c_cell_ff: F,
    pub access_l_um: F,
    pub access_w_um: F,
    pub bl_c_per_cell_ff: F,
    pub bl_r_per_cell_mohm: F,
    pub pass: bool,
    /// 1-based index of the first sensing event below threshold.
    pub failing_step: Option<u8>,
}

/// Bitline voltage deviation, in mV, after sharing a cell at
/// `cell_voltage` onto the precharged bitline, using the trial's
/// perturbed capacitances.
pub fn sense_margin<F: Float + FromPrimitive>(
    cell_voltage_v: F,
    trial: &VariationTrial<F>,
    model: &MarginModel<F>,
) -> Result<F> {
    let c_cell = trial.c_cell_ff;
    let c_bl = c::<F>(model.rows_per_bitline as f64) * trial.bl_c_per_cell_ff + model.c_sa_input_ff;
    if c_cell <= F::zero() || c_bl <= F::zero() {
        return Err(Error::Config("capacitances must be positive".into()));
    }
    // Charge balance across the share: Q = c_b*v_pre + c_c*v_cell.
    let v_pre = model.v_precharge_v;
    let v_final = (c_bl * v_pre + c_cell * cell_voltage_v) / (c_bl + c_cell);
    Ok((v_final - v_pre).abs() * c(1000.0))
}

/// Margin derating for wordline rise time against the bitline RC
/// constant: margin * 1 / (1 + tau/trise).
fn rc_derate<F: Float + FromPrimitive>(trial: &VariationTrial<F>, model: &MarginModel<F>, node: &TechNodeParams<F>) -> F {
    let r_bl_ohm = c::<F>(model.rows_per_bitline as f64) * trial.bl_r_per_cell_mohm * c(1e-3);
    let c_bl_ff = c::<F>(model.rows_per_bitline as f64) * trial.bl_c_per_cell_ff + model.c_sa_input_ff;
    // ohm * fF = 1e-6 ns.
    let tau_ns = r_bl_ohm * c_bl_ff * c(1e-6);
    F::one() / (F::one() + tau_ns / node.trise_ns)
}

fn sample_truncated<F>(rng: &mut ChaCha8Rng, nominal: F, level: F) -> F
where
    F: Float + FromPrimitive,
    StandardNormal: Distribution<F>,
{
    if level <= F::zero() {
        return nominal;
    }
    let sigma = nominal * level / c(3.0);
    let lo = nominal * (F::one() - level);
    let hi = nominal * (F::one() + level);
    let dist = Normal::new(nominal, sigma).expect("positive sigma");
    loop {
        let x = dist.sample(rng);
        if x >= lo && x <= hi {
            return x;
        }
    }
}

/// Runs one shift through the margin model with every varied parameter
/// drawn once from its truncated normal (3 sigma = level * nominal,
/// support clipped at +/- level). All four sensing events share the
/// trial's parameter set.
pub fn simulate_shift_trial<F>(level: F, seed: u64, node: &TechNodeParams<F>) -> VariationTrial<F>
where
    F: Float + FromPrimitive,
    StandardNormal: Distribution<F>,
{
    let model = MarginModel::for_node(node, MC_SUBARRAY_ROWS);
    simulate_shift_trial_with_model(level, seed, node, &model)
}

/// As [`simulate_shift_trial`] with an explicit model (threshold or
/// subarray depth overrides).
pub fn simulate_shift_trial_with_model<F>(
    level: F,
    seed: u64,
    node: &TechNodeParams<F>,
    model: &MarginModel<F>,
) -> VariationTrial<F>
where
    F: Float + FromPrimitive,
    StandardNormal: Distribution<F>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trial = VariationTrial {
        seed,
        c_cell_ff: sample_truncated(&mut rng, node.c_cell_ff, level),
        access_l_um: sample_truncated(&mut rng, node.access_l_um, level),
        access_w_um: sample_truncated(&mut rng, node.access_w_um, level),
        bl_c_per_cell_ff: sample_truncated(&mut rng, node.bl_c_per_cell_ff, level),
        bl_r_per_cell_mohm: sample_truncated(&mut rng, node.bl_r_per_cell_mohm, level),
        pass: true,
        failing_step: None,
    };
    // The cell sensed as storing a one; zero is symmetric around the
    // precharge level. Each sensed 0/1 alternates across the four events
    // purely for structure; the magnitude is identical.
    for step in 1..=4u8 {
        let v_cell = if step % 2 == 1 { node.vdd_v } else { F::zero() };
        let raw = sense_margin(v_cell, &trial, model).expect("positive capacitances");
        let margin = raw * rc_derate(&trial, model, node);
        if margin < model.sense_threshold_mv {
            trial.pass = false;
            trial.failing_step = Some(step);
            break;
        }
    }
    trial
}

/// Result of a Monte-Carlo sweep at one variation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McResult<F> {
    pub level: F,
    pub trials: u64,
    pub failures: u64,
}

impl<F: Float + FromPrimitive> McResult<F> {
    pub fn failure_rate(&self) -> F {
        if self.trials == 0 {
            F::zero()
        } else {
            c::<F>(self.failures as f64) / c(self.trials as f64)
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derivation; trials are pure functions of their seed,
/// so the sweep is order-independent.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Runs `trials` independent shift trials and tallies failures.
pub fn monte_carlo<F>(level: F, trials: u64, node: &TechNodeParams<F>, base_seed: u64) -> McResult<F>
where
    F: Float + FromPrimitive,
    StandardNormal: Distribution<F>,
{
    let model = MarginModel::for_node(node, MC_SUBARRAY_ROWS);
    let failures = (0..trials)
        .filter(|i| !simulate_shift_trial_with_model(level, trial_seed(base_seed, *i), node, &model).pass)
        .count() as u64;
    McResult {
        level,
        trials,
        failures,
    }
}

/// Fits the amplifier threshold as the `target_rate` quantile of the
/// derated margin distribution at the given level. Used once to anchor
/// the default threshold; kept for recalibration.
pub fn calibrate_threshold<F>(
    level: F,
    trials: u64,
    node: &TechNodeParams<F>,
    base_seed: u64,
    target_rate: F,
) -> F
where
    F: Float + FromPrimitive,
    StandardNormal: Distribution<F>,
{
    let mut model = MarginModel::for_node(node, MC_SUBARRAY_ROWS);
    // Margins unaffected by the threshold; collect then take the quantile.
    model.sense_threshold_mv = F::neg_infinity();
    let mut margins: Vec<F> = (0..trials)
        .map(|i| {
            let trial =
                simulate_shift_trial_with_model(level, trial_seed(base_seed, i), node, &model);
            let raw = sense_margin(node.vdd_v, &trial, &model).expect("positive capacitances");
            raw * rc_derate(&trial, &model, node)
        })
        .collect();
    margins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (target_rate * c(trials as f64))
        .to_usize()
        .unwrap_or(0)
        .min(margins.len() - 1);
    margins[k]
}

/// MIM capacitor plate area for a target capacitance, dielectric
/// thickness, and relative permittivity: A = C*d / (eps0 * eps_r).
/// Returns (area in nm^2, square side length in nm).
pub fn mim_plate_area<F: Float + FromPrimitive>(c_ff: F, d_nm: F, eps_r: F) -> (F, F) {
    assert!(
        c_ff > F::zero() && d_nm > F::zero() && eps_r > F::zero(),
        "capacitor geometry inputs must be positive"
    );
    let farads = c_ff * c(1e-15);
    let meters = d_nm * c(1e-9);
    let area_m2 = farads * meters / (c::<F>(EPSILON_0_F_PER_M) * eps_r);
    let area_nm2 = area_m2 * c(1e18);
    (area_nm2, area_nm2.sqrt())
}
