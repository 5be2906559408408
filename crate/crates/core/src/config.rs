//! Flat key=value simulator configuration.
//!
//! Defaults reproduce the DDR3-1333 4Gb reference configuration; every
//! key can be overridden from a file or a CLI `--set key=value` flag.
//! Unknown keys are rejected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DramGeometry;
use crate::timing::{EnergyParams, RefreshEventModel, RefreshMode, TimingParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub geometry: DramGeometry,
    pub timing: TimingParams<f64>,
    pub energy: EnergyParams<f64>,
    /// Technology node preset used by the reliability study.
    pub node: String,
    pub refresh_mode: RefreshMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: DramGeometry::default(),
            timing: TimingParams::ddr3_1333(),
            energy: EnergyParams::ddr3_1333(),
            node: "22nm".into(),
            refresh_mode: RefreshMode::EnergyOnly,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.timing.validate()?;
        self.energy.validate()?;
        crate::reliability::tech_node::<f64>(&self.node)?;
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a count")))
        };
        let parse_f64 = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
        };
        match key {
            "channels" => self.geometry.channels = parse_usize()?,
            "ranks_per_channel" => self.geometry.ranks_per_channel = parse_usize()?,
            "banks_per_rank" => self.geometry.banks_per_rank = parse_usize()?,
            "subarrays_per_bank" => self.geometry.subarrays_per_bank = parse_usize()?,
            "rows_per_subarray" => self.geometry.rows_per_subarray = parse_usize()?,
            "columns_per_row" => self.geometry.columns_per_row = parse_usize()?,
            "t_rcd_ns" => self.timing.t_rcd_ns = parse_f64()?,
            "t_rp_ns" => self.timing.t_rp_ns = parse_f64()?,
            "t_ras_ns" => self.timing.t_ras_ns = parse_f64()?,
            "t_rc_ns" => self.timing.t_rc_ns = parse_f64()?,
            "t_refi_us" => self.timing.t_refi_us = parse_f64()?,
            "t_aap_ns" => self.timing.t_aap_ns = parse_f64()?,
            "t_shift_setup_ns" => self.timing.t_shift_setup_ns = parse_f64()?,
            "e_aap_active_nj" => self.energy.e_aap_active_nj = parse_f64()?,
            "e_shift_overhead_nj" => self.energy.e_shift_overhead_nj = parse_f64()?,
            "e_ref_event_nj" => self.energy.e_ref_event_nj = parse_f64()?,
            "e_burst_per_64b_nj" => self.energy.e_burst_per_64b_nj = parse_f64()?,
            "p_standby_nw" => self.energy.p_standby_nw = parse_f64()?,
            "refresh_event_model" => {
                self.energy.refresh_event_model = match value {
                    "rank_staggered" => RefreshEventModel::RankStaggered,
                    "prorated" => RefreshEventModel::Prorated,
                    "whole_intervals" => RefreshEventModel::WholeIntervals,
                    other => {
                        return Err(Error::Config(format!(
                            "refresh_event_model must be rank_staggered|prorated|whole_intervals, got '{other}'"
                        )))
                    }
                }
            }
            "refresh_mode" => {
                self.refresh_mode = match value {
                    "energy_only" => RefreshMode::EnergyOnly,
                    "blocking" => RefreshMode::Blocking,
                    other => {
                        return Err(Error::Config(format!(
                            "refresh_mode must be energy_only|blocking, got '{other}'"
                        )))
                    }
                }
            }
            "node" => self.node = value.to_string(),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("seed '{value}' is not a u64")))?
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a whole config file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.trim();
            if stripped.is_empty() || stripped.starts_with('#') {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected 'key = value', got '{stripped}'"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Canonical serialization; parsing it back yields an equal config.
    pub fn serialize(&self) -> String {
        let e_model = match self.energy.refresh_event_model {
            RefreshEventModel::RankStaggered => "rank_staggered",
            RefreshEventModel::Prorated => "prorated",
            RefreshEventModel::WholeIntervals => "whole_intervals",
        };
        let r_mode = match self.refresh_mode {
            RefreshMode::EnergyOnly => "energy_only",
            RefreshMode::Blocking => "blocking",
        };
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("channels", self.geometry.channels.to_string());
        push("ranks_per_channel", self.geometry.ranks_per_channel.to_string());
        push("banks_per_rank", self.geometry.banks_per_rank.to_string());
        push("subarrays_per_bank", self.geometry.subarrays_per_bank.to_string());
        push("rows_per_subarray", self.geometry.rows_per_subarray.to_string());
        push("columns_per_row", self.geometry.columns_per_row.to_string());
        push("t_rcd_ns", self.timing.t_rcd_ns.to_string());
        push("t_rp_ns", self.timing.t_rp_ns.to_string());
        push("t_ras_ns", self.timing.t_ras_ns.to_string());
        push("t_rc_ns", self.timing.t_rc_ns.to_string());
        push("t_refi_us", self.timing.t_refi_us.to_string());
        push("t_aap_ns", self.timing.t_aap_ns.to_string());
        push("t_shift_setup_ns", self.timing.t_shift_setup_ns.to_string());
        push("e_aap_active_nj", self.energy.e_aap_active_nj.to_string());
        push("e_shift_overhead_nj", self.energy.e_shift_overhead_nj.to_string());
        push("e_ref_event_nj", self.energy.e_ref_event_nj.to_string());
        push("e_burst_per_64b_nj", self.energy.e_burst_per_64b_nj.to_string());
        push("p_standby_nw", self.energy.p_standby_nw.to_string());
        push("refresh_event_model", e_model.to_string());
        push("refresh_mode", r_mode.to_string());
        push("node", self.node.clone());
        push("seed", self.seed.to_string());
        out
    }
}
