//! Scenario configuration.
//!
//! The file is TOML key-value text; every field has a default so an empty
//! file yields the baseline setup. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocation::{ControlParam, Policy};
use crate::domain::{BsId, EnergyBuffer, SimClock};
use crate::error::{Error, Result};
use crate::mobility::Highway;
use crate::topology::{line_resistance, CableSpec, LossModel, PpgGrid};
use crate::transfer::{link_occupancy, TransferParams};

/// The committed default scenario.
pub const BASELINE_TOML: &str = include_str!("../../../configs/baseline.toml");
/// The source-rich scenario used by the acceptance suite.
pub const REFERENCE_TOML: &str = include_str!("../../../configs/reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub on_grid_ids: Vec<usize>,

    pub slot_duration_s: u32,
    pub mini_slot_duration_s: u32,
    pub deadline_s: f64,
    pub processing_delay_s: f64,
    pub phi_max_j: f64,

    pub resistivity: f64,
    pub link_length_m: f64,
    pub cross_section_mm2: f64,
    pub dc_voltage_v: f64,

    pub beta_max_j: f64,
    pub beta_low_percent: f64,
    pub beta_up_percent: f64,
    pub initial_fill_fraction: f64,

    pub idle_energy_j: f64,
    pub max_load_energy_j: f64,

    pub lambda: f64,
    pub policy: Policy,
    pub horizon_slots: usize,
    pub seed: u64,
    /// Target average in the penalty bound report; defaults to mean demand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_star_j: Option<f64>,

    /// Synthetic traces are generated from the seed when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harvest_path: Option<PathBuf>,
    /// Peak solar energy per slot as a fraction of `beta_max_j`.
    pub harvest_peak_fraction: f64,
    /// Solar below this fraction of `beta_max_j` per slot counts as off-peak.
    pub offpeak_threshold_fraction: f64,
    /// Per-station harvest multiplier drawn from `[1 - j, 1 + j]`.
    pub harvest_jitter: f64,
    /// Explicit per-station harvest multipliers; overrides the jitter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harvest_multipliers: Option<Vec<f64>>,

    pub vue_count: usize,
    pub members_per_vue: usize,
    pub vue_speed_min_mps: f64,
    pub vue_speed_max_mps: f64,
    pub offset_radius_m: f64,
    pub bs_spacing_m: f64,
    pub lane_separation_m: f64,
    /// Highway centre line; defaults to the middle of the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub highway_y_m: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid_rows: 4,
            grid_cols: 6,
            on_grid_ids: vec![0, 5, 14, 18, 23],
            slot_duration_s: 60,
            mini_slot_duration_s: 5,
            deadline_s: 60.0,
            processing_delay_s: 2.0,
            phi_max_j: 100_000.0,
            resistivity: 0.023,
            link_length_m: 100.0,
            cross_section_mm2: 10.0,
            dc_voltage_v: 380.0,
            beta_max_j: 490_000.0,
            beta_low_percent: 30.0,
            beta_up_percent: 70.0,
            initial_fill_fraction: 0.5,
            idle_energy_j: 6_000.0,
            max_load_energy_j: 18_000.0,
            lambda: 1.0,
            policy: Policy::Lyapunov,
            horizon_slots: 1440,
            seed: 7,
            v_star_j: None,
            clusters_path: None,
            harvest_path: None,
            harvest_peak_fraction: 0.06,
            offpeak_threshold_fraction: 0.01,
            harvest_jitter: 0.0,
            harvest_multipliers: None,
            vue_count: 10,
            members_per_vue: 4,
            vue_speed_min_mps: 10.0,
            vue_speed_max_mps: 30.0,
            offset_radius_m: 20.0,
            bs_spacing_m: 500.0,
            lane_separation_m: 4.0,
            highway_y_m: None,
        }
    }
}

/// Constants that follow from the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub link_resistance_ohm: f64,
    pub beta_low_j: f64,
    pub beta_up_j: f64,
    pub mini_slots_per_slot: u32,
    /// Largest mini-slot count whose occupancy still meets the deadline.
    pub max_feasible_mini_slots: u32,
    pub max_feasible_occupancy_s: f64,
    pub per_hop_loss: f64,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn baseline() -> Self {
        SimConfig::from_toml(BASELINE_TOML).expect("committed baseline config is valid")
    }

    pub fn reference() -> Self {
        SimConfig::from_toml(REFERENCE_TOML).expect("committed reference config is valid")
    }

    /// Reads a config file; relative trace paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = SimConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.clusters_path, &mut cfg.harvest_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn station_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn is_on_grid(&self, id: BsId) -> bool {
        self.on_grid_ids.contains(&id.0)
    }

    pub fn clock(&self) -> Result<SimClock> {
        SimClock::new(self.slot_duration_s, self.mini_slot_duration_s)
    }

    pub fn control(&self) -> Result<ControlParam> {
        ControlParam::new(self.lambda)
    }

    pub fn cable(&self) -> CableSpec {
        CableSpec {
            link_length_m: self.link_length_m,
            resistivity: self.resistivity,
            cross_section_mm2: self.cross_section_mm2,
            dc_voltage_v: self.dc_voltage_v,
        }
    }

    pub fn grid(&self) -> Result<PpgGrid> {
        PpgGrid::new(self.grid_rows, self.grid_cols, self.cable())
    }

    pub fn loss_model(&self, grid: &PpgGrid) -> Result<LossModel> {
        LossModel::for_grid(grid, self.phi_max_j, f64::from(self.mini_slot_duration_s))
    }

    pub fn initial_buffer(&self) -> Result<EnergyBuffer> {
        EnergyBuffer::from_percent(
            self.beta_max_j,
            self.beta_low_percent,
            self.beta_up_percent,
            self.initial_fill_fraction,
        )
    }

    pub fn transfer_params(&self) -> TransferParams {
        TransferParams {
            phi_max_j: self.phi_max_j,
            processing_delay_s: self.processing_delay_s,
            deadline_s: self.deadline_s,
        }
    }

    pub fn highway(&self) -> Highway {
        let centre = self
            .highway_y_m
            .unwrap_or((self.grid_rows.saturating_sub(1)) as f64 * self.bs_spacing_m / 2.0);
        let half = self.lane_separation_m / 2.0;
        Highway {
            length_m: self.grid_cols as f64 * self.bs_spacing_m,
            lane_y_m: [centre - half, centre + half],
            offset_radius_m: self.offset_radius_m,
            speed_range_mps: (self.vue_speed_min_mps, self.vue_speed_max_mps),
        }
    }

    pub fn offpeak_threshold_j(&self) -> f64 {
        self.offpeak_threshold_fraction * self.beta_max_j
    }

    pub fn derived(&self) -> Result<DerivedConstants> {
        let buffer = self.initial_buffer()?;
        let clock = self.clock()?;
        let grid = self.grid()?;
        let per_slot = clock.mini_slots_per_slot();
        let max_feasible_mini_slots = (0..=per_slot)
            .rev()
            .find(|&y| link_occupancy(y, self.mini_slot_duration_s, self.processing_delay_s) <= self.deadline_s)
            .unwrap_or(0);
        Ok(DerivedConstants {
            link_resistance_ohm: line_resistance(self.resistivity, self.link_length_m, self.cross_section_mm2)?,
            beta_low_j: buffer.low_threshold_j,
            beta_up_j: buffer.up_threshold_j,
            mini_slots_per_slot: per_slot,
            max_feasible_mini_slots,
            max_feasible_occupancy_s: link_occupancy(
                max_feasible_mini_slots,
                self.mini_slot_duration_s,
                self.processing_delay_s,
            ),
            per_hop_loss: self.loss_model(&grid)?.per_hop_loss(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let grid = self.grid()?;
        self.clock()?;
        self.control()?;
        self.initial_buffer()?;
        self.loss_model(&grid)?;
        let n = self.station_count();
        let mut ids = self.on_grid_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.on_grid_ids.len() {
            return bad("on_grid_ids contains duplicates".into());
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= n) {
            return bad(format!("on-grid id {id} is not one of the {n} stations"));
        }
        if !(self.initial_fill_fraction >= 0.0 && self.initial_fill_fraction <= 1.0) {
            return bad(format!("initial_fill_fraction {} outside [0, 1]", self.initial_fill_fraction));
        }
        for (name, v) in [
            ("deadline_s", self.deadline_s),
            ("phi_max_j", self.phi_max_j),
            ("bs_spacing_m", self.bs_spacing_m),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("processing_delay_s", self.processing_delay_s),
            ("idle_energy_j", self.idle_energy_j),
            ("max_load_energy_j", self.max_load_energy_j),
            ("harvest_peak_fraction", self.harvest_peak_fraction),
            ("offpeak_threshold_fraction", self.offpeak_threshold_fraction),
            ("offset_radius_m", self.offset_radius_m),
            ("lane_separation_m", self.lane_separation_m),
            ("vue_speed_min_mps", self.vue_speed_min_mps),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.harvest_jitter >= 0.0 && self.harvest_jitter <= 1.0) {
            return bad(format!("harvest_jitter {} outside [0, 1]", self.harvest_jitter));
        }
        if self.vue_speed_max_mps < self.vue_speed_min_mps {
            return bad("vue_speed_max_mps is below vue_speed_min_mps".into());
        }
        if let Some(m) = &self.harvest_multipliers {
            if m.len() != n {
                return bad(format!("harvest_multipliers has {} entries for {n} stations", m.len()));
            }
            if m.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return bad("harvest_multipliers must be finite and >= 0".into());
            }
        }
        if let Some(v) = self.v_star_j {
            if !(v >= 0.0) {
                return bad(format!("v_star_j must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_file_matches_defaults() {
        assert_eq!(SimConfig::baseline(), SimConfig::default());
    }

    #[test]
    fn baseline_derived_constants() {
        let d = SimConfig::baseline().derived().unwrap();
        assert!((d.link_resistance_ohm - 0.23).abs() <= 1e-12 * 0.23);
        assert_eq!(d.beta_low_j, 147_000.0);
        assert_eq!(d.beta_up_j, 343_000.0);
        assert_eq!(d.mini_slots_per_slot, 12);
        assert_eq!(d.max_feasible_mini_slots, 11);
        assert_eq!(d.max_feasible_occupancy_s, 57.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = SimConfig::from_toml("grid_rows = 4\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("bogus")));
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "on_grid_ids = [0, 0]",
            "on_grid_ids = [24]",
            "mini_slot_duration_s = 7",
            "lambda = -1.0",
            "beta_low_percent = 80.0",
            "policy = \"greedy\"",
            "harvest_multipliers = [1.0]",
            "initial_fill_fraction = 1.5",
            "dc_voltage_v = 1.0",
        ] {
            assert!(SimConfig::from_toml(text).is_err(), "{text} accepted");
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = SimConfig::reference();
        cfg.v_star_j = Some(12.5);
        cfg.harvest_path = Some("traces/h.csv".into());
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn highway_sits_mid_grid() {
        let hw = SimConfig::default().highway();
        assert_eq!(hw.length_m, 3_000.0);
        assert_eq!(hw.lane_y_m, [748.0, 752.0]);
    }
}
