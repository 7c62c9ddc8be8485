//! Energy types and the per-slot battery and consumption arithmetic.
//!
//! All quantities are joules per slot. Buffers never go below zero or above
//! their capacity; when a raw update would leave that range the excess is
//! reported through [`BufferUpdate`] so the engine can log it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::GridPos;

/// Base station identifier, row-major over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BsId(pub usize);

impl fmt::Display for BsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub slot_index: usize,
    pub slot_duration_s: u32,
    pub mini_slot_duration_s: u32,
}

impl SimClock {
    pub fn new(slot_duration_s: u32, mini_slot_duration_s: u32) -> Result<Self> {
        if mini_slot_duration_s == 0
            || slot_duration_s == 0
            || !slot_duration_s.is_multiple_of(mini_slot_duration_s)
        {
            return Err(Error::Config(format!(
                "slot duration {slot_duration_s} s is not a positive multiple of the \
                 mini-slot duration {mini_slot_duration_s} s"
            )));
        }
        Ok(SimClock {
            slot_index: 0,
            slot_duration_s,
            mini_slot_duration_s,
        })
    }

    pub fn mini_slots_per_slot(&self) -> u32 {
        self.slot_duration_s / self.mini_slot_duration_s
    }

    pub fn slots_per_day(&self) -> usize {
        (86_400 / self.slot_duration_s) as usize
    }

    pub fn at(self, slot_index: usize) -> Self {
        SimClock { slot_index, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBuffer {
    pub level_j: f64,
    pub capacity_j: f64,
    pub low_threshold_j: f64,
    pub up_threshold_j: f64,
}

/// Result of settling a raw level into `[0, capacity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferUpdate {
    pub buffer: EnergyBuffer,
    /// Energy lost to the capacity cap.
    pub spilled_j: f64,
    /// Energy that was needed but not stored (lower clamp).
    pub shortfall_j: f64,
}

impl EnergyBuffer {
    pub fn new(capacity_j: f64, low_threshold_j: f64, up_threshold_j: f64, level_j: f64) -> Result<Self> {
        if !(0.0 < low_threshold_j && low_threshold_j < up_threshold_j && up_threshold_j < capacity_j) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < low ({low_threshold_j}) < up ({up_threshold_j}) \
                 < capacity ({capacity_j})"
            )));
        }
        if !(0.0..=capacity_j).contains(&level_j) {
            return Err(Error::Config(format!(
                "buffer level {level_j} J outside [0, {capacity_j}]"
            )));
        }
        Ok(EnergyBuffer {
            level_j,
            capacity_j,
            low_threshold_j,
            up_threshold_j,
        })
    }

    /// Thresholds given as percentages of capacity.
    pub fn from_percent(capacity_j: f64, low_pct: f64, up_pct: f64, fill_fraction: f64) -> Result<Self> {
        EnergyBuffer::new(
            capacity_j,
            capacity_j * low_pct / 100.0,
            capacity_j * up_pct / 100.0,
            capacity_j * fill_fraction,
        )
    }

    pub fn with_level(self, level_j: f64) -> Self {
        EnergyBuffer { level_j, ..self }
    }

    pub fn settle(self, raw_level_j: f64) -> BufferUpdate {
        let spilled_j = (raw_level_j - self.capacity_j).max(0.0);
        let shortfall_j = (-raw_level_j).max(0.0);
        BufferUpdate {
            buffer: self.with_level(raw_level_j.clamp(0.0, self.capacity_j)),
            spilled_j,
            shortfall_j,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: BsId,
    pub pos: GridPos,
    pub grid_connected: bool,
    pub buffer: EnergyBuffer,
    pub load_profile_id: usize,
    pub idle_energy_j: f64,
    pub max_load_energy_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestSample {
    pub slot_index: usize,
    pub solar_j: f64,
    pub wind_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BsRole {
    Source { surplus_j: f64 },
    Consumer { demand_j: f64 },
    Neutral,
}

impl BsRole {
    pub fn surplus_j(&self) -> f64 {
        match *self {
            BsRole::Source { surplus_j } => surplus_j,
            _ => 0.0,
        }
    }

    pub fn demand_j(&self) -> f64 {
        match *self {
            BsRole::Consumer { demand_j } => demand_j,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BsRole::Source { .. } => "source",
            BsRole::Consumer { .. } => "consumer",
            BsRole::Neutral => "neutral",
        }
    }
}

/// Load-dependent energy: linear in the normalized load.
pub fn load_energy(load_fraction: f64, bs: &BaseStation) -> Result<f64> {
    if !(0.0..=1.0).contains(&load_fraction) {
        return Err(Error::InputDomain(format!(
            "load fraction {load_fraction} outside [0, 1]"
        )));
    }
    Ok(load_fraction * bs.max_load_energy_j)
}

pub fn bs_consumption(bs: &BaseStation, load_fraction: f64) -> Result<f64> {
    Ok(bs.idle_energy_j + load_energy(load_fraction, bs)?)
}

/// Grid-connected stations never become consumers: they buy from the grid instead.
pub fn classify_role(buffer: &EnergyBuffer, grid_connected: bool) -> BsRole {
    if buffer.level_j > buffer.up_threshold_j {
        BsRole::Source {
            surplus_j: buffer.level_j - buffer.up_threshold_j,
        }
    } else if buffer.level_j < buffer.low_threshold_j && !grid_connected {
        BsRole::Consumer {
            demand_j: buffer.low_threshold_j - buffer.level_j,
        }
    } else {
        BsRole::Neutral
    }
}

pub fn eb_step_offgrid(buffer: EnergyBuffer, harvested_j: f64, consumed_j: f64, transferred_j: f64) -> EnergyBuffer {
    buffer
        .settle(buffer.level_j + harvested_j - consumed_j + transferred_j)
        .buffer
}

pub fn eb_step_ongrid(
    buffer: EnergyBuffer,
    harvested_j: f64,
    consumed_j: f64,
    transferred_j: f64,
    purchased_j: f64,
) -> EnergyBuffer {
    buffer
        .settle(buffer.level_j + harvested_j - consumed_j + transferred_j + purchased_j)
        .buffer
}

/// Grid top-up needed to bring a provisional level back to the upper threshold.
pub fn grid_purchase(buffer: &EnergyBuffer) -> f64 {
    (buffer.up_threshold_j - buffer.level_j).max(0.0)
}
