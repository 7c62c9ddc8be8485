//! The power packet grid: a 4-connected mesh of DC links with one node per
//! base station, static shortest-path routes and TDM link reservations.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::domain::BsId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub row: usize,
    pub col: usize,
}

impl GridPos {
    pub const fn new(row: usize, col: usize) -> Self {
        GridPos { row, col }
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

pub type LinkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerLink {
    pub id: LinkId,
    pub endpoints: (GridPos, GridPos),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableSpec {
    pub link_length_m: f64,
    /// Ω·mm²/m
    pub resistivity: f64,
    pub cross_section_mm2: f64,
    pub dc_voltage_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpgGrid {
    rows: usize,
    cols: usize,
    cable: CableSpec,
    links: Vec<PowerLink>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub hops: Vec<GridPos>,
}

impl Route {
    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn source(&self) -> GridPos {
        self.hops[0]
    }

    pub fn destination(&self) -> GridPos {
        self.hops[self.hops.len() - 1]
    }
}

pub fn line_resistance(resistivity: f64, length_m: f64, cross_section_mm2: f64) -> Result<f64> {
    if !(resistivity > 0.0 && length_m > 0.0 && cross_section_mm2 > 0.0) {
        return Err(Error::InputDomain(format!(
            "resistance needs positive inputs, got rho={resistivity}, l={length_m}, A={cross_section_mm2}"
        )));
    }
    Ok(resistivity * length_m / cross_section_mm2)
}

impl PpgGrid {
    pub fn new(rows: usize, cols: usize, cable: CableSpec) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("grid must be non-empty, got {rows}x{cols}")));
        }
        line_resistance(cable.resistivity, cable.link_length_m, cable.cross_section_mm2)?;
        if !(cable.dc_voltage_v > 0.0) {
            return Err(Error::Config(format!("DC voltage must be positive, got {}", cable.dc_voltage_v)));
        }
        let mut links = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for row in 0..rows {
            for col in 0..cols {
                let here = GridPos::new(row, col);
                if col + 1 < cols {
                    links.push((here, GridPos::new(row, col + 1)));
                }
                if row + 1 < rows {
                    links.push((here, GridPos::new(row + 1, col)));
                }
            }
        }
        let links = links
            .into_iter()
            .enumerate()
            .map(|(id, endpoints)| PowerLink { id, endpoints })
            .collect();
        Ok(PpgGrid { rows, cols, cable, links })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cable(&self) -> &CableSpec {
        &self.cable
    }

    pub fn links(&self) -> &[PowerLink] {
        &self.links
    }

    /// Resistance of one link; every link uses the same cable.
    pub fn link_resistance(&self) -> f64 {
        self.cable.resistivity * self.cable.link_length_m / self.cable.cross_section_mm2
    }

    pub fn position(&self, id: BsId) -> GridPos {
        GridPos::new(id.0 / self.cols, id.0 % self.cols)
    }

    pub fn id_at(&self, pos: GridPos) -> BsId {
        BsId(pos.row * self.cols + pos.col)
    }

    pub fn contains(&self, pos: GridPos) -> bool {
        pos.row < self.rows && pos.col < self.cols
    }

    fn check(&self, pos: GridPos) -> Result<()> {
        if self.contains(pos) {
            Ok(())
        } else {
            Err(Error::OutOfBounds(pos, self.rows, self.cols))
        }
    }

    pub fn hop_count(&self, a: GridPos, b: GridPos) -> Result<usize> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.row.abs_diff(b.row) + a.col.abs_diff(b.col))
    }

    /// Shortest route that moves along the row axis first, then along columns.
    pub fn static_route(&self, a: GridPos, b: GridPos) -> Result<Route> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::EmptyRoute(a));
        }
        let mut hops = Vec::with_capacity(a.row.abs_diff(b.row) + a.col.abs_diff(b.col) + 1);
        let mut cur = a;
        hops.push(cur);
        while cur.row != b.row {
            cur.row = if cur.row < b.row { cur.row + 1 } else { cur.row - 1 };
            hops.push(cur);
        }
        while cur.col != b.col {
            cur.col = if cur.col < b.col { cur.col + 1 } else { cur.col - 1 };
            hops.push(cur);
        }
        Ok(Route { hops })
    }

    pub fn link_between(&self, a: GridPos, b: GridPos) -> Option<LinkId> {
        if !self.contains(a) || !self.contains(b) || a.row.abs_diff(b.row) + a.col.abs_diff(b.col) != 1 {
            return None;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // links are laid out per node: right neighbour then lower neighbour
        let mut id = 0;
        for row in 0..self.rows {
            for col in 0..self.cols {
                let here = GridPos::new(row, col);
                if col + 1 < self.cols {
                    if here == lo && hi.col == col + 1 {
                        return Some(id);
                    }
                    id += 1;
                }
                if row + 1 < self.rows {
                    if here == lo && hi.row == row + 1 {
                        return Some(id);
                    }
                    id += 1;
                }
            }
        }
        None
    }

    pub fn route_links(&self, route: &Route) -> Vec<LinkId> {
        route
            .hops
            .windows(2)
            .map(|w| self.link_between(w[0], w[1]).expect("route hops are adjacent"))
            .collect()
    }
}

/// Per-hop resistive loss at nominal link power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    per_hop_loss: f64,
}

impl LossModel {
    pub fn new(resistance_ohm: f64, link_power_w: f64, dc_voltage_v: f64) -> Result<Self> {
        let per_hop_loss = resistance_ohm * link_power_w / (dc_voltage_v * dc_voltage_v);
        if !(0.0..1.0).contains(&per_hop_loss) {
            return Err(Error::Config(format!(
                "per-hop loss {per_hop_loss} must lie in [0, 1)"
            )));
        }
        Ok(LossModel { per_hop_loss })
    }

    /// Nominal link power is one full mini-slot of capacity per mini-slot duration.
    pub fn for_grid(grid: &PpgGrid, phi_max_j: f64, mini_slot_duration_s: f64) -> Result<Self> {
        LossModel::new(
            grid.link_resistance(),
            phi_max_j / mini_slot_duration_s,
            grid.cable().dc_voltage_v,
        )
    }

    pub fn per_hop_loss(&self) -> f64 {
        self.per_hop_loss
    }

    pub fn delivered_fraction(&self, hops: usize) -> f64 {
        (1.0 - self.per_hop_loss).powi(hops as i32)
    }
}

/// TDM reservations per link, in mini-slot units within one slot.
#[derive(Debug, Clone, Default)]
pub struct LinkSchedule {
    reservations: Vec<Vec<Range<u32>>>,
}

impl LinkSchedule {
    pub fn new(link_count: usize) -> Self {
        LinkSchedule {
            reservations: vec![Vec::new(); link_count],
        }
    }

    pub fn is_free(&self, link: LinkId, range: &Range<u32>) -> bool {
        self.reservations[link]
            .iter()
            .all(|r| r.end <= range.start || range.end <= r.start)
    }

    pub fn reserve_link(&mut self, link: LinkId, range: Range<u32>) -> Result<()> {
        if range.is_empty() {
            return Err(Error::InputDomain(format!(
                "empty reservation {}..{} on link {link}",
                range.start, range.end
            )));
        }
        if !self.is_free(link, &range) {
            return Err(Error::LinkBusy {
                link,
                start: range.start,
                end: range.end,
            });
        }
        self.reservations[link].push(range);
        Ok(())
    }

    /// Returns whether a matching reservation was found.
    pub fn release_link(&mut self, link: LinkId, range: &Range<u32>) -> bool {
        let slots = &mut self.reservations[link];
        match slots.iter().position(|r| r == range) {
            Some(i) => {
                slots.swap_remove(i);
                true
            }
            None => false,
        }
    }

    pub fn active(&self, link: LinkId) -> &[Range<u32>] {
        &self.reservations[link]
    }

    pub fn is_idle(&self) -> bool {
        self.reservations.iter().all(Vec::is_empty)
    }

    pub fn clear(&mut self) {
        self.reservations.iter_mut().for_each(Vec::clear);
    }
}
