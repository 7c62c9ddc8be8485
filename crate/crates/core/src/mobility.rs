//! Reference-point group mobility on a two-lane highway running along the
//! grid's long axis. Each group is one vehicle with users on board; the
//! vehicle's reference point decides which station serves it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::Rng;

use crate::allocation::PrioritySet;
use crate::domain::BsId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist2(&self, other: &Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Highway {
    /// Length of the wrap-around axis.
    pub length_m: f64,
    /// Centre line of each lane.
    pub lane_y_m: [f64; 2],
    pub offset_radius_m: f64,
    pub speed_range_mps: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VueGroup {
    pub group_id: usize,
    pub reference: Point,
    /// Signed speed along the highway; lane 0 drives towards +x.
    pub velocity_mps: f64,
    pub lane: usize,
    pub member_offsets: Vec<Point>,
}

impl VueGroup {
    pub fn members(&self) -> impl Iterator<Item = Point> + '_ {
        self.member_offsets.iter().map(|o| Point {
            x: self.reference.x + o.x,
            y: self.reference.y + o.y,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationSnapshot {
    pub slot_index: usize,
    /// Serving station per group, in group order.
    pub serving: Vec<BsId>,
    pub set: BTreeSet<BsId>,
}

impl AssociationSnapshot {
    pub fn priority(&self) -> PrioritySet {
        self.set.iter().copied().collect()
    }
}

fn draw_offset<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    // uniform over the disc
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen::<f64>() * TAU;
    Point {
        x: r * a.cos(),
        y: r * a.sin(),
    }
}

pub fn spawn_groups<R: Rng + ?Sized>(count: usize, members: usize, highway: &Highway, rng: &mut R) -> Vec<VueGroup> {
    let (lo, hi) = highway.speed_range_mps;
    (0..count)
        .map(|group_id| {
            let lane = rng.gen_range(0..2);
            let speed = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let x = rng.gen::<f64>() * highway.length_m;
            VueGroup {
                group_id,
                reference: Point { x, y: highway.lane_y_m[lane] },
                velocity_mps: if lane == 0 { speed } else { -speed },
                lane,
                member_offsets: (0..members).map(|_| draw_offset(highway.offset_radius_m, rng)).collect(),
            }
        })
        .collect()
}

/// Advances one slot: the reference point moves `velocity * tau` and wraps at
/// the highway ends, members get fresh offsets within the group radius.
pub fn rpgm_step<R: Rng + ?Sized>(group: &VueGroup, tau_s: f64, highway: &Highway, rng: &mut R) -> VueGroup {
    let x = (group.reference.x + group.velocity_mps * tau_s).rem_euclid(highway.length_m);
    VueGroup {
        reference: Point { x, ..group.reference },
        member_offsets: group
            .member_offsets
            .iter()
            .map(|_| draw_offset(highway.offset_radius_m, rng))
            .collect(),
        ..group.clone()
    }
}

/// Nearest station per group (lowest id on ties) and their union.
pub fn association_set(slot_index: usize, groups: &[VueGroup], bs_positions: &[Point]) -> AssociationSnapshot {
    let serving: Vec<BsId> = groups
        .iter()
        .map(|g| {
            let mut best = (0, f64::INFINITY);
            for (i, p) in bs_positions.iter().enumerate() {
                let d = g.reference.dist2(p);
                if d < best.1 {
                    best = (i, d);
                }
            }
            BsId(best.0)
        })
        .collect();
    let set = serving.iter().copied().collect();
    AssociationSnapshot {
        slot_index,
        serving,
        set,
    }
}
