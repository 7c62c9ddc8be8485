//! Executes allocation decisions over the grid in TDM mini-slots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationDecision;
use crate::domain::{BsId, SimClock};
use crate::error::{Error, Result};
use crate::topology::{LinkId, LinkSchedule, PpgGrid, Route};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferParams {
    /// Energy one link carries per mini-slot.
    pub phi_max_j: f64,
    /// Processing and buffering delay added to every transfer.
    pub processing_delay_s: f64,
    /// Server response deadline.
    pub deadline_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Pending,
    Active,
    Done,
    /// Delivered anyway, but late: occupancy beyond the deadline or the
    /// reservation spilled past the slot's last mini-slot.
    Overrun,
}

impl JobStatus {
    pub fn label(&self) -> &'static str {
        match self {
            JobStatus::Pending => "pending",
            JobStatus::Active => "active",
            JobStatus::Done => "done",
            JobStatus::Overrun => "overrun",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferJob {
    pub id: usize,
    pub decision: AllocationDecision,
    pub route: Route,
    pub links: Vec<LinkId>,
    pub mini_slots: u32,
    pub start_mini_slot: u32,
    pub occupancy_s: f64,
    pub status: JobStatus,
}

impl TransferJob {
    pub fn end_mini_slot(&self) -> u32 {
        self.start_mini_slot + self.mini_slots
    }
}

/// One link reservation, as written to the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub slot: usize,
    pub job_id: usize,
    pub link: LinkId,
    pub start_mini_slot: u32,
    pub end_mini_slot: u32,
    pub source: BsId,
    pub consumer: BsId,
    pub hops: usize,
    pub mini_slots: u32,
    pub occupancy_s: f64,
    pub overrun: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferOutcome {
    /// Net energy per station this slot: positive for consumers.
    pub flows_j: Vec<f64>,
    pub jobs: Vec<TransferJob>,
    pub audit: Vec<AuditRow>,
}

impl TransferOutcome {
    pub fn overruns(&self) -> usize {
        self.jobs.iter().filter(|j| j.status == JobStatus::Overrun).count()
    }
}

pub fn mini_slot_count(delivered_j: f64, phi_max_j: f64) -> Result<u32> {
    if !(phi_max_j > 0.0) {
        return Err(Error::Config(format!("link capacity must be positive, got {phi_max_j}")));
    }
    if !(delivered_j >= 0.0) {
        return Err(Error::InputDomain(format!("delivered energy {delivered_j} is negative")));
    }
    // smallest y with y * phi >= delivered; the quotient can be off by one ulp
    let mut y = (delivered_j / phi_max_j).ceil();
    if y > 0.0 && (y - 1.0) * phi_max_j >= delivered_j {
        y -= 1.0;
    } else if y * phi_max_j < delivered_j {
        y += 1.0;
    }
    Ok(y as u32)
}

/// Seconds a transfer holds its links: whole mini-slots plus processing delay.
pub fn link_occupancy(mini_slots: u32, mini_slot_duration_s: u32, processing_delay_s: f64) -> f64 {
    f64::from(mini_slots * mini_slot_duration_s) + processing_delay_s
}

fn earliest_start(schedule: &LinkSchedule, links: &[LinkId], len: u32) -> u32 {
    let mut start = 0;
    loop {
        let range = start..start + len;
        match links
            .iter()
            .flat_map(|&l| schedule.active(l).iter())
            .filter(|r| r.start < range.end && range.start < r.end)
            .map(|r| r.end)
            .max()
        {
            None => return start,
            Some(end) => start = end,
        }
    }
}

/// Schedules every decision in order, serialising jobs that share a link,
/// credits consumers and debits sources. Links are free again on return.
pub fn execute_transfers(
    decisions: &[AllocationDecision],
    grid: &PpgGrid,
    clock: SimClock,
    params: &TransferParams,
    schedule: &mut LinkSchedule,
) -> Result<TransferOutcome> {
    let mut out = TransferOutcome {
        flows_j: vec![0.0; grid.node_count()],
        ..Default::default()
    };
    let capacity = clock.mini_slots_per_slot();

    for (id, d) in decisions.iter().enumerate() {
        let route = grid.static_route(grid.position(d.source), grid.position(d.consumer))?;
        let links = grid.route_links(&route);
        let delivered = d.delivered_j();
        let mini_slots = mini_slot_count(delivered, params.phi_max_j)?.max(1);
        let start = earliest_start(schedule, &links, mini_slots);
        for &l in &links {
            schedule.reserve_link(l, start..start + mini_slots)?;
        }
        let occupancy_s = link_occupancy(mini_slots, clock.mini_slot_duration_s, params.processing_delay_s);
        let late = occupancy_s > params.deadline_s || start + mini_slots > capacity;

        out.flows_j[d.consumer.0] += delivered;
        out.flows_j[d.source.0] -= d.gross_j;
        for &link in &links {
            out.audit.push(AuditRow {
                slot: clock.slot_index,
                job_id: id,
                link,
                start_mini_slot: start,
                end_mini_slot: start + mini_slots,
                source: d.source,
                consumer: d.consumer,
                hops: d.hops,
                mini_slots,
                occupancy_s,
                overrun: late,
            });
        }
        out.jobs.push(TransferJob {
            id,
            decision: *d,
            route,
            links,
            mini_slots,
            start_mini_slot: start,
            occupancy_s,
            status: if late { JobStatus::Overrun } else { JobStatus::Active },
        });
    }

    // release in completion order
    let mut finishing: Vec<&mut TransferJob> = out.jobs.iter_mut().collect();
    finishing.sort_by_key(|j| (j.end_mini_slot(), j.id));
    for job in finishing {
        let range = job.start_mini_slot..job.end_mini_slot();
        for &l in &job.links {
            schedule.release_link(l, &range);
        }
        if job.status == JobStatus::Active {
            job.status = JobStatus::Done;
        }
    }
    debug_assert!(schedule.is_idle());
    Ok(out)
}

/// Pairs of jobs whose reservations on the same link overlap within a slot.
pub fn audit_collisions(rows: &[AuditRow]) -> Vec<(usize, LinkId, usize, usize)> {
    let mut by_link: BTreeMap<(usize, LinkId), Vec<&AuditRow>> = BTreeMap::new();
    for r in rows {
        by_link.entry((r.slot, r.link)).or_default().push(r);
    }
    let mut hits = Vec::new();
    for ((slot, link), rs) in by_link {
        for (i, a) in rs.iter().enumerate() {
            for b in &rs[i + 1..] {
                if a.start_mini_slot < b.end_mini_slot && b.start_mini_slot < a.end_mini_slot {
                    hits.push((slot, link, a.job_id, b.job_id));
                }
            }
        }
    }
    hits
}
