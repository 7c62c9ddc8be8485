//! Per-slot source to consumer allocation.
//!
//! Three policies share the same consumer ordering (stations serving
//! MEC-associated users first, then the rest, each by ascending id) and the
//! same running surplus ledger, so they differ only in how a source is picked:
//!
//! * [`Policy::Lyapunov`] splits sources by whether their deliverable energy
//!   covers the demand, takes the minimum-hop candidates of the covering set
//!   (or of the non-covering set when it is empty) and breaks hop ties with the
//!   drift-plus-penalty score `queue * consumption + lambda * delivered`.
//! * [`Policy::Radial`] looks at the 4-neighbourhood, then at distance two,
//!   and gives up after that.
//! * [`Policy::Random`] picks uniformly among all stations with surplus left.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{BsId, BsRole};
use crate::error::{Error, Result};
use crate::topology::{LossModel, PpgGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Lyapunov,
    Radial,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Lyapunov, Policy::Radial, Policy::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Lyapunov => "lyapunov",
            Policy::Radial => "radial",
            Policy::Random => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lyapunov" => Ok(Policy::Lyapunov),
            "radial" => Ok(Policy::Radial),
            "random" => Ok(Policy::Random),
            other => Err(Error::Config(format!(
                "unknown policy `{other}` (expected lyapunov, radial or random)"
            ))),
        }
    }
}

/// Drift-vs-penalty weight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ControlParam(f64);

impl ControlParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(ControlParam(lambda))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for ControlParam {
    fn default() -> Self {
        ControlParam(1.0)
    }
}

/// Virtual energy queue per station, kept apart from the physical buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    values: Vec<f64>,
}

impl VirtualQueues {
    pub fn new(n: usize) -> Self {
        VirtualQueues { values: vec![0.0; n] }
    }

    pub fn get(&self, id: BsId) -> f64 {
        self.values[id.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn update(&mut self, delivered_j: &[f64], beta_max_j: f64) {
        for (q, &v) in self.values.iter_mut().zip(delivered_j) {
            *q = queue_update(*q, v, beta_max_j);
        }
    }
}

pub fn queue_update(queue_j: f64, delivered_j: f64, beta_max_j: f64) -> f64 {
    (queue_j + delivered_j - beta_max_j).max(0.0)
}

pub fn p2_score(queue_j: f64, consumption_j: f64, lambda: ControlParam, delivered_j: f64) -> f64 {
    queue_j * consumption_j + lambda.value() * delivered_j
}

/// Stations currently serving MEC-associated users.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrioritySet(pub BTreeSet<BsId>);

impl PrioritySet {
    pub fn contains(&self, id: BsId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<BsId> for PrioritySet {
    fn from_iter<T: IntoIterator<Item = BsId>>(iter: T) -> Self {
        PrioritySet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationDecision {
    pub source: BsId,
    pub consumer: BsId,
    pub gross_j: f64,
    pub fraction: f64,
    pub hops: usize,
    /// The consumer gets less than its demand from this source.
    pub shortfall: bool,
}

impl AllocationDecision {
    pub fn delivered_j(&self) -> f64 {
        self.gross_j * self.fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: BsId,
    pub hops: usize,
    pub available_j: f64,
    pub fraction: f64,
}

impl Candidate {
    pub fn deliverable_j(&self) -> f64 {
        self.available_j * self.fraction
    }
}

/// What the allocator sees in one slot.
#[derive(Debug, Clone, Copy)]
pub struct AllocationInput<'a> {
    pub grid: &'a PpgGrid,
    pub loss: &'a LossModel,
    pub roles: &'a [BsRole],
    /// Expected consumption per station this slot, used by the drift term.
    pub consumption_j: &'a [f64],
}

/// Surplus still available per station as decisions are taken within a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusLedger {
    remaining: Vec<f64>,
}

impl SurplusLedger {
    pub fn from_roles(roles: &[BsRole]) -> Self {
        SurplusLedger {
            remaining: roles.iter().map(BsRole::surplus_j).collect(),
        }
    }

    pub fn remaining(&self, id: BsId) -> f64 {
        self.remaining[id.0]
    }

    pub fn debit(&mut self, id: BsId, gross_j: f64) {
        let r = &mut self.remaining[id.0];
        *r = (*r - gross_j).max(0.0);
    }

    pub fn sources(&self) -> impl Iterator<Item = BsId> + '_ {
        self.remaining
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(i, _)| BsId(i))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AllocationOutcome {
    pub order: Vec<BsId>,
    pub decisions: Vec<AllocationDecision>,
    /// Consumers that found no source at all.
    pub outages: Vec<BsId>,
}

/// Consumers in processing order: priority members first, each group by id.
pub fn consumer_order(roles: &[BsRole], priority: &PrioritySet) -> Vec<BsId> {
    let consumers = roles
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r, BsRole::Consumer { .. }))
        .map(|(i, _)| BsId(i));
    let (mut first, rest): (Vec<_>, Vec<_>) = consumers.partition(|id| priority.contains(*id));
    first.extend(rest);
    first
}

fn candidate(input: &AllocationInput<'_>, ledger: &SurplusLedger, source: BsId, consumer: BsId) -> Candidate {
    let hops = input
        .grid
        .hop_count(input.grid.position(source), input.grid.position(consumer))
        .expect("station ids map onto the grid");
    Candidate {
        id: source,
        hops,
        available_j: ledger.remaining(source),
        fraction: input.loss.delivered_fraction(hops),
    }
}

/// Sources whose deliverable energy covers `demand_j`, and those that fall
/// short, each ordered by hop count then id.
pub fn eligible_sources(
    input: &AllocationInput<'_>,
    ledger: &SurplusLedger,
    consumer: BsId,
    demand_j: f64,
) -> (Vec<Candidate>, Vec<Candidate>) {
    let (mut covering, mut short): (Vec<_>, Vec<_>) = ledger
        .sources()
        .filter(|&s| s != consumer)
        .map(|s| candidate(input, ledger, s, consumer))
        .partition(|c| c.deliverable_j() >= demand_j);
    covering.sort_by_key(|c| (c.hops, c.id));
    short.sort_by_key(|c| (c.hops, c.id));
    (covering, short)
}

/// Gross amount that delivers `demand_j` after losses, capped by what the source has.
fn grant(c: &Candidate, consumer: BsId, demand_j: f64) -> AllocationDecision {
    let needed = demand_j / c.fraction;
    let gross_j = needed.min(c.available_j);
    AllocationDecision {
        source: c.id,
        consumer,
        gross_j,
        fraction: c.fraction,
        hops: c.hops,
        shortfall: gross_j < needed,
    }
}

fn min_p2<'c>(
    tied: impl Iterator<Item = &'c Candidate>,
    queue_j: f64,
    consumption_j: f64,
    lambda: ControlParam,
    delivered: impl Fn(&Candidate) -> f64,
) -> Option<&'c Candidate> {
    let mut best: Option<(&Candidate, f64)> = None;
    for c in tied {
        let score = p2_score(queue_j, consumption_j, lambda, delivered(c));
        match best {
            Some((_, s)) if score >= s => {}
            _ => best = Some((c, score)),
        }
    }
    best.map(|(c, _)| c)
}

/// Source choice for one consumer under the drift-plus-penalty rule.
pub fn lyapunov_choose(
    input: &AllocationInput<'_>,
    ledger: &SurplusLedger,
    queues: &VirtualQueues,
    lambda: ControlParam,
    consumer: BsId,
    demand_j: f64,
) -> Option<AllocationDecision> {
    let (covering, short) = eligible_sources(input, ledger, consumer, demand_j);
    let (queue, consumption) = (queues.get(consumer), input.consumption_j[consumer.0]);
    if let Some(first) = covering.first() {
        let tied = covering.iter().take_while(|c| c.hops == first.hops);
        let chosen = min_p2(tied, queue, consumption, lambda, |_| demand_j)?;
        let mut d = grant(chosen, consumer, demand_j);
        d.shortfall = false;
        return Some(d);
    }
    let first = short.first()?;
    let tied = short.iter().take_while(|c| c.hops == first.hops);
    let chosen = min_p2(tied, queue, consumption, lambda, Candidate::deliverable_j)?;
    Some(AllocationDecision {
        source: chosen.id,
        consumer,
        gross_j: chosen.available_j,
        fraction: chosen.fraction,
        hops: chosen.hops,
        shortfall: true,
    })
}

pub fn lyapunov_allocate(
    input: &AllocationInput<'_>,
    priority: &PrioritySet,
    queues: &VirtualQueues,
    lambda: ControlParam,
) -> AllocationOutcome {
    run_consumers(input, priority, |ledger, consumer, demand| {
        lyapunov_choose(input, ledger, queues, lambda, consumer, demand)
    })
}

/// Nearest ring (distance one, then two) that holds a source; lowest id wins.
pub fn radial_allocate(
    input: &AllocationInput<'_>,
    ledger: &SurplusLedger,
    consumer: BsId,
    demand_j: f64,
) -> Option<AllocationDecision> {
    (1..=2).find_map(|ring| {
        ledger
            .sources()
            .map(|s| candidate(input, ledger, s, consumer))
            .find(|c| c.hops == ring)
            .map(|c| grant(&c, consumer, demand_j))
    })
}

pub fn random_allocate<R: Rng + ?Sized>(
    input: &AllocationInput<'_>,
    ledger: &SurplusLedger,
    consumer: BsId,
    demand_j: f64,
    rng: &mut R,
) -> Option<AllocationDecision> {
    let sources: Vec<BsId> = ledger.sources().filter(|&s| s != consumer).collect();
    if sources.is_empty() {
        return None;
    }
    let pick = sources[rng.gen_range(0..sources.len())];
    Some(grant(&candidate(input, ledger, pick, consumer), consumer, demand_j))
}

fn run_consumers(
    input: &AllocationInput<'_>,
    priority: &PrioritySet,
    mut choose: impl FnMut(&SurplusLedger, BsId, f64) -> Option<AllocationDecision>,
) -> AllocationOutcome {
    let mut ledger = SurplusLedger::from_roles(input.roles);
    let order = consumer_order(input.roles, priority);
    let mut outcome = AllocationOutcome::default();
    for &consumer in &order {
        let demand = input.roles[consumer.0].demand_j();
        match choose(&ledger, consumer, demand) {
            Some(d) if d.gross_j > 0.0 => {
                ledger.debit(d.source, d.gross_j);
                outcome.decisions.push(d);
            }
            _ => outcome.outages.push(consumer),
        }
    }
    outcome.order = order;
    outcome
}

/// One slot of allocation under any policy. `rng` is only drawn from by
/// the random benchmark.
pub fn allocate<R: Rng + ?Sized>(
    policy: Policy,
    input: &AllocationInput<'_>,
    priority: &PrioritySet,
    queues: &VirtualQueues,
    lambda: ControlParam,
    rng: &mut R,
) -> AllocationOutcome {
    match policy {
        Policy::Lyapunov => lyapunov_allocate(input, priority, queues, lambda),
        Policy::Radial => run_consumers(input, priority, |ledger, c, d| radial_allocate(input, ledger, c, d)),
        Policy::Random => run_consumers(input, priority, |ledger, c, d| random_allocate(input, ledger, c, d, rng)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyBoundReport {
    pub slots: usize,
    /// Time average of delivered energy per slot.
    pub lhs_j: f64,
    pub v_star_j: f64,
    /// `None` when lambda is zero and the bound is undefined.
    pub rhs: Option<f64>,
}

impl PenaltyBoundReport {
    pub fn violated(&self) -> bool {
        matches!(self.rhs, Some(rhs) if self.lhs_j > rhs)
    }

    pub fn status(&self) -> &'static str {
        match self.rhs {
            None => "skipped (lambda = 0)",
            Some(_) if self.violated() => "bound exceeded",
            Some(_) => "within bound",
        }
    }
}

/// Empirical check of the time-average penalty bound. `mean_queues` holds each
/// station's queue averaged over the run.
pub fn penalty_bound_report(
    delivered_history_j: &[f64],
    mean_queues_j: &[f64],
    lambda: ControlParam,
    beta_max_j: f64,
    v_star_j: f64,
) -> Result<PenaltyBoundReport> {
    if delivered_history_j.is_empty() {
        return Err(Error::InputDomain("bound report needs at least one slot".into()));
    }
    let slots = delivered_history_j.len();
    let lhs_j = delivered_history_j.iter().sum::<f64>() / slots as f64;
    let rhs = (lambda.value() > 0.0).then(|| {
        let gap = mean_queues_j.iter().sum::<f64>() - beta_max_j;
        v_star_j + gap * gap / (2.0 * lambda.value())
    });
    Ok(PenaltyBoundReport {
        slots,
        lhs_j,
        v_star_j,
        rhs,
    })
}
