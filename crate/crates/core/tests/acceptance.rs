//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report prints in order; exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use enercoop_core::allocation::{
    lyapunov_choose, p2_score, queue_update, AllocationInput, ControlParam, SurplusLedger, VirtualQueues,
};
use enercoop_core::domain::{eb_step_offgrid, eb_step_ongrid, grid_purchase, BsRole, EnergyBuffer};
use enercoop_core::topology::line_resistance;
use enercoop_core::transfer::mini_slot_count;
use enercoop_core::{compare, report, run, sweep_lambda, BsId, Policy, RunOutput, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUZZ_CASES: usize = 10_000;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn reference() -> SimConfig {
    SimConfig::load(&repo_path("configs/reference.toml")).expect("reference config loads")
}

/// Random level with a fair share of exact boundary values.
fn level(rng: &mut ChaCha8Rng, b: &EnergyBuffer) -> f64 {
    match rng.gen_range(0..8) {
        0 => 0.0,
        1 => b.capacity_j,
        2 => b.low_threshold_j,
        3 => b.up_threshold_j,
        _ => rng.gen_range(0.0..=b.capacity_j),
    }
}

fn equation_oracles() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut mismatches = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if got.to_bits() != want.to_bits() {
            mismatches.push(format!("{name}: got {got}, oracle {want}"));
        }
    };
    for _ in 0..FUZZ_CASES {
        let cap = rng.gen_range(1.0..1e7);
        let b = EnergyBuffer::from_percent(cap, rng.gen_range(0.0..50.0), rng.gen_range(50.0..100.0), 0.5).unwrap();
        let b = b.with_level(level(&mut rng, &b));
        let (h, c, g, e) = (
            rng.gen_range(0.0..cap),
            rng.gen_range(0.0..cap),
            rng.gen_range(-cap..cap),
            rng.gen_range(0.0..cap),
        );
        let clip = |r: f64| if r < 0.0 { 0.0 } else if r > cap { cap } else { r };
        check("eb_step_offgrid", eb_step_offgrid(b, h, c, g).level_j, clip(b.level_j + h - c + g));
        check("eb_step_ongrid", eb_step_ongrid(b, h, c, g, e).level_j, clip(b.level_j + h - c + g + e));
        check(
            "grid_purchase",
            grid_purchase(&b),
            if b.level_j < b.up_threshold_j { b.up_threshold_j - b.level_j } else { 0.0 },
        );

        let (q, v, bmax) = (rng.gen_range(0.0..1e6), rng.gen_range(0.0..1e6), rng.gen_range(0.0..1e6));
        let r = q + v - bmax;
        check("queue_update", queue_update(q, v, bmax), if r > 0.0 { r } else { 0.0 });

        let lam = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..10.0) };
        let theta = rng.gen_range(0.0..1e5);
        check("p2_score", p2_score(q, theta, ControlParam::new(lam).unwrap(), v), q * theta + lam * v);

        let (rho, l, a) = (rng.gen_range(1e-3..1.0), rng.gen_range(1.0..1e3), rng.gen_range(0.5..100.0));
        check("line_resistance", line_resistance(rho, l, a).unwrap(), rho * l / a);

        let phi = rng.gen_range(1e3..2e5);
        let delivered = match rng.gen_range(0..4) {
            0 => phi * f64::from(rng.gen_range(0..20u32)),
            _ => rng.gen_range(0.0..2e6),
        };
        let brute = (0u32..).find(|&y| f64::from(y) * phi >= delivered).unwrap();
        let got = mini_slot_count(delivered, phi).unwrap();
        if got != brute {
            check("mini_slot_count", f64::from(got), f64::from(brute));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches.is_empty() && elapsed < Duration::from_secs(5),
        format!(
            "{} cases x 7 functions, {} mismatches{}, {:.2?}",
            FUZZ_CASES,
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            elapsed
        ),
    )
}

fn ulps(a: f64, b: f64) -> u64 {
    a.to_bits().abs_diff(b.to_bits())
}

fn baseline_constants() -> Verdict {
    let cfg = SimConfig::load(&repo_path("configs/baseline.toml")).expect("baseline config loads");
    let d = cfg.derived().expect("derived constants");
    let ok = ulps(d.link_resistance_ohm, 0.23) <= 1
        && d.beta_low_j == 147_000.0
        && d.beta_up_j == 343_000.0
        && d.mini_slots_per_slot == 12
        && d.max_feasible_mini_slots == 11
        && d.max_feasible_occupancy_s == 57.0
        && d.max_feasible_occupancy_s <= cfg.deadline_s
        && cfg.deadline_s == 60.0
        && cfg == SimConfig::default();
    verdict(
        ok,
        format!(
            "resistance {} ohm ({} ulp from 0.23), low {} J, up {} J, {} mini-slots, max y {} (j = {} s <= {} s)",
            d.link_resistance_ohm,
            ulps(d.link_resistance_ohm, 0.23),
            d.beta_low_j,
            d.beta_up_j,
            d.mini_slots_per_slot,
            d.max_feasible_mini_slots,
            d.max_feasible_occupancy_s,
            cfg.deadline_s
        ),
    )
}

fn deadline_property(runs: &[RunOutput], elapsed: Duration) -> Verdict {
    let deadline = runs[0].config.deadline_s;
    let mut jobs = 0;
    let mut overruns = 0;
    let mut bad = Vec::new();
    for r in runs {
        for m in &r.metrics {
            for j in &m.jobs {
                jobs += 1;
                let is_overrun = j.status == enercoop_core::transfer::JobStatus::Overrun;
                if !is_overrun && j.occupancy_s > deadline {
                    bad.push(format!("{} slot {} job {}: {} s", r.summary.policy, m.slot, j.id, j.occupancy_s));
                }
                if is_overrun {
                    overruns += 1;
                    let logged = m.audit.iter().any(|a| a.job_id == j.id && a.overrun);
                    let explained = j.decision.shortfall || j.start_mini_slot > 0;
                    if !logged || !explained {
                        bad.push(format!("{} slot {} job {}: unexplained overrun", r.summary.policy, m.slot, j.id));
                    }
                }
            }
        }
    }
    verdict(
        bad.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "{jobs} jobs over 3 policies, {overruns} overruns, {} violations, {:.2?}",
            bad.len(),
            elapsed
        ),
    )
}

fn tdm_exclusivity(runs: &[RunOutput]) -> Verdict {
    let mut rows = 0;
    let mut collisions = 0;
    for r in runs {
        let mut by_link: BTreeMap<(usize, usize), Vec<(u32, u32)>> = BTreeMap::new();
        for a in r.metrics.iter().flat_map(|m| &m.audit) {
            rows += 1;
            by_link.entry((a.slot, a.link)).or_default().push((a.start_mini_slot, a.end_mini_slot));
        }
        for spans in by_link.values() {
            for (i, x) in spans.iter().enumerate() {
                collisions += spans[i + 1..].iter().filter(|y| x.0 < y.1 && y.0 < x.1).count();
            }
        }
        collisions += enercoop_core::transfer::audit_collisions(&r.metrics.iter().flat_map(|m| m.audit.clone()).collect::<Vec<_>>()).len();
    }
    verdict(collisions == 0, format!("{rows} audit rows, {collisions} collisions"))
}

fn conservation(runs: &[RunOutput]) -> Verdict {
    let mut worst = 0.0f64;
    let mut positive = 0;
    let mut slots = 0;
    for r in runs {
        for m in &r.metrics {
            slots += 1;
            let received: f64 = m.stations.iter().map(|s| s.received_j).sum();
            let expected: f64 = m.decisions.iter().map(|d| d.gross_j * d.fraction).sum();
            let rel = (received - expected).abs() / expected.abs().max(1.0);
            worst = worst.max(rel);
            if m.stations.iter().map(|s| s.flow_j).sum::<f64>() > 0.0 {
                positive += 1;
            }
        }
    }
    verdict(
        worst <= 1e-9 && positive == 0,
        format!("{slots} slots, worst relative gap {worst:e}, {positive} slots with net positive flow"),
    )
}

fn c2_and_ordering(runs: &[RunOutput]) -> Verdict {
    let (l, ra, rn) = (&runs[0], &runs[1], &runs[2]);
    let low = l.config.initial_buffer().unwrap().low_threshold_j;
    let off_grid = |id: BsId| !l.config.is_on_grid(id);
    // levels after this slot's transfers land
    let min_post = l
        .metrics
        .iter()
        .flat_map(|m| &m.stations)
        .filter(|s| off_grid(s.id))
        .map(|s| s.post_coop_j)
        .fold(f64::INFINITY, f64::min);
    let min_start = l
        .metrics
        .iter()
        .flat_map(|m| &m.stations)
        .filter(|s| off_grid(s.id))
        .map(|s| s.level_start_j)
        .fold(f64::INFINITY, f64::min);
    let full = |r: &RunOutput| r.summary.total_delivered_j >= r.summary.total_demand_j * (1.0 - 1e-12);
    let (sl, sra, srn) = (&l.summary, &ra.summary, &rn.summary);
    let ok = min_post >= low - 1e-6
        && full(l)
        && sl.unmet_demand_slots == 0
        && sra.unmet_demand_slots >= 1
        && srn.unmet_demand_slots >= 1
        && sl.total_delivered_j >= sra.total_delivered_j
        && sra.total_delivered_j >= srn.total_delivered_j
        && !full(ra)
        && !full(rn)
        && sra.demand_coverage_pct < 100.0
        && srn.demand_coverage_pct < 100.0;
    verdict(
        ok,
        format!(
            "lyapunov min level after transfers {min_post} J (start-of-slot min {min_start} J, low {low} J); \
             delivered {:.0} >= {:.0} >= {:.0} J; coverage {:.3}% / {:.3}% / {:.3}%; unmet slots {} / {} / {}",
            sl.total_delivered_j,
            sra.total_delivered_j,
            srn.total_delivered_j,
            sl.demand_coverage_pct,
            sra.demand_coverage_pct,
            srn.demand_coverage_pct,
            sl.unmet_demand_slots,
            sra.unmet_demand_slots,
            srn.unmet_demand_slots
        ),
    )
}

fn min_hop_optimality() -> Verdict {
    let cfg = SimConfig::default();
    let grid = cfg.grid().unwrap();
    let loss = cfg.loss_model(&grid).unwrap();
    let lam = loss.per_hop_loss();
    let n = cfg.station_count();
    let mut rng = ChaCha8Rng::seed_from_u64(0x3170);
    let (mut covered, mut short, mut bad) = (0, 0, Vec::new());
    for case in 0..1_000 {
        let mut roles: Vec<BsRole> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => BsRole::Source {
                    surplus_j: rng.gen_range(1.0..147_000.0),
                },
                1 => BsRole::Consumer {
                    demand_j: rng.gen_range(1.0..147_000.0),
                },
                _ => BsRole::Neutral,
            })
            .collect();
        let consumer = rng.gen_range(0..n);
        let demand = rng.gen_range(1.0..100_000.0);
        roles[consumer] = BsRole::Consumer { demand_j: demand };
        let consumption: Vec<f64> = (0..n).map(|_| rng.gen_range(6_000.0..24_000.0)).collect();
        let input = AllocationInput {
            grid: &grid,
            loss: &loss,
            roles: &roles,
            consumption_j: &consumption,
        };
        let ledger = SurplusLedger::from_roles(&roles);
        let queues = VirtualQueues::new(n);
        let lambda = ControlParam::new(rng.gen_range(0.0..2.0)).unwrap();
        let decision = lyapunov_choose(&input, &ledger, &queues, lambda, BsId(consumer), demand);

        let (cr, cc) = (consumer / cfg.grid_cols, consumer % cfg.grid_cols);
        let best = roles
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                BsRole::Source { surplus_j } => {
                    let mu = (i / cfg.grid_cols).abs_diff(cr) + (i % cfg.grid_cols).abs_diff(cc);
                    (surplus_j * (1.0 - lam).powi(mu as i32) >= demand).then_some(mu)
                }
                _ => None,
            })
            .min();
        match (best, decision) {
            (Some(mu), Some(d)) if d.hops == mu && !d.shortfall => covered += 1,
            (None, Some(d)) if d.shortfall => short += 1,
            (None, None) if !roles.iter().any(|r| matches!(r, BsRole::Source { .. })) => short += 1,
            (b, d) => bad.push(format!("case {case}: brute {b:?}, chosen {:?}", d.map(|d| (d.hops, d.shortfall)))),
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "1000 cases: {covered} matched the brute-force minimum, {short} had no covering source, {} mismatches{}",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn lambda_insensitivity() -> Verdict {
    let start = Instant::now();
    let values = [0.2, 0.4, 0.6, 0.8, 1.0];
    let runs = sweep_lambda(&reference(), &values).expect("sweep runs");
    let means: Vec<f64> = runs.iter().map(|r| r.summary.mean_eb_j).collect();
    let (lo, hi) = means.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    let spread = (hi - lo) / avg;
    let elapsed = start.elapsed();
    verdict(
        spread <= 0.05 && elapsed < Duration::from_secs(60),
        format!(
            "mean level {:?} J, relative spread {:.4}%, {:.2?}",
            means.iter().map(|m| m.round()).collect::<Vec<_>>(),
            spread * 100.0,
            elapsed
        ),
    )
}

fn bound_diagnostic(runs: &[RunOutput]) -> Verdict {
    let l = &runs[0];
    let s = &l.summary;
    let t = l.metrics.len() as f64;
    let v_star_is_mean_demand = (s.bound_v_star_j - s.total_demand_j / t).abs() <= 1e-9 * s.bound_v_star_j.max(1.0);
    let emitted = report::summary_toml(s, &l.config);
    let ok = s.lambda == 1.0
        && v_star_is_mean_demand
        && s.bound_rhs.is_some_and(|rhs| s.bound_lhs_j <= rhs)
        && emitted.contains("bound_lhs_j")
        && emitted.contains("bound_rhs")
        && emitted.contains("bound_status");
    verdict(
        ok,
        format!(
            "lhs {} J, rhs {:?}, v* {} J, status \"{}\"",
            s.bound_lhs_j, s.bound_rhs, s.bound_v_star_j, s.bound_status
        ),
    )
}

fn determinism() -> Verdict {
    let cfg = reference();
    let dir = tempfile::tempdir().expect("temp dir");
    let mut times = Vec::new();
    let mut files = Vec::new();
    for name in ["first", "second"] {
        let start = Instant::now();
        let out = run(&cfg).expect("reference run");
        times.push(start.elapsed());
        files.push(report::write_run(&dir.path().join(name), &out, true).expect("outputs written"));
    }
    let mut differing = Vec::new();
    for (a, b) in files[0].iter().zip(&files[1]) {
        if std::fs::read(a).unwrap() != std::fs::read(b).unwrap() {
            differing.push(a.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let slowest = times.iter().max().copied().unwrap();
    verdict(
        differing.is_empty() && files[0].len() == files[1].len() && slowest < Duration::from_secs(10),
        format!(
            "{} files compared, {} differ {:?}, slowest full-day run {:.2?}",
            files[0].len(),
            differing.len(),
            differing,
            slowest
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = reference();
    let runs = compare(&cfg, &[Policy::Lyapunov, Policy::Radial, Policy::Random]).expect("reference runs");
    let reference_time = start.elapsed();

    let results = [
        ("equation oracles", equation_oracles()),
        ("baseline constants", baseline_constants()),
        ("transfer deadline", deadline_property(&runs, reference_time)),
        ("TDM exclusivity", tdm_exclusivity(&runs)),
        ("energy conservation", conservation(&runs)),
        ("threshold on reference scenario", c2_and_ordering(&runs)),
        ("min-hop optimality", min_hop_optimality()),
        ("control weight insensitivity", lambda_insensitivity()),
        ("penalty bound diagnostic", bound_diagnostic(&runs)),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("criterion {:>2} [{}] {name}: {}", i + 1, if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
