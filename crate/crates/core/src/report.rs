//! Output files for a run: per-station and per-slot metrics, the transfer
//! audit, the summary, and delimited series for plotting.
//!
//! Floats are written with Rust's shortest round-trip formatting, so two runs
//! with the same inputs produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SimConfig;
use crate::engine::{RunOutput, SlotMetrics, Summary};
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_station_metrics<W: Write>(out: W, metrics: &[SlotMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "slot",
        "bs",
        "role",
        "level_start_j",
        "post_coop_j",
        "level_end_j",
        "queue_j",
        "demand_j",
        "received_j",
        "sent_gross_j",
        "flow_j",
        "purchased_j",
        "harvested_j",
        "consumed_j",
        "spilled_j",
        "shortfall_j",
    ])?;
    for m in metrics {
        for s in &m.stations {
            w.write_record([
                m.slot.to_string(),
                s.id.to_string(),
                s.role.label().to_string(),
                s.level_start_j.to_string(),
                s.post_coop_j.to_string(),
                s.level_end_j.to_string(),
                s.queue_j.to_string(),
                s.role.demand_j().to_string(),
                s.received_j.to_string(),
                s.sent_gross_j.to_string(),
                s.flow_j.to_string(),
                s.purchased_j.to_string(),
                s.harvested_j.to_string(),
                s.consumed_j.to_string(),
                s.spilled_j.to_string(),
                s.shortfall_j.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<metrics>", e))
}

pub fn write_slot_metrics<W: Write>(out: W, metrics: &[SlotMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "slot",
        "associated",
        "consumers",
        "outages",
        "shortfall_decisions",
        "jobs",
        "overruns",
        "demand_j",
        "delivered_j",
        "gross_j",
        "purchased_j",
        "mean_level_j",
    ])?;
    for m in metrics {
        let assoc = m.associated.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([
            m.slot.to_string(),
            assoc,
            m.consumers.to_string(),
            m.outages.to_string(),
            m.shortfall_decisions.to_string(),
            m.jobs.len().to_string(),
            m.overruns.to_string(),
            m.demand_j.to_string(),
            m.delivered_j.to_string(),
            m.gross_j.to_string(),
            m.purchased_j.to_string(),
            m.mean_level_j().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<slots>", e))
}

pub fn write_audit<W: Write>(out: W, metrics: &[SlotMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in metrics.iter().flat_map(|m| &m.audit) {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<audit>", e))
}

pub fn write_trajectory<W: Write>(out: W, metrics: &[SlotMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "group", "x_m", "y_m"])?;
    for m in metrics {
        for (g, p) in m.vue_positions.iter().enumerate() {
            w.write_record([m.slot.to_string(), g.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trajectory>", e))
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    summary: &'a Summary,
    config: &'a SimConfig,
}

/// `[summary]` followed by the full `[config]` that produced it.
pub fn summary_toml(summary: &Summary, config: &SimConfig) -> String {
    toml::to_string(&SummaryDoc { summary, config }).expect("summary serialises")
}

/// Reads the `[config]` table back out of a summary file.
pub fn config_from_summary(text: &str) -> Result<SimConfig> {
    #[derive(serde::Deserialize)]
    struct Doc {
        config: SimConfig,
    }
    let doc: Doc = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    doc.config.validate()?;
    Ok(doc.config)
}

/// Writes every artefact of a single run into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput, trajectory: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        f(&mut w)?;
        finish(w, &path)?;
        written.push(path);
        Ok(())
    };
    emit("metrics.csv", &|w| write_station_metrics(w, &out.metrics))?;
    emit("slots.csv", &|w| write_slot_metrics(w, &out.metrics))?;
    emit("audit.csv", &|w| write_audit(w, &out.metrics))?;
    if trajectory {
        emit("trajectory.csv", &|w| write_trajectory(w, &out.metrics))?;
    }
    emit("summary.toml", &|w| {
        w.write_all(summary_toml(&out.summary, &out.config).as_bytes())
            .map_err(|e| Error::io("summary.toml", e))
    })?;
    Ok(written)
}

/// One row per bucket of `bucket_slots` slots: mean demand and mean delivered
/// energy per slot within the bucket.
pub fn delivered_series(metrics: &[SlotMetrics], bucket_slots: usize) -> Vec<(usize, f64, f64)> {
    let bucket_slots = bucket_slots.max(1);
    metrics
        .chunks(bucket_slots)
        .enumerate()
        .map(|(i, c)| {
            let k = c.len() as f64;
            let demand = c.iter().map(|m| m.demand_j).sum::<f64>() / k;
            let delivered = c.iter().map(|m| m.delivered_j).sum::<f64>() / k;
            (i, demand, delivered)
        })
        .collect()
}

/// Delivered-energy series of several runs next to one demand series.
///
/// The demand column comes from the first run; with a shared seed every
/// policy starts from the same state, but demand drifts apart once the
/// policies diverge.
pub fn emit_plot_data<W: Write>(out: W, runs: &[RunOutput], bucket_slots: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["bucket".to_string(), "demand_j".to_string()];
    header.extend(runs.iter().map(|r| format!("delivered_{}", r.summary.policy)));
    w.write_record(&header)?;
    let series: Vec<_> = runs.iter().map(|r| delivered_series(&r.metrics, bucket_slots)).collect();
    let rows = series.first().map_or(0, Vec::len);
    for i in 0..rows {
        let mut rec = vec![i.to_string(), series[0][i].1.to_string()];
        rec.extend(series.iter().map(|s| s[i].2.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<plot>", e))
}

/// Mean buffer level against the control weight.
pub fn emit_lambda_table<W: Write>(out: W, runs: &[RunOutput]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "mean_eb_j", "mean_eb_pct", "delivered_j", "coverage_pct"])?;
    for r in runs {
        let s = &r.summary;
        w.write_record([
            s.lambda.to_string(),
            s.mean_eb_j.to_string(),
            s.mean_eb_pct.to_string(),
            s.total_delivered_j.to_string(),
            s.demand_coverage_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<lambda>", e))
}

pub fn emit_summary_table<W: Write>(out: W, runs: &[RunOutput]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "policy",
        "lambda",
        "demand_j",
        "delivered_j",
        "coverage_pct",
        "outages",
        "unmet_demand_slots",
        "mean_eb_pct",
        "min_offgrid_post_coop_j",
    ])?;
    for r in runs {
        let s = &r.summary;
        w.write_record([
            s.policy.to_string(),
            s.lambda.to_string(),
            s.total_demand_j.to_string(),
            s.total_delivered_j.to_string(),
            s.demand_coverage_pct.to_string(),
            s.outages.to_string(),
            s.unmet_demand_slots.to_string(),
            s.mean_eb_pct.to_string(),
            s.min_offgrid_post_coop_j.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))
}

/// Writes a file through `f`, creating parent directories.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = create(path)?;
    f(&mut w)?;
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;

    fn short_run(policy: crate::allocation::Policy) -> RunOutput {
        run(&SimConfig {
            horizon_slots: 120,
            policy,
            ..SimConfig::reference()
        })
        .unwrap()
    }

    #[test]
    fn hourly_buckets() {
        let out = short_run(crate::allocation::Policy::Lyapunov);
        let s = delivered_series(&out.metrics, 60);
        assert_eq!(s.len(), 2);
        let total: f64 = out.metrics[..60].iter().map(|m| m.delivered_j).sum();
        assert!((s[0].2 * 60.0 - total).abs() < 1e-6);
    }

    #[test]
    fn summary_round_trips_config() {
        let out = short_run(crate::allocation::Policy::Radial);
        let text = summary_toml(&out.summary, &out.config);
        assert!(text.starts_with("[summary]"));
        assert_eq!(config_from_summary(&text).unwrap(), out.config);
    }

    #[test]
    fn plot_data_has_one_column_per_run() {
        let runs = vec![
            short_run(crate::allocation::Policy::Lyapunov),
            short_run(crate::allocation::Policy::Random),
        ];
        let mut buf = Vec::new();
        emit_plot_data(&mut buf, &runs, 60).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "bucket,demand_j,delivered_lyapunov,delivered_random");
        assert_eq!(lines.len(), 3);
    }
}
