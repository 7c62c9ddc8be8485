//! `enercoop` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors (bad flags,
//! bad config, malformed traces), 2 for runtime failures.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use enercoop_core::engine::synthetic_traces;
use enercoop_core::{ingest, report, Error, Policy, RunOutput, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "enercoop", version, about = "Energy cooperation simulator for energy-harvesting base stations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one policy and write metrics, audit log and summary.
    Run(RunArgs),
    /// Simulate several policies on the same scenario and seed.
    Compare(CompareArgs),
    /// Lyapunov runs over a list of control weights.
    SweepLambda(SweepArgs),
    /// Check harvest and cluster trace files against their schemas.
    ValidateTraces(ValidateArgs),
    /// Write seeded synthetic cluster and harvest traces.
    GenTraces(GenArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML); defaults to the built-in default scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon override, in slots.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<SimConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(h) = self.horizon {
            cfg.horizon_slots = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Allocation policy: lyapunov, radial or random.
    #[arg(long)]
    policy: Option<Policy>,
    /// Drift-plus-penalty weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Also write the vehicle reference points per slot.
    #[arg(long)]
    trajectory: bool,
    /// Aggregate the plot series to one row per hour.
    #[arg(long)]
    hourly: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated policies, in column order.
    #[arg(long, value_delimiter = ',', default_value = "lyapunov,radial,random")]
    policies: Vec<Policy>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    hourly: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated control weights.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1")]
    values: Vec<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Harvest trace: timestamp,solar,wind.
    #[arg(long)]
    harvest: Option<PathBuf>,
    /// Cluster profiles: slot,cluster0..cluster3.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Scenario whose slot length and horizon the traces must fit.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "traces")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Days of harvest samples.
    #[arg(long, default_value_t = 1)]
    days: usize,
    /// Harvest sample period in seconds.
    #[arg(long, default_value_t = 60.0)]
    sample_period: f64,
}

fn bucket(cfg: &SimConfig, hourly: bool) -> usize {
    if hourly {
        (3_600 / cfg.slot_duration_s.max(1)).max(1) as usize
    } else {
        1
    }
}

fn print_summary(out: &RunOutput) {
    let s = &out.summary;
    println!(
        "{:<9} lambda={} delivered={:.0} J demand={:.0} J coverage={:.2}% unmet_slots={} mean_eb={:.2}% bound={}",
        s.policy,
        s.lambda,
        s.total_delivered_j,
        s.total_demand_j,
        s.demand_coverage_pct,
        s.unmet_demand_slots,
        s.mean_eb_pct,
        s.bound_status
    );
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    if let Some(p) = args.policy {
        cfg.policy = p;
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    cfg.validate()?;
    let out = enercoop_core::run(&cfg)?;
    let dir = &args.common.out;
    report::write_run(dir, &out, args.trajectory)?;
    let b = bucket(&cfg, args.hourly);
    report::write_file(&dir.join("series.csv"), |w| {
        report::emit_plot_data(w, std::slice::from_ref(&out), b)
    })?;
    print_summary(&out);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    cfg.validate()?;
    if args.policies.is_empty() {
        return Err(Error::Config("no policies given".into()));
    }
    let runs = enercoop_core::compare(&cfg, &args.policies)?;
    let dir = &args.common.out;
    for r in &runs {
        report::write_run(&dir.join(r.summary.policy.name()), r, false)?;
        print_summary(r);
    }
    let b = bucket(&cfg, args.hourly);
    report::write_file(&dir.join("delivered.csv"), |w| report::emit_plot_data(w, &runs, b))?;
    report::write_file(&dir.join("summary.csv"), |w| report::emit_summary_table(w, &runs))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let cfg = args.common.load()?;
    let runs = enercoop_core::sweep_lambda(&cfg, &args.values)?;
    let dir = &args.common.out;
    report::write_file(&dir.join("lambda.csv"), |w| report::emit_lambda_table(w, &runs))?;
    for r in &runs {
        print_summary(r);
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Error> {
    if args.harvest.is_none() && args.clusters.is_none() {
        return Err(Error::Config("nothing to validate: pass --harvest and/or --clusters".into()));
    }
    let cfg = match &args.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    let clock = cfg.clock()?;
    if let Some(p) = &args.harvest {
        let trace = ingest::load_harvest(p, f64::from(cfg.slot_duration_s), cfg.beta_max_j, cfg.harvest_peak_fraction)?;
        if args.config.is_some() && trace.len() < cfg.horizon_slots {
            return Err(Error::TraceTooShort {
                kind: "harvest",
                len: trace.len(),
                needed: cfg.horizon_slots,
            });
        }
        println!("{}: ok, {} slots", p.display(), trace.len());
    }
    if let Some(p) = &args.clusters {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        let clusters = ingest::parse_profiles(file, &p.display().to_string(), clock.slots_per_day())?;
        println!("{}: ok, {} clusters", p.display(), clusters.len());
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    if args.days == 0 || !(args.sample_period > 0.0) {
        return Err(Error::Config("days and sample period must be positive".into()));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let clock = SimConfig::default().clock()?;
    let (clusters, harvest) = synthetic_traces(args.seed, clock.slots_per_day(), args.days, args.sample_period);
    let cpath = args.out.join("clusters.csv");
    let hpath = args.out.join("harvest.csv");
    ingest::write_profiles(create(&cpath)?, &clusters)?;
    ingest::write_harvest(create(&hpath)?, &harvest)?;
    println!("wrote {} and {}", cpath.display(), hpath.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::SweepLambda(a) => cmd_sweep(a),
        Command::ValidateTraces(a) => cmd_validate(a),
        Command::GenTraces(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
