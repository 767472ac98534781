//! The `epimpc` command line: full simulations, single-pipeline runs,
//! adversary scenarios and the oracle verification suite.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use epimpc_core::tracing::InfectedRegistry;

use crate::adversary::{run_scenario, Scenario};
use crate::bus::Bus;
use crate::config::WorldConfig;
use crate::error::{Result, SimError};
use crate::pipelines::{
    run_analytics, run_density_round, run_tracing_cycle, NotificationRecord, ServerAnalytics,
};
use crate::report::{self, OutputFormat};
use crate::runner::{run_simulation, timeline_buckets, tracing_policy};
use crate::verify::{verify_battery, verify_config};
use crate::world::World;

#[derive(Debug, Parser)]
#[command(
    name = "epimpc",
    about = "Privacy-preserving epidemic data collection: protocol simulations over a two-server model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config: a file path or a built-in name (demo, places).
    #[arg(long, default_value = "demo")]
    config: String,
    /// Master seed; overrides any seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output file format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full run: movement, contacts, infections, all protocols, reports.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Resume from a server-state snapshot written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// One population-density aggregation round.
    Density {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One contact-tracing cycle over every citizen.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        /// 1: citizens learn the cardinality; 2: server notifies above t.
        #[arg(long, default_value_t = 2)]
        suggestion: u8,
    },
    /// Infection-location histogram and spread timeline.
    Analytics {
        #[command(flatten)]
        common: CommonArgs,
        /// 1: server aggregates uploads locally; 2: per-citizen intersections.
        #[arg(long, default_value_t = 1)]
        suggestion: u8,
    },
    /// Adversary scenarios with outcomes fixed by the security analysis.
    Attack {
        /// One of: single-token-attack-s1, single-token-attack-s2,
        /// multi-token-attack-s2, colluding-servers-demo, nonunit-vector-demo.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Optional directory for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the oracle suites over a seed or seed range; exits non-zero on
    /// any mismatch.
    Verify {
        /// A single seed `N` or an inclusive range `A..B`.
        #[arg(long, default_value = "1")]
        seed: String,
        /// Config: built-in name or path; defaults to the verify scenario.
        #[arg(long)]
        config: Option<String>,
    },
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(spec: &str) -> Result<WorldConfig> {
    if let Some(builtin) = WorldConfig::builtin(spec) {
        return Ok(builtin);
    }
    let text = fs::read_to_string(spec).map_err(|e| {
        SimError::Config(format!("cannot read config file '{spec}': {e}"))
    })?;
    WorldConfig::parse(&text)
}

fn resolve_seed(cfg: &WorldConfig, flag: Option<u64>) -> Result<u64> {
    flag.or(cfg.seed).ok_or_else(|| {
        SimError::Config("no seed: pass --seed or set seed = <n> in the config".to_string())
    })
}

fn prepared(common: &CommonArgs) -> Result<(WorldConfig, u64, PathBuf, OutputFormat)> {
    let cfg = load_config(&common.config)?;
    let seed = resolve_seed(&cfg, common.seed)?;
    Ok((cfg, seed, common.out.clone(), common.format.into()))
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { common, resume } => {
            let (cfg, seed, out, format) = prepared(&common)?;
            let artifacts = run_simulation(&cfg, seed, &out, format, resume.as_deref())?;
            println!(
                "simulate: {} epochs, {} density rounds, {} comparisons, {} reported; outputs in {}",
                artifacts.world.epoch(),
                artifacts.density_rounds.len(),
                artifacts.notifications.len(),
                artifacts.report.world.reported,
                out.display()
            );
            Ok(0)
        }
        Command::Density { common } => {
            let (cfg, seed, out, format) = prepared(&common)?;
            let mut world = World::new(cfg.clone(), seed)?;
            world.run_epochs(cfg.update_interval_epochs.min(cfg.epochs));
            let mut bus = Bus::new();
            let outcome = run_density_round(&mut world, &mut bus, 1)?;
            report::write_density(&out, std::slice::from_ref(&outcome), format)?;
            report::write_transcript(&out, &bus.render_log())?;
            println!(
                "density: round 1 at epoch {} matches the census oracle exactly ({} citizens)",
                outcome.epoch,
                outcome.histogram.total()
            );
            Ok(0)
        }
        Command::Trace { common, suggestion } => {
            let (cfg, seed, out, format) = prepared(&common)?;
            let mut world = World::new(cfg.clone(), seed)?;
            world.run_epochs(cfg.update_interval_epochs.min(cfg.epochs));
            let mut bus = Bus::new();
            let mut registry = InfectedRegistry::new();
            let mut analytics = ServerAnalytics::default();
            let policy = tracing_policy(&cfg);
            let outcomes = run_tracing_cycle(
                &mut world,
                &mut bus,
                &mut registry,
                &mut analytics,
                &policy,
                suggestion,
            )?;
            let records: Vec<NotificationRecord> = outcomes
                .iter()
                .map(NotificationRecord::from_outcome)
                .collect();
            report::write_notifications(&out, &records, format)?;
            report::write_transcript(&out, &bus.render_log())?;
            println!(
                "trace: suggestion {suggestion}, {} comparisons, all equal the oracle",
                outcomes.len()
            );
            Ok(0)
        }
        Command::Analytics { common, suggestion } => {
            let (mut cfg, seed, out, format) = prepared(&common)?;
            // The flag decides the pipeline, so shape the uploads to match.
            cfg.analytics_suggestion = suggestion;
            let mut world = World::new(cfg.clone(), seed)?;
            let mut bus = Bus::new();
            let mut registry = InfectedRegistry::new();
            let mut analytics_store = ServerAnalytics::default();
            while world.epoch() < cfg.epochs {
                world.step_epoch();
                let pending = world.take_new_reports();
                crate::pipelines::upload_reports(
                    &mut world,
                    &mut bus,
                    &mut registry,
                    &mut analytics_store,
                    &pending,
                )?;
            }
            let buckets = timeline_buckets(&cfg)?;
            let outcome = run_analytics(&world, &mut bus, &analytics_store, suggestion, &buckets)?;
            report::write_histogram(&out, &outcome.histogram, format)?;
            report::write_timeline(&out, &outcome.timeline, format)?;
            report::write_transcript(&out, &bus.render_log())?;
            println!(
                "analytics: suggestion {suggestion}, histogram total {} over {} uploads, matches the oracle exactly",
                outcome.histogram.total(),
                analytics_store.uploads.len()
            );
            Ok(0)
        }
        Command::Attack { scenario, seed, out } => {
            let scenario: Scenario = scenario.parse()?;
            let report = run_scenario(scenario, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                let path = dir.join(format!("attack_{}.json", report.scenario));
                fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(0)
        }
        Command::Verify { seed, config } => {
            let cfg = match config {
                Some(spec) => load_config(&spec)?,
                None => verify_config(),
            };
            let seeds = parse_seed_range(&seed)?;
            for seed in seeds {
                let summary = verify_battery(&cfg, seed)?;
                println!(
                    "verify seed {}: ok ({} density rounds, {} comparisons, {} reported, exposure total {})",
                    summary.seed,
                    summary.density_rounds,
                    summary.tracing_comparisons,
                    summary.reported,
                    summary.exposure_total
                );
            }
            println!("verify: all oracle suites passed");
            Ok(0)
        }
    }
}

fn parse_seed_range(spec: &str) -> Result<Vec<u64>> {
    let bad = || SimError::Config(format!("bad seed spec '{spec}' (expected N or A..B)"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![spec.trim().parse().map_err(|_| bad())?])
    }
}

/// Entry point used by `main` and by tests driving the CLI in-process.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args)
}
