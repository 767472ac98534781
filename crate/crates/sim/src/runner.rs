//! The full simulation loop behind `simulate`: stepping the world, flushing
//! uploads, scheduling comparisons and density rounds, snapshotting server
//! state at update-interval boundaries, and writing all output files.

use std::path::{Path, PathBuf};

use epimpc_core::analytics::TimeBuckets;
use epimpc_core::tracing::{InfectedRegistry, TracingPolicy};

use crate::bus::Bus;
use crate::config::{AttachSide, WorldConfig};
use crate::error::{Result, SimError};
use crate::pipelines::{
    check_tracing_outcome, run_analytics, run_citizen_tracing, run_density_round, upload_reports,
    AnalyticsOutcome, DensityRoundOutcome, NotificationRecord, ServerAnalytics,
};
use crate::report::{
    self, AnalyticsSummary, DensitySummary, OutputFormat, RunReport, TracingSummary, WorldSummary,
};
use crate::snapshot::Snapshot;
use crate::world::{Status, World};

/// Everything a full run produced, before it was written to disk.
pub struct RunArtifacts {
    pub world: World,
    pub bus: Bus,
    pub density_rounds: Vec<DensityRoundOutcome>,
    pub notifications: Vec<NotificationRecord>,
    pub analytics: AnalyticsOutcome,
    pub report: RunReport,
    pub snapshots: Vec<PathBuf>,
}

pub fn tracing_policy(cfg: &WorldConfig) -> TracingPolicy {
    TracingPolicy::new(
        cfg.threshold_t,
        cfg.min_set_size_s,
        cfg.update_interval_epochs,
    )
}

pub fn timeline_buckets(cfg: &WorldConfig) -> Result<TimeBuckets> {
    Ok(TimeBuckets::evenly_spaced(
        0,
        cfg.timeline_bucket_epochs,
        cfg.epochs,
    )?)
}

/// Runs the whole simulation and writes `density.csv`, `notifications.csv`,
/// `infection_histogram.csv`, `timeline.csv`, `transcript.log` and
/// `report.json` (or their JSON variants) into `out`.
pub fn run_simulation(
    cfg: &WorldConfig,
    seed: u64,
    out: &Path,
    format: OutputFormat,
    resume_from: Option<&Path>,
) -> Result<RunArtifacts> {
    let policy = tracing_policy(cfg);
    let buckets = timeline_buckets(cfg)?;

    let (mut world, mut registry, mut analytics_store, mut density_rounds, mut notifications) =
        match resume_from {
            Some(path) => {
                let snapshot = Snapshot::load(path)?;
                if snapshot.seed() != seed {
                    return Err(SimError::Snapshot(format!(
                        "snapshot was taken with seed {}, run requested seed {seed}",
                        snapshot.seed()
                    )));
                }
                snapshot.restore(cfg)?
            }
            None => (
                World::new(cfg.clone(), seed)?,
                InfectedRegistry::new(),
                ServerAnalytics::default(),
                Vec::new(),
                Vec::new(),
            ),
        };

    let mut bus = Bus::new();
    let mut snapshots = Vec::new();

    while world.epoch() < cfg.epochs {
        world.step_epoch();
        let epoch = world.epoch();

        // Newly reported citizens upload immediately.
        let pending = world.take_new_reports();
        upload_reports(&mut world, &mut bus, &mut registry, &mut analytics_store, &pending)?;

        // Tracing comparisons at each citizen's phase offset.
        let due: Vec<u32> = world
            .citizens
            .iter()
            .filter(|c| c.participating && epoch % cfg.update_interval_epochs == c.tracing_phase)
            .map(|c| c.id)
            .collect();
        if !due.is_empty() {
            registry.prune_expired(&world.clock);
        }
        for id in due {
            crate::pipelines::prune_citizen_logs(&mut world, id)?;
            let outcome = run_citizen_tracing(
                &world,
                &mut bus,
                &registry,
                &policy,
                cfg.tracing_suggestion,
                id,
            )?;
            check_tracing_outcome(&world, &policy, &outcome)?;
            notifications.push(NotificationRecord::from_outcome(&outcome));
        }

        // Density round and snapshot at update-interval boundaries.
        if epoch % cfg.update_interval_epochs == 0 {
            let round = epoch / cfg.update_interval_epochs;
            let outcome = run_density_round(&mut world, &mut bus, round)?;
            density_rounds.push(outcome);

            let snapshot = Snapshot::capture(
                &world,
                &registry,
                &analytics_store,
                &density_rounds,
                &notifications,
            );
            let path = out.join(format!("snapshot_epoch_{epoch}.json"));
            snapshot.save(&path)?;
            snapshots.push(path);
        }
    }

    let analytics = run_analytics(
        &world,
        &mut bus,
        &analytics_store,
        cfg.analytics_suggestion,
        &buckets,
    )?;

    let report = build_report(cfg, seed, &world, &density_rounds, &notifications, &analytics);

    report::write_density(out, &density_rounds, format)?;
    report::write_notifications(out, &notifications, format)?;
    report::write_histogram(out, &analytics.histogram, format)?;
    report::write_timeline(out, &analytics.timeline, format)?;
    report::write_transcript(out, &bus.render_log())?;
    report::write_report(out, &report)?;

    Ok(RunArtifacts {
        world,
        bus,
        density_rounds,
        notifications,
        analytics,
        report,
        snapshots,
    })
}

fn build_report(
    cfg: &WorldConfig,
    seed: u64,
    world: &World,
    density_rounds: &[DensityRoundOutcome],
    notifications: &[NotificationRecord],
    analytics: &AnalyticsOutcome,
) -> RunReport {
    RunReport {
        seed,
        config: cfg.clone(),
        policy: report::policy_report(cfg),
        world: WorldSummary {
            citizens: cfg.citizens,
            participating: world.citizens.iter().filter(|c| c.participating).count() as u32,
            epochs: world.epoch(),
            contact_events: world.events.contacts.len(),
            infection_events: world.events.infections.len(),
            reported: world
                .citizens
                .iter()
                .filter(|c| matches!(c.status, Status::Reported { .. }))
                .count(),
        },
        density: DensitySummary {
            rounds: density_rounds.len(),
            all_rounds_match_oracle: density_rounds.iter().all(|o| o.histogram == o.oracle),
        },
        tracing: TracingSummary {
            suggestion: cfg.tracing_suggestion,
            comparisons: notifications.len(),
            notified: notifications
                .iter()
                .filter(|n| n.kind == "bit" && n.value == Some(1)
                    || n.kind == "cardinality" && n.value.is_some_and(|v| v > cfg.threshold_t))
                .count(),
            refused: notifications.iter().filter(|n| n.kind == "refused").count(),
        },
        analytics: AnalyticsSummary {
            suggestion: analytics.suggestion,
            attach: match cfg.attach {
                AttachSide::Received => "received".to_string(),
                AttachSide::Sent => "sent".to_string(),
            },
            total_exposure_count: analytics.histogram.total(),
            late_uploads_in_open_bucket: analytics.timeline.open_bucket.is_some(),
            deferred_sessions: analytics.deferred.clone(),
        },
    }
}
