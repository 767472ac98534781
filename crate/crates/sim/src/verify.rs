//! The oracle battery behind `verify`: runs every pipeline on a seeded world
//! and checks each protocol output against its plaintext oracle. Any
//! mismatch surfaces as an error, so a clean return means every diff was
//! exactly zero.

use std::collections::BTreeSet;

use epimpc_core::tracing::InfectedRegistry;

use crate::bus::Bus;
use crate::config::WorldConfig;
use crate::error::{Result, SimError};
use crate::pipelines::{run_analytics, run_density_round, run_tracing_cycle, ServerAnalytics};
use crate::runner::{timeline_buckets, tracing_policy};
use crate::world::World;

/// A compact verify config: small world, short run, every pipeline active.
pub fn verify_config() -> WorldConfig {
    WorldConfig {
        grid_rows: 4,
        grid_cols: 4,
        cell_size_m: 25.0,
        citizens: 16,
        epochs: 240,
        retention_epochs: 240,
        update_interval_epochs: 60,
        test_delay_epochs: 40,
        initial_infected: 2,
        transmission_prob: 0.1,
        timeline_bucket_epochs: 60,
        ..WorldConfig::demo()
    }
}

#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub seed: u64,
    pub density_rounds: usize,
    pub tracing_comparisons: usize,
    pub reported: usize,
    pub exposure_total: u64,
}

/// Steps a world through its full run, exercising density rounds and both
/// tracing suggestions at every update boundary, then both analytics paths
/// and the timeline at the end. Every output is oracle-checked internally.
pub fn verify_battery(cfg: &WorldConfig, seed: u64) -> Result<VerifySummary> {
    let mut world = World::new(cfg.clone(), seed)?;
    let mut bus = Bus::new();
    let mut registry = InfectedRegistry::new();
    let mut analytics_store = ServerAnalytics::default();
    let policy = tracing_policy(cfg);
    let mut density_rounds = 0usize;
    let mut comparisons = 0usize;

    while world.epoch() < cfg.epochs {
        world.step_epoch();
        let epoch = world.epoch();
        if epoch % cfg.update_interval_epochs == 0 {
            for suggestion in [1u8, 2u8] {
                let outcomes = run_tracing_cycle(
                    &mut world,
                    &mut bus,
                    &mut registry,
                    &mut analytics_store,
                    &policy,
                    suggestion,
                )?;
                comparisons += outcomes.len();
            }
            let round = epoch / cfg.update_interval_epochs;
            run_density_round(&mut world, &mut bus, round)?;
            density_rounds += 1;
        }
    }

    let buckets = timeline_buckets(cfg)?;
    let one = run_analytics(&world, &mut bus, &analytics_store, 1, &buckets)?;
    let two = run_analytics(&world, &mut bus, &analytics_store, 2, &buckets)?;
    if one.histogram != two.histogram {
        return Err(SimError::OracleMismatch {
            context: "analytics suggestion equivalence".to_string(),
        });
    }
    if one.timeline != two.timeline {
        return Err(SimError::OracleMismatch {
            context: "timeline suggestion equivalence".to_string(),
        });
    }
    if one.timeline.total()? != one.histogram {
        return Err(SimError::OracleMismatch {
            context: "timeline bucket partition".to_string(),
        });
    }

    // Desk-scale global token uniqueness across all citizens.
    let mut seen = BTreeSet::new();
    for citizen in &world.citizens {
        for (token, _) in citizen.sent.iter() {
            if !seen.insert(*token) {
                return Err(SimError::OracleMismatch {
                    context: "global token uniqueness".to_string(),
                });
            }
        }
    }

    let reported = analytics_store.uploads.len();
    Ok(VerifySummary {
        seed,
        density_rounds,
        tracing_comparisons: comparisons,
        reported,
        exposure_total: one.histogram.total(),
    })
}
