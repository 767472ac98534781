//! Bus-driven protocol pipelines: density rounds, tracing cycles and the
//! infection analytics, each checked against its plaintext oracle.
//!
//! Every protocol message crosses the bus in wire form. An oracle mismatch
//! is a correctness bug and surfaces as a hard error.

use std::collections::BTreeSet;

use epimpc_core::analytics::{
    exposure_cells, exposures_suggestion1, histogram_from_exposures, timeline_from_exposures,
    ExposureRecord, ExposureSet, InfectionUpload, TimeBuckets, Timeline,
};
use epimpc_core::density::{
    make_shares, server1_aggregate, server2_finalize, IndexVector, SessionId,
};
use epimpc_core::psi::{sender_round2, PsiMode, PsiOutput, ReceiverSession};
use epimpc_core::tracing::{InfectedRegistry, TracingPolicy};
use epimpc_core::{CellIndex, CommutativeKey, LocationHistogram, Token};

use crate::bus::{Bus, Role};
use crate::config::AttachSide;
use crate::error::{Result, SimError};
use crate::oracle;
use crate::rng::citizen_stream;
use crate::wire::{
    decode_density_sum, decode_mask_share, decode_masked_share, decode_pairs, decode_psi_round1,
    decode_psi_round2, decode_tokens, encode_density_masked, encode_density_share,
    encode_density_sum, encode_pairs, encode_psi_round1, encode_psi_round2, encode_tokens,
    InfectedUploadV1, InfectionReportV1, NotifyV1, WireMessage,
};
use crate::world::World;

/// Outcome of one density round; the histogram always equals the oracle when
/// this returns Ok.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityRoundOutcome {
    pub round: u64,
    pub epoch: u64,
    pub histogram: LocationHistogram,
    pub oracle: LocationHistogram,
}

/// Runs one full execution of the two-server aggregation over the bus.
pub fn run_density_round(
    world: &mut World,
    bus: &mut Bus,
    round: u64,
) -> Result<DensityRoundOutcome> {
    let epoch = world.epoch();
    let m = world.cfg.cell_count();
    let m_bar = world.cfg.m_bar();
    let field = world.field.clone();
    let seed = world.seed;

    let mut server1_inbox = Vec::new();
    let mut server2_inbox = Vec::new();
    let participant_cells: Vec<(u32, CellIndex)> = world
        .citizens
        .iter()
        .filter(|c| c.participating)
        .map(|c| (c.id, world.cell_of(c.pos)))
        .collect();
    for (id, cell) in participant_cells {
        let mut rng = citizen_stream(seed, epoch, "density", id);
        let prev = world.citizen(id)?.prev_index_vector.clone();
        let indices = IndexVector::build(cell, m, m_bar, prev.as_ref(), &mut rng)?;
        world.citizen_mut(id)?.prev_index_vector = Some(indices.clone());
        let (mask, masked) = make_shares(SessionId::new(u64::from(id)), &indices, &field, &mut rng)?;

        let delivered = bus.send(
            epoch,
            Role::Citizen(id),
            Role::ServerOne,
            &WireMessage::DensityShare(encode_density_share(round, &mask)),
        )?;
        if let WireMessage::DensityShare(msg) = delivered {
            server1_inbox.push(decode_mask_share(&msg, m, &field)?);
        }

        let delivered = bus.send(
            epoch,
            Role::Citizen(id),
            Role::ServerTwo,
            &WireMessage::DensityShare(encode_density_masked(round, &masked)),
        )?;
        if let WireMessage::DensityShare(msg) = delivered {
            server2_inbox.push(decode_masked_share(&msg, m, &field)?);
        }
    }

    let mask_sum = server1_aggregate(&server1_inbox, m, &field)?;
    let delivered = bus.send(
        epoch,
        Role::ServerOne,
        Role::ServerTwo,
        &WireMessage::DensitySum(encode_density_sum(round, &mask_sum)),
    )?;
    let mask_sum = match delivered {
        WireMessage::DensitySum(msg) => decode_density_sum(&msg, &field)?,
        _ => unreachable!("sent a density sum"),
    };

    let histogram = server2_finalize(&server2_inbox, &mask_sum, m, &field)?;
    let oracle = oracle::census_oracle(world);
    if histogram != oracle {
        return Err(SimError::OracleMismatch {
            context: format!("density round {round}"),
        });
    }
    Ok(DensityRoundOutcome {
        round,
        epoch,
        histogram,
        oracle,
    })
}

/// What one citizen's tracing comparison produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracingResult {
    /// Suggestion 1 refused the comparison (receiver set too small).
    Refused { size: usize },
    /// Suggestion 1: the citizen learned the cardinality itself.
    CardinalityLearned(u64),
    /// Suggestion 2: the citizen received only the notification bit.
    Notified(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracingOutcome {
    pub citizen: u32,
    pub epoch: u64,
    pub suggestion: u8,
    pub result: TracingResult,
    /// Server-side cardinality (suggestion 2 only); never transmitted.
    pub server_cardinality: Option<u64>,
}

/// Runs one citizen's comparison under the chosen suggestion, over the bus.
pub fn run_citizen_tracing(
    world: &World,
    bus: &mut Bus,
    registry: &InfectedRegistry,
    policy: &TracingPolicy,
    suggestion: u8,
    id: u32,
) -> Result<TracingOutcome> {
    let epoch = world.epoch();
    let citizen = world.citizen(id)?;
    let received = citizen.received.tokens();
    let group = &world.group;
    let pre_shuffle = world.cfg.psi_pre_shuffle;
    let session_id = u64::from(id);

    match suggestion {
        1 => {
            if received.len() <= policy.min_receiver_set {
                return Ok(TracingOutcome {
                    citizen: id,
                    epoch,
                    suggestion,
                    result: TracingResult::Refused {
                        size: received.len(),
                    },
                    server_cardinality: None,
                });
            }
            let mut citizen_rng = citizen_stream(world.seed, epoch, "trace-s1-citizen", id);
            let mut server_rng = citizen_stream(world.seed, epoch, "trace-s1-server", id);
            let receiver_key = CommutativeKey::generate(group, &mut citizen_rng);
            let sender_key = CommutativeKey::generate(group, &mut server_rng);
            let mut session = ReceiverSession::new(
                &received,
                PsiMode::Cardinality,
                receiver_key,
                Some(policy.min_receiver_set),
            );
            if !pre_shuffle {
                session = session.without_pre_shuffle();
            }
            let round1 = session.round1(&mut citizen_rng)?;
            let delivered = bus.send(
                epoch,
                Role::Citizen(id),
                Role::ServerTwo,
                &WireMessage::PsiRound1(encode_psi_round1(session_id, &round1)),
            )?;
            let round1 = match delivered {
                WireMessage::PsiRound1(msg) => decode_psi_round1(&msg, group)?,
                _ => unreachable!(),
            };
            let round2 = sender_round2(&round1, &sender_key, &registry.tokens(), &mut server_rng)?;
            let delivered = bus.send(
                epoch,
                Role::ServerTwo,
                Role::Citizen(id),
                &WireMessage::PsiRound2(encode_psi_round2(session_id, &round2)),
            )?;
            let round2 = match delivered {
                WireMessage::PsiRound2(msg) => decode_psi_round2(&msg, group)?,
                _ => unreachable!(),
            };
            let cardinality = match session.finalize(&round2)? {
                PsiOutput::Cardinality(n) => n as u64,
                PsiOutput::Intersection(_) => unreachable!("cardinality session"),
            };
            Ok(TracingOutcome {
                citizen: id,
                epoch,
                suggestion,
                result: TracingResult::CardinalityLearned(cardinality),
                server_cardinality: None,
            })
        }
        2 => {
            let mut citizen_rng = citizen_stream(world.seed, epoch, "trace-s2-citizen", id);
            let mut server_rng = citizen_stream(world.seed, epoch, "trace-s2-server", id);
            let server_key = CommutativeKey::generate(group, &mut server_rng);
            let citizen_key = CommutativeKey::generate(group, &mut citizen_rng);
            let mut session =
                ReceiverSession::new(&registry.tokens(), PsiMode::Cardinality, server_key, None);
            if !pre_shuffle {
                session = session.without_pre_shuffle();
            }
            let round1 = session.round1(&mut server_rng)?;
            let delivered = bus.send(
                epoch,
                Role::ServerTwo,
                Role::Citizen(id),
                &WireMessage::PsiRound1(encode_psi_round1(session_id, &round1)),
            )?;
            let round1 = match delivered {
                WireMessage::PsiRound1(msg) => decode_psi_round1(&msg, group)?,
                _ => unreachable!(),
            };
            let round2 = sender_round2(&round1, &citizen_key, &received, &mut citizen_rng)?;
            let delivered = bus.send(
                epoch,
                Role::Citizen(id),
                Role::ServerTwo,
                &WireMessage::PsiRound2(encode_psi_round2(session_id, &round2)),
            )?;
            let round2 = match delivered {
                WireMessage::PsiRound2(msg) => decode_psi_round2(&msg, group)?,
                _ => unreachable!(),
            };
            let cardinality = match session.finalize(&round2)? {
                PsiOutput::Cardinality(n) => n as u64,
                PsiOutput::Intersection(_) => unreachable!("cardinality session"),
            };
            let bit = policy.notify(cardinality);
            bus.send(
                epoch,
                Role::ServerTwo,
                Role::Citizen(id),
                &WireMessage::Notify(NotifyV1 {
                    citizen_session: session_id,
                    bit: u8::from(bit),
                }),
            )?;
            Ok(TracingOutcome {
                citizen: id,
                epoch,
                suggestion,
                result: TracingResult::Notified(bit),
                server_cardinality: Some(cardinality),
            })
        }
        other => Err(SimError::Config(format!(
            "tracing suggestion must be 1 or 2, got {other}"
        ))),
    }
}

/// Checks one outcome against the plaintext oracle.
pub fn check_tracing_outcome(
    world: &World,
    policy: &TracingPolicy,
    outcome: &TracingOutcome,
) -> Result<()> {
    let reports = oracle::report_times(&world.events);
    let expected = oracle::tracing_intersection_oracle(
        &world.events,
        &reports,
        outcome.citizen,
        outcome.epoch,
        world.cfg.retention_epochs,
    )
    .len() as u64;
    let ok = match outcome.result {
        TracingResult::Refused { size } => size <= policy.min_receiver_set,
        TracingResult::CardinalityLearned(n) => n == expected,
        TracingResult::Notified(bit) => {
            bit == (expected > policy.threshold)
                && outcome.server_cardinality == Some(expected)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(SimError::OracleMismatch {
            context: format!(
                "tracing citizen {} at epoch {} (expected cardinality {expected})",
                outcome.citizen, outcome.epoch
            ),
        })
    }
}

/// Server-side store of infection reports, fed by wire uploads.
#[derive(Debug, Clone, Default)]
pub struct ServerAnalytics {
    pub uploads: Vec<StoredUpload>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredUpload {
    pub session: u64,
    pub tokens_l: Option<BTreeSet<Token>>,
    pub pairs: BTreeSet<(Token, CellIndex)>,
    pub epoch: u64,
}

impl ServerAnalytics {
    pub fn ingest(&mut self, msg: &InfectionReportV1, m: u32) -> Result<()> {
        self.uploads.push(StoredUpload {
            session: msg.citizen_session,
            tokens_l: msg.tokens_l.as_deref().map(decode_tokens).transpose()?,
            pairs: decode_pairs(&msg.ra_pairs, m)?,
            epoch: msg.epoch,
        });
        Ok(())
    }
}

/// Flushes the pending reports of newly tested citizens: the tracing upload
/// into the registry, and the analytics report into the server store.
///
/// Under suggestion 1 the analytics report carries the citizen's own token
/// set in `tokens_L`; under suggestion 2 that set stays on the phone and
/// enters later through the per-citizen intersection protocol. With
/// locations attached to sent tokens the located set travels in `ra_pairs`
/// and the bare received set (when uploaded at all) in `tokens_L`.
pub fn upload_reports(
    world: &mut World,
    bus: &mut Bus,
    registry: &mut InfectedRegistry,
    analytics: &mut ServerAnalytics,
    ids: &[u32],
) -> Result<()> {
    let m = world.cfg.cell_count();
    let suggestion = world.cfg.analytics_suggestion;
    let attach = world.cfg.attach;
    let epoch = world.epoch();
    for &id in ids {
        let frozen = world
            .citizen(id)?
            .frozen_report
            .clone()
            .ok_or_else(|| SimError::Config(format!("citizen {id} has no frozen report")))?;

        let upload = InfectedUploadV1 {
            citizen_session: u64::from(id),
            tokens: encode_tokens(&frozen.sent_tokens),
            epoch: frozen.epoch,
        };
        let delivered = bus.send(
            epoch,
            Role::Citizen(id),
            Role::ServerTwo,
            &WireMessage::InfectedUpload(upload),
        )?;
        if let WireMessage::InfectedUpload(msg) = delivered {
            registry.upload(decode_tokens(&msg.tokens)?, msg.epoch);
        }

        let (tokens_l, pairs) = match attach {
            AttachSide::Received => (
                (suggestion == 1).then(|| encode_tokens(&frozen.sent_tokens)),
                encode_pairs(&frozen.received_pairs),
            ),
            AttachSide::Sent => (
                (suggestion == 1).then(|| encode_tokens(&frozen.received_tokens)),
                encode_pairs(&frozen.sent_pairs),
            ),
        };
        let report = InfectionReportV1 {
            citizen_session: u64::from(id),
            tokens_l,
            ra_pairs: pairs,
            epoch: frozen.epoch,
        };
        let delivered = bus.send(
            epoch,
            Role::Citizen(id),
            Role::ServerTwo,
            &WireMessage::InfectionReport(report),
        )?;
        if let WireMessage::InfectionReport(msg) = delivered {
            analytics.ingest(&msg, m)?;
        }
    }
    Ok(())
}

/// Prunes a citizen's logs to the current retention window; call before
/// reading its token sets for a comparison.
pub fn prune_citizen_logs(world: &mut World, id: u32) -> Result<()> {
    let citizen = world.citizen_mut(id)?;
    let clock = citizen.clock.clone();
    citizen.sent.prune_expired(&clock);
    citizen.received.prune_expired(&clock);
    Ok(())
}

/// Uploads every pending report and runs one comparison per participating
/// citizen, verifying each outcome against the oracle.
pub fn run_tracing_cycle(
    world: &mut World,
    bus: &mut Bus,
    registry: &mut InfectedRegistry,
    analytics: &mut ServerAnalytics,
    policy: &TracingPolicy,
    suggestion: u8,
) -> Result<Vec<TracingOutcome>> {
    let pending = world.take_new_reports();
    upload_reports(world, bus, registry, analytics, &pending)?;
    registry.prune_expired(&world.clock);

    let ids: Vec<u32> = world
        .citizens
        .iter()
        .filter(|c| c.participating)
        .map(|c| c.id)
        .collect();
    let mut outcomes = Vec::with_capacity(ids.len());
    for id in ids {
        prune_citizen_logs(world, id)?;
        let outcome = run_citizen_tracing(world, bus, registry, policy, suggestion, id)?;
        check_tracing_outcome(world, policy, &outcome)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// The analytics pipeline output; histogram and timeline always equal the
/// oracle when this returns Ok.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyticsOutcome {
    pub suggestion: u8,
    pub histogram: LocationHistogram,
    pub timeline: Timeline,
    pub exposures: Vec<ExposureRecord>,
    /// Sessions whose intersection protocol failed, deferred to the next
    /// update interval rather than aborting the aggregation.
    pub deferred: Vec<u64>,
}

/// Aggregates the stored uploads under the chosen suggestion and verifies
/// the result against the event-log oracle.
pub fn run_analytics(
    world: &World,
    bus: &mut Bus,
    analytics: &ServerAnalytics,
    suggestion: u8,
    buckets: &TimeBuckets,
) -> Result<AnalyticsOutcome> {
    let m = world.cfg.cell_count();
    let attach = world.cfg.attach;
    let mut deferred = Vec::new();

    let exposures: Vec<ExposureRecord> = match (suggestion, attach) {
        (1, AttachSide::Received) => {
            let uploads: Vec<InfectionUpload> = analytics
                .uploads
                .iter()
                .map(|u| {
                    Ok(InfectionUpload {
                        session: SessionId::new(u.session),
                        sent: u.tokens_l.clone().ok_or_else(|| {
                            SimError::Config("suggestion-1 upload without tokens_L".to_string())
                        })?,
                        received_pairs: u.pairs.clone(),
                        epoch: u.epoch,
                    })
                })
                .collect::<Result<_>>()?;
            exposures_suggestion1(&uploads)
        }
        (1, AttachSide::Sent) => {
            // Located sent pairs pooled at the server; matching is local.
            let pooled: BTreeSet<(Token, CellIndex)> = analytics
                .uploads
                .iter()
                .flat_map(|u| u.pairs.iter().copied())
                .collect();
            let pooled_tokens: BTreeSet<Token> = pooled.iter().map(|&(t, _)| t).collect();
            analytics
                .uploads
                .iter()
                .map(|u| {
                    let received = u.tokens_l.clone().ok_or_else(|| {
                        SimError::Config("suggestion-1 upload without tokens_L".to_string())
                    })?;
                    let matched: BTreeSet<Token> =
                        received.intersection(&pooled_tokens).copied().collect();
                    Ok(ExposureRecord {
                        session: SessionId::new(u.session),
                        epoch: u.epoch,
                        exposure: exposure_cells(&pooled, &matched),
                    })
                })
                .collect::<Result<_>>()?
        }
        (2, _) => run_psi_exposures(world, bus, analytics, attach, &mut deferred)?,
        (other, _) => {
            return Err(SimError::Config(format!(
                "analytics suggestion must be 1 or 2, got {other}"
            )))
        }
    };

    let histogram = histogram_from_exposures(&exposures, m)?;
    let timeline = timeline_from_exposures(&exposures, buckets, m)?;

    if deferred.is_empty() {
        let reports = oracle::report_times(&world.events);
        let retention = world.cfg.retention_epochs;
        let oracle_hist =
            oracle::infection_histogram_oracle(&world.events, &reports, retention, m)?;
        if histogram != oracle_hist {
            return Err(SimError::OracleMismatch {
                context: format!("infection histogram (suggestion {suggestion})"),
            });
        }
        let oracle_timeline =
            oracle::timeline_oracle(&world.events, &reports, retention, buckets, m)?;
        if timeline != oracle_timeline {
            return Err(SimError::OracleMismatch {
                context: format!("infection timeline (suggestion {suggestion})"),
            });
        }
    }

    Ok(AnalyticsOutcome {
        suggestion,
        histogram,
        timeline,
        exposures,
        deferred,
    })
}

/// The per-citizen intersection sessions of the suggestion-2 path, driven
/// over the bus. The server is the receiver with the pooled token set; each
/// reported citizen is the sender with its frozen own-token set.
fn run_psi_exposures(
    world: &World,
    bus: &mut Bus,
    analytics: &ServerAnalytics,
    attach: AttachSide,
    deferred: &mut Vec<u64>,
) -> Result<Vec<ExposureRecord>> {
    let group = &world.group;
    let epoch = world.epoch();
    let pre_shuffle = world.cfg.psi_pre_shuffle;
    let pooled: BTreeSet<(Token, CellIndex)> = analytics
        .uploads
        .iter()
        .flat_map(|u| u.pairs.iter().copied())
        .collect();
    let pooled_tokens: BTreeSet<Token> = pooled.iter().map(|&(t, _)| t).collect();

    let mut records = Vec::with_capacity(analytics.uploads.len());
    for upload in &analytics.uploads {
        let id = u32::try_from(upload.session)
            .map_err(|_| SimError::Config("session id out of range".to_string()))?;
        let frozen = world
            .citizen(id)?
            .frozen_report
            .as_ref()
            .ok_or_else(|| SimError::Config(format!("citizen {id} has no frozen report")))?;
        let citizen_set = match attach {
            AttachSide::Received => &frozen.sent_tokens,
            AttachSide::Sent => &frozen.received_tokens,
        };

        let mut server_rng = citizen_stream(world.seed, epoch, "analytics-server", id);
        let mut citizen_rng = citizen_stream(world.seed, epoch, "analytics-citizen", id);
        let outcome = (|| -> Result<BTreeSet<Token>> {
            let server_key = CommutativeKey::generate(group, &mut server_rng);
            let citizen_key = CommutativeKey::generate(group, &mut citizen_rng);
            let mut session =
                ReceiverSession::new(&pooled_tokens, PsiMode::Intersection, server_key, None);
            if !pre_shuffle {
                session = session.without_pre_shuffle();
            }
            let round1 = session.round1(&mut server_rng)?;
            let delivered = bus.send(
                epoch,
                Role::ServerTwo,
                Role::Citizen(id),
                &WireMessage::PsiRound1(encode_psi_round1(upload.session, &round1)),
            )?;
            let round1 = match delivered {
                WireMessage::PsiRound1(msg) => decode_psi_round1(&msg, group)?,
                _ => unreachable!(),
            };
            let round2 = sender_round2(&round1, &citizen_key, citizen_set, &mut citizen_rng)?;
            let delivered = bus.send(
                epoch,
                Role::Citizen(id),
                Role::ServerTwo,
                &WireMessage::PsiRound2(encode_psi_round2(upload.session, &round2)),
            )?;
            let round2 = match delivered {
                WireMessage::PsiRound2(msg) => decode_psi_round2(&msg, group)?,
                _ => unreachable!(),
            };
            match session.finalize(&round2)? {
                PsiOutput::Intersection(set) => Ok(set),
                PsiOutput::Cardinality(_) => unreachable!("intersection session"),
            }
        })();
        match outcome {
            Ok(matched) => records.push(ExposureRecord {
                session: SessionId::new(upload.session),
                epoch: upload.epoch,
                exposure: exposure_cells(&pooled, &matched),
            }),
            Err(_) => {
                // Contribution deferred to the next update interval.
                deferred.push(upload.session);
                records.push(ExposureRecord {
                    session: SessionId::new(upload.session),
                    epoch: upload.epoch,
                    exposure: ExposureSet::default(),
                });
            }
        }
    }
    Ok(records)
}

/// The tracing notifications a full simulation writes out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotificationRecord {
    pub epoch: u64,
    pub citizen: u32,
    pub suggestion: u8,
    pub kind: String,
    pub value: Option<u64>,
}

impl NotificationRecord {
    pub fn from_outcome(outcome: &TracingOutcome) -> Self {
        let (kind, value) = match outcome.result {
            TracingResult::Refused { .. } => ("refused".to_string(), None),
            TracingResult::CardinalityLearned(n) => ("cardinality".to_string(), Some(n)),
            TracingResult::Notified(bit) => ("bit".to_string(), Some(u64::from(bit))),
        };
        Self {
            epoch: outcome.epoch,
            citizen: outcome.citizen,
            suggestion: outcome.suggestion,
            kind,
            value,
        }
    }
}
