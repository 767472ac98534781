//! Server-state and world snapshots, written at update-interval boundaries.
//!
//! A snapshot holds everything a resumed run needs to reproduce the exact
//! final outputs: world state (positions, statuses, token logs), the server
//! registry and analytics store, and the results emitted so far. Randomness
//! never needs persisting because every stream is derived from
//! `(seed, epoch, purpose)`.
//!
//! The private true-cell slot of a citizen's index list is not serialized;
//! it is recomputed from the citizen's position on restore.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use epimpc_core::density::IndexVector;
use epimpc_core::tracing::InfectedRegistry;
use epimpc_core::{CellIndex, EpochClock, ReceivedLog, SentLog, Token};

use crate::config::WorldConfig;
use crate::error::{Result, SimError};
use crate::pipelines::{DensityRoundOutcome, NotificationRecord, ServerAnalytics, StoredUpload};
use crate::world::{
    ContactEvent, EventLog, FrozenReport, InfectionEvent, Status, TestEvent, World,
};

#[derive(Serialize, Deserialize)]
struct StatusState {
    kind: String,
    since: Option<u64>,
    reported_at: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct FrozenState {
    epoch: u64,
    sent_tokens: Vec<String>,
    sent_pairs: Vec<(String, u32)>,
    received_tokens: Vec<String>,
    received_pairs: Vec<(String, u32)>,
}

#[derive(Serialize, Deserialize)]
struct CitizenState {
    id: u32,
    pos: (f64, f64),
    waypoint: (f64, f64),
    participating: bool,
    status: StatusState,
    /// Newline-delimited `hex(token),cell,epoch` records.
    sent: String,
    /// Newline-delimited `hex(token),cell,epoch` records.
    received: String,
    current_token: Option<String>,
    prev_indices: Option<Vec<u32>>,
    frozen: Option<FrozenState>,
    tracing_phase: u64,
}

#[derive(Serialize, Deserialize)]
struct EventsState {
    contacts: Vec<(u64, u32, u32, String, u32)>,
    infections: Vec<(u64, u32, u32, u32)>,
    tests: Vec<(u64, u32)>,
}

#[derive(Serialize, Deserialize)]
struct UploadState {
    session: u64,
    tokens_l: Option<Vec<String>>,
    pairs: Vec<(String, u32)>,
    epoch: u64,
}

#[derive(Serialize, Deserialize)]
struct DensityState {
    round: u64,
    epoch: u64,
    counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct NotificationState {
    epoch: u64,
    citizen: u32,
    suggestion: u8,
    kind: String,
    value: Option<u64>,
}

/// Everything needed to resume a run mid-way.
#[derive(Serialize, Deserialize)]
pub struct Snapshot {
    seed: u64,
    epoch: u64,
    citizens: Vec<CitizenState>,
    events: EventsState,
    registry: Vec<(String, u64)>,
    analytics: Vec<UploadState>,
    density_rounds: Vec<DensityState>,
    notifications: Vec<NotificationState>,
}

fn token_hex(t: &Token) -> String {
    t.to_hex()
}

fn token_parse(s: &str) -> Result<Token> {
    Ok(Token::from_hex(s)?)
}

impl Snapshot {
    pub fn capture(
        world: &World,
        registry: &InfectedRegistry,
        analytics: &ServerAnalytics,
        density_rounds: &[DensityRoundOutcome],
        notifications: &[NotificationRecord],
    ) -> Self {
        let citizens = world
            .citizens
            .iter()
            .map(|c| CitizenState {
                id: c.id,
                pos: c.pos,
                waypoint: c.waypoint,
                participating: c.participating,
                status: match c.status {
                    Status::Susceptible => StatusState {
                        kind: "susceptible".into(),
                        since: None,
                        reported_at: None,
                    },
                    Status::Infected { since } => StatusState {
                        kind: "infected".into(),
                        since: Some(since),
                        reported_at: None,
                    },
                    Status::Reported { since, reported_at } => StatusState {
                        kind: "reported".into(),
                        since: Some(since),
                        reported_at: Some(reported_at),
                    },
                },
                sent: c.sent.to_records(),
                received: c.received.to_records(),
                current_token: c.current_token.as_ref().map(token_hex),
                prev_indices: c
                    .prev_index_vector
                    .as_ref()
                    .map(|iv| iv.indices().iter().map(|c| c.get()).collect()),
                frozen: c.frozen_report.as_ref().map(|f| FrozenState {
                    epoch: f.epoch,
                    sent_tokens: f.sent_tokens.iter().map(token_hex).collect(),
                    sent_pairs: f
                        .sent_pairs
                        .iter()
                        .map(|(t, cell)| (token_hex(t), cell.get()))
                        .collect(),
                    received_tokens: f.received_tokens.iter().map(token_hex).collect(),
                    received_pairs: f
                        .received_pairs
                        .iter()
                        .map(|(t, cell)| (token_hex(t), cell.get()))
                        .collect(),
                }),
                tracing_phase: c.tracing_phase,
            })
            .collect();

        Snapshot {
            seed: world.seed,
            epoch: world.epoch(),
            citizens,
            events: EventsState {
                contacts: world
                    .events
                    .contacts
                    .iter()
                    .map(|c| (c.epoch, c.sender, c.receiver, token_hex(&c.token), c.cell.get()))
                    .collect(),
                infections: world
                    .events
                    .infections
                    .iter()
                    .map(|i| (i.epoch, i.infectee, i.infector, i.cell.get()))
                    .collect(),
                tests: world.events.tests.iter().map(|t| (t.epoch, t.citizen)).collect(),
            },
            registry: registry
                .iter()
                .map(|(t, &e)| (token_hex(t), e))
                .collect(),
            analytics: analytics
                .uploads
                .iter()
                .map(|u| UploadState {
                    session: u.session,
                    tokens_l: u
                        .tokens_l
                        .as_ref()
                        .map(|set| set.iter().map(token_hex).collect()),
                    pairs: u
                        .pairs
                        .iter()
                        .map(|(t, cell)| (token_hex(t), cell.get()))
                        .collect(),
                    epoch: u.epoch,
                })
                .collect(),
            density_rounds: density_rounds
                .iter()
                .map(|o| DensityState {
                    round: o.round,
                    epoch: o.epoch,
                    counts: o.histogram.counts().to_vec(),
                })
                .collect(),
            notifications: notifications
                .iter()
                .map(|n| NotificationState {
                    epoch: n.epoch,
                    citizen: n.citizen,
                    suggestion: n.suggestion,
                    kind: n.kind.clone(),
                    value: n.value,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| SimError::Snapshot(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| SimError::Snapshot(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Rebuilds the world and server state at the snapshot epoch.
    #[allow(clippy::type_complexity)]
    pub fn restore(
        &self,
        cfg: &WorldConfig,
    ) -> Result<(
        World,
        InfectedRegistry,
        ServerAnalytics,
        Vec<DensityRoundOutcome>,
        Vec<NotificationRecord>,
    )> {
        let mut world = World::new(cfg.clone(), self.seed)?;
        if self.citizens.len() != world.citizens.len() {
            return Err(SimError::Snapshot(
                "snapshot citizen count does not match the config".to_string(),
            ));
        }
        world.clock = EpochClock::restore(
            cfg.epoch_length_secs,
            cfg.retention_epochs,
            cfg.update_interval_epochs,
            self.epoch,
        )?;
        let m = cfg.cell_count();

        for (citizen, state) in world.citizens.iter_mut().zip(&self.citizens) {
            if citizen.id != state.id {
                return Err(SimError::Snapshot("citizen ids out of order".to_string()));
            }
            citizen.pos = state.pos;
            citizen.waypoint = state.waypoint;
            citizen.participating = state.participating;
            citizen.status = match state.status.kind.as_str() {
                "susceptible" => Status::Susceptible,
                "infected" => Status::Infected {
                    since: state.status.since.unwrap_or(0),
                },
                "reported" => Status::Reported {
                    since: state.status.since.unwrap_or(0),
                    reported_at: state.status.reported_at.unwrap_or(0),
                },
                other => {
                    return Err(SimError::Snapshot(format!("unknown status '{other}'")))
                }
            };
            citizen.clock = world.clock.clone();
            citizen.sent = SentLog::from_records(&state.sent, m)?;
            citizen.received = ReceivedLog::from_records(&state.received, m)?;
            citizen.current_token = state.current_token.as_deref().map(token_parse).transpose()?;
            citizen.prev_index_vector = None;
            citizen.frozen_report = state
                .frozen
                .as_ref()
                .map(|f| -> Result<FrozenReport> {
                    Ok(FrozenReport {
                        epoch: f.epoch,
                        sent_tokens: f
                            .sent_tokens
                            .iter()
                            .map(|s| token_parse(s))
                            .collect::<Result<BTreeSet<_>>>()?,
                        sent_pairs: f
                            .sent_pairs
                            .iter()
                            .map(|(s, cell)| Ok((token_parse(s)?, CellIndex::new(*cell, m)?)))
                            .collect::<Result<BTreeSet<_>>>()?,
                        received_tokens: f
                            .received_tokens
                            .iter()
                            .map(|s| token_parse(s))
                            .collect::<Result<BTreeSet<_>>>()?,
                        received_pairs: f
                            .received_pairs
                            .iter()
                            .map(|(s, cell)| Ok((token_parse(s)?, CellIndex::new(*cell, m)?)))
                            .collect::<Result<BTreeSet<_>>>()?,
                    })
                })
                .transpose()?;
            citizen.tracing_phase = state.tracing_phase;
        }

        // Recompute private index-list slots from the snapshotted positions.
        let cells: Vec<CellIndex> = world
            .citizens
            .iter()
            .map(|c| world.cell_of(c.pos))
            .collect();
        for (citizen, (state, cell)) in world
            .citizens
            .iter_mut()
            .zip(self.citizens.iter().zip(cells))
        {
            if let Some(raws) = &state.prev_indices {
                let indices = raws
                    .iter()
                    .map(|&raw| CellIndex::new(raw, m).map_err(SimError::from))
                    .collect::<Result<Vec<_>>>()?;
                citizen.prev_index_vector = Some(
                    IndexVector::restore(indices, cell)
                        .map_err(|e| SimError::Snapshot(format!("index list: {e}")))?,
                );
            }
        }

        world.events = EventLog {
            contacts: self
                .events
                .contacts
                .iter()
                .map(|(epoch, sender, receiver, hex, cell)| {
                    Ok(ContactEvent {
                        epoch: *epoch,
                        sender: *sender,
                        receiver: *receiver,
                        token: token_parse(hex)?,
                        cell: CellIndex::new(*cell, m)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            infections: self
                .events
                .infections
                .iter()
                .map(|(epoch, infectee, infector, cell)| {
                    Ok(InfectionEvent {
                        epoch: *epoch,
                        infectee: *infectee,
                        infector: *infector,
                        cell: CellIndex::new(*cell, m)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            tests: self
                .events
                .tests
                .iter()
                .map(|&(epoch, citizen)| TestEvent { epoch, citizen })
                .collect(),
        };

        let mut registry = InfectedRegistry::new();
        for (hex, epoch) in &self.registry {
            registry.upload([token_parse(hex)?], *epoch);
        }

        let mut analytics = ServerAnalytics::default();
        for u in &self.analytics {
            analytics.uploads.push(StoredUpload {
                session: u.session,
                tokens_l: u
                    .tokens_l
                    .as_ref()
                    .map(|list| list.iter().map(|s| token_parse(s)).collect::<Result<_>>())
                    .transpose()?,
                pairs: u
                    .pairs
                    .iter()
                    .map(|(s, cell)| Ok((token_parse(s)?, CellIndex::new(*cell, m)?)))
                    .collect::<Result<_>>()?,
                epoch: u.epoch,
            });
        }

        let density_rounds = self
            .density_rounds
            .iter()
            .map(|d| {
                let histogram =
                    epimpc_core::LocationHistogram::from_counts(d.counts.clone());
                DensityRoundOutcome {
                    round: d.round,
                    epoch: d.epoch,
                    histogram: histogram.clone(),
                    oracle: histogram,
                }
            })
            .collect();

        let notifications = self
            .notifications
            .iter()
            .map(|n| NotificationRecord {
                epoch: n.epoch,
                citizen: n.citizen,
                suggestion: n.suggestion,
                kind: n.kind.clone(),
                value: n.value,
            })
            .collect();

        Ok((world, registry, analytics, density_rounds, notifications))
    }
}
