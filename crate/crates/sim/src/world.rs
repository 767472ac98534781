//! The agent world: citizens moving over the partitioned region, exchanging
//! tokens in proximity, and an infection process driving reports.
//!
//! Everything is single-threaded and keyed off derived rng streams, so a
//! `(config, seed)` pair fully determines the event log and all downstream
//! protocol traffic.
//!
//! A token exchange is registered when two participating citizens are within
//! the contact radius *and* inside the same cell, and the receiver records
//! its own current cell. Requiring the same cell keeps the recorded location
//! of one physical contact identical on both sides, which is what makes the
//! received-attached and sent-attached analytics paths agree exactly. The
//! infection process itself uses the plain radius rule: pathogens do not
//! care about cell borders or app participation.

use std::collections::BTreeSet;

use rand::Rng;

use epimpc_core::density::IndexVector;
use epimpc_core::{
    CellIndex, EpochClock, FieldParams, GroupParams, LocationHistogram, Partition, ReceivedLog,
    SentLog, Token,
};

use crate::config::WorldConfig;
use crate::error::{Result, SimError};
use crate::rng::{epoch_stream, setup_stream};

/// Infection progression; transitions only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Susceptible,
    /// Infected, positive test still pending.
    Infected { since: u64 },
    /// Tested positive and reported; tokens uploaded at `reported_at`.
    Reported { since: u64, reported_at: u64 },
}

impl Status {
    pub fn is_infectious(&self) -> bool {
        !matches!(self, Status::Susceptible)
    }
}

/// The token sets a citizen captured at the moment of its positive test;
/// these frozen views are what the infection-analytics protocols consume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenReport {
    pub epoch: u64,
    pub sent_tokens: BTreeSet<Token>,
    pub sent_pairs: BTreeSet<(Token, CellIndex)>,
    pub received_tokens: BTreeSet<Token>,
    pub received_pairs: BTreeSet<(Token, CellIndex)>,
}

#[derive(Debug, Clone)]
pub struct Citizen {
    pub id: u32,
    pub pos: (f64, f64),
    pub waypoint: (f64, f64),
    pub participating: bool,
    pub status: Status,
    pub clock: EpochClock,
    pub sent: SentLog,
    pub received: ReceivedLog,
    pub current_token: Option<Token>,
    /// Previous density-round index list, for the minimal-change rule.
    pub prev_index_vector: Option<IndexVector>,
    pub frozen_report: Option<FrozenReport>,
    /// Epoch offset of this citizen's tracing comparisons within the update
    /// interval.
    pub tracing_phase: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactEvent {
    pub epoch: u64,
    pub sender: u32,
    pub receiver: u32,
    pub token: Token,
    pub cell: CellIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfectionEvent {
    pub epoch: u64,
    pub infectee: u32,
    pub infector: u32,
    pub cell: CellIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestEvent {
    pub epoch: u64,
    pub citizen: u32,
}

/// Plaintext ground truth, consumed only by oracles and reports; never
/// serialized into any protocol message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub contacts: Vec<ContactEvent>,
    pub infections: Vec<InfectionEvent>,
    pub tests: Vec<TestEvent>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub cfg: WorldConfig,
    pub seed: u64,
    pub partition: Partition,
    pub field: FieldParams,
    pub group: GroupParams,
    /// Server-side clock, advanced in lockstep with the citizens'.
    pub clock: EpochClock,
    pub citizens: Vec<Citizen>,
    pub events: EventLog,
    pending_reports: Vec<u32>,
}

impl World {
    pub fn new(cfg: WorldConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let partition = if cfg.poi_cells.is_empty() {
            Partition::uniform(cfg.cell_count())?
        } else {
            let labels = (1..=cfg.cell_count())
                .map(|raw| {
                    if cfg.poi_cells.contains(&raw) {
                        format!("poi-{raw}")
                    } else {
                        format!("area-{raw}")
                    }
                })
                .collect();
            Partition::with_labels(labels)?
        };
        let field =
            FieldParams::smallest_prime_above(cfg.population_bound.max(u64::from(cfg.citizens)));
        let group = cfg.group.params();
        let clock = EpochClock::new(
            cfg.epoch_length_secs,
            cfg.retention_epochs,
            cfg.update_interval_epochs,
        )?;

        let mut init_rng = setup_stream(seed, "init");
        let width = cfg.region_width_m();
        let height = cfg.region_height_m();
        let mut citizens = Vec::with_capacity(cfg.citizens as usize);
        for id in 0..cfg.citizens {
            let pos = (init_rng.gen_range(0.0..width), init_rng.gen_range(0.0..height));
            let waypoint = (init_rng.gen_range(0.0..width), init_rng.gen_range(0.0..height));
            let participating = init_rng.gen_bool(cfg.participation_rate);
            let tracing_phase = init_rng.gen_range(0..cfg.update_interval_epochs);
            citizens.push(Citizen {
                id,
                pos,
                waypoint,
                participating,
                status: Status::Susceptible,
                clock: clock.clone(),
                sent: SentLog::new(),
                received: ReceivedLog::new(),
                current_token: None,
                prev_index_vector: None,
                frozen_report: None,
                tracing_phase,
            });
        }

        // Seed the outbreak.
        let mut seed_rng = setup_stream(seed, "outbreak");
        let mut remaining: Vec<u32> = (0..cfg.citizens).collect();
        for _ in 0..cfg.initial_infected.min(cfg.citizens) {
            let pick = seed_rng.gen_range(0..remaining.len());
            let id = remaining.swap_remove(pick);
            citizens[id as usize].status = Status::Infected { since: 0 };
        }
        citizens.sort_by_key(|c| c.id);

        Ok(Self {
            cfg,
            seed,
            partition,
            field,
            group,
            clock,
            citizens,
            events: EventLog::default(),
            pending_reports: Vec::new(),
        })
    }

    pub fn epoch(&self) -> u64 {
        self.clock.current_epoch()
    }

    pub fn cell_of(&self, pos: (f64, f64)) -> CellIndex {
        let cols = self.cfg.grid_cols;
        let rows = self.cfg.grid_rows;
        let col = ((pos.0 / self.cfg.cell_size_m) as u32).min(cols - 1);
        let row = ((pos.1 / self.cfg.cell_size_m) as u32).min(rows - 1);
        CellIndex::from_slot((row * cols + col) as usize)
    }

    /// Citizens newly reported since the last call; the harness flushes their
    /// uploads onto the bus.
    pub fn take_new_reports(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.pending_reports)
    }

    /// The plaintext per-cell census of participating citizens.
    pub fn census(&self) -> LocationHistogram {
        let mut histogram = LocationHistogram::zeros(self.cfg.cell_count());
        for citizen in self.citizens.iter().filter(|c| c.participating) {
            histogram
                .add_cell(self.cell_of(citizen.pos))
                .expect("cell within partition");
        }
        histogram
    }

    /// Advances the world by one epoch: movement, token broadcast and
    /// exchange, infection sampling, pruning, report transitions.
    pub fn step_epoch(&mut self) {
        let epoch = self.clock.advance();
        let m = self.cfg.cell_count();

        // Movement: random waypoint, optionally biased toward the places of
        // interest.
        let mut move_rng = epoch_stream(self.seed, epoch, "move");
        let width = self.cfg.region_width_m();
        let height = self.cfg.region_height_m();
        let speed = self.cfg.movement_speed_m_per_epoch;
        let cols = self.cfg.grid_cols;
        let size = self.cfg.cell_size_m;
        let poi_bias = self.cfg.poi_bias;
        let poi_cells = self.cfg.poi_cells.clone();
        for citizen in &mut self.citizens {
            let (dx, dy) = (
                citizen.waypoint.0 - citizen.pos.0,
                citizen.waypoint.1 - citizen.pos.1,
            );
            let dist = (dx * dx + dy * dy).sqrt();
            if dist <= speed {
                citizen.pos = citizen.waypoint;
                citizen.waypoint = if poi_bias > 0.0 && move_rng.gen_bool(poi_bias) {
                    let raw = poi_cells[move_rng.gen_range(0..poi_cells.len())];
                    let slot = raw - 1;
                    let (row, col) = (slot / cols, slot % cols);
                    (
                        f64::from(col) * size + move_rng.gen_range(0.0..size),
                        f64::from(row) * size + move_rng.gen_range(0.0..size),
                    )
                } else {
                    (
                        move_rng.gen_range(0.0..width),
                        move_rng.gen_range(0.0..height),
                    )
                };
            } else if dist > 0.0 {
                citizen.pos.0 += dx / dist * speed;
                citizen.pos.1 += dy / dist * speed;
            }
        }

        // Token broadcast.
        let mut token_rng = epoch_stream(self.seed, epoch, "token");
        let cells: Vec<CellIndex> = self.citizens.iter().map(|c| self.cell_of(c.pos)).collect();
        for (citizen, &cell) in self.citizens.iter_mut().zip(&cells) {
            if citizen.participating {
                let token = citizen
                    .sent
                    .advance_epoch(&mut citizen.clock, cell, &mut token_rng);
                citizen.current_token = Some(token);
            } else {
                citizen.clock.advance();
                citizen.current_token = None;
            }
        }

        // Proximity pairs.
        let radius_sq = self.cfg.contact_radius_m * self.cfg.contact_radius_m;
        let mut proximity: Vec<(usize, usize)> = Vec::new();
        for i in 0..self.citizens.len() {
            for j in (i + 1)..self.citizens.len() {
                let (a, b) = (&self.citizens[i], &self.citizens[j]);
                let (dx, dy) = (a.pos.0 - b.pos.0, a.pos.1 - b.pos.1);
                if dx * dx + dy * dy <= radius_sq {
                    proximity.push((i, j));
                }
            }
        }

        // Token exchange: both directions, participants in the same cell.
        for &(i, j) in &proximity {
            if cells[i] != cells[j] {
                continue;
            }
            for (s, r) in [(i, j), (j, i)] {
                if !self.citizens[s].participating || !self.citizens[r].participating {
                    continue;
                }
                let token = match self.citizens[s].current_token {
                    Some(t) => t,
                    None => continue,
                };
                let cell = cells[r];
                self.citizens[r]
                    .received
                    .record(token, cell.get(), epoch, m)
                    .expect("cell within partition");
                self.events.contacts.push(ContactEvent {
                    epoch,
                    sender: self.citizens[s].id,
                    receiver: self.citizens[r].id,
                    token,
                    cell,
                });
            }
        }

        // Infection sampling over plain proximity, applied after the sweep so
        // that new infections do not transmit within the same epoch.
        let mut infect_rng = epoch_stream(self.seed, epoch, "infect");
        let mut transmissions: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &proximity {
            let (si, sj) = (self.citizens[i].status, self.citizens[j].status);
            let pair = match (si.is_infectious(), sj.is_infectious()) {
                (true, false) => Some((i, j)),
                (false, true) => Some((j, i)),
                _ => None,
            };
            if let Some((infector, infectee)) = pair {
                if infect_rng.gen_bool(self.cfg.transmission_prob) {
                    transmissions.push((infector, infectee));
                }
            }
        }
        for (infector, infectee) in transmissions {
            if self.citizens[infectee].status == Status::Susceptible {
                self.citizens[infectee].status = Status::Infected { since: epoch };
                self.events.infections.push(InfectionEvent {
                    epoch,
                    infectee: self.citizens[infectee].id,
                    infector: self.citizens[infector].id,
                    cell: cells[infectee],
                });
            }
        }

        // Report transitions. Logs are pruned at their read points (here at
        // freeze time, and before every comparison) rather than every epoch,
        // which keeps long runs linear; an unpruned log is never read.
        for idx in 0..self.citizens.len() {
            if let Status::Infected { since } = self.citizens[idx].status {
                if epoch.saturating_sub(since) >= self.cfg.test_delay_epochs {
                    let citizen = &mut self.citizens[idx];
                    citizen.sent.prune_expired(&citizen.clock);
                    citizen.received.prune_expired(&citizen.clock);
                    citizen.status = Status::Reported {
                        since,
                        reported_at: epoch,
                    };
                    citizen.frozen_report = Some(FrozenReport {
                        epoch,
                        sent_tokens: citizen.sent.export_tokens(),
                        sent_pairs: citizen.sent.export_with_cells(),
                        received_tokens: citizen.received.tokens(),
                        received_pairs: citizen.received.token_cells(),
                    });
                    let id = citizen.id;
                    self.events.tests.push(TestEvent { epoch, citizen: id });
                    self.pending_reports.push(id);
                }
            }
        }
    }

    pub fn run_epochs(&mut self, n: u64) {
        for _ in 0..n {
            self.step_epoch();
        }
    }

    pub fn citizen(&self, id: u32) -> Result<&Citizen> {
        self.citizens
            .get(id as usize)
            .ok_or_else(|| SimError::Config(format!("no citizen {id}")))
    }

    pub fn citizen_mut(&mut self, id: u32) -> Result<&mut Citizen> {
        self.citizens
            .get_mut(id as usize)
            .ok_or_else(|| SimError::Config(format!("no citizen {id}")))
    }

    /// Moves a citizen to the center of a cell (adversary and privacy
    /// scenarios).
    pub fn teleport_to_cell(&mut self, id: u32, cell: CellIndex) -> Result<()> {
        let cols = self.cfg.grid_cols;
        let size = self.cfg.cell_size_m;
        let slot = cell.slot() as u32;
        let (row, col) = (slot / cols, slot % cols);
        let pos = (
            (f64::from(col) + 0.5) * size,
            (f64::from(row) + 0.5) * size,
        );
        self.citizen_mut(id)?.pos = pos;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> WorldConfig {
        WorldConfig {
            citizens: 6,
            epochs: 40,
            retention_epochs: 40,
            update_interval_epochs: 10,
            test_delay_epochs: 5,
            initial_infected: 2,
            transmission_prob: 0.2,
            ..WorldConfig::demo()
        }
    }

    #[test]
    fn identical_seeds_give_identical_event_logs() {
        let run = |seed| {
            let mut w = World::new(tiny_config(), seed).unwrap();
            w.run_epochs(40);
            w.events
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn close_same_cell_citizens_exchange_tokens() {
        let mut w = World::new(tiny_config(), 1).unwrap();
        // Park everyone far apart, then bring 0 and 1 within one meter
        // inside the same cell.
        for id in 0..6 {
            w.teleport_to_cell(id, CellIndex::from_slot(id as usize * 3)).unwrap();
            let c = w.citizen_mut(id).unwrap();
            c.waypoint = c.pos;
        }
        w.citizens[1].pos = (w.citizens[0].pos.0 + 1.0, w.citizens[0].pos.1);
        w.citizens[1].waypoint = w.citizens[1].pos;
        let mut frozen = w.clone();
        frozen.cfg.movement_speed_m_per_epoch = 0.0;
        frozen.step_epoch();
        let t0 = frozen.citizens[0].current_token.unwrap();
        let t1 = frozen.citizens[1].current_token.unwrap();
        assert!(frozen.citizens[1].received.tokens().contains(&t0));
        assert!(frozen.citizens[0].received.tokens().contains(&t1));
        // And nobody else received anything.
        for id in 2..6 {
            assert!(frozen.citizens[id].received.is_empty());
        }
    }

    #[test]
    fn distant_citizens_do_not_exchange() {
        let mut w = World::new(tiny_config(), 2).unwrap();
        w.cfg.movement_speed_m_per_epoch = 0.0;
        for id in 0..6u32 {
            let pos = (5.0 + 12.0 * f64::from(id), 5.0);
            let c = w.citizen_mut(id).unwrap();
            c.pos = pos; // >= 10 m apart pairwise
            c.waypoint = pos;
        }
        w.step_epoch();
        assert!(w.citizens.iter().all(|c| c.received.is_empty()));
    }

    #[test]
    fn reports_fire_after_test_delay() {
        let mut w = World::new(tiny_config(), 3).unwrap();
        w.run_epochs(5);
        let reported = w.take_new_reports();
        // The two initially infected citizens (since = 0) report at epoch 5.
        assert_eq!(reported.len(), 2);
        for id in reported {
            let c = w.citizen(id).unwrap();
            assert!(matches!(c.status, Status::Reported { reported_at: 5, .. }));
            let frozen = c.frozen_report.as_ref().unwrap();
            assert_eq!(frozen.epoch, 5);
            assert_eq!(frozen.sent_tokens.len(), 5);
        }
    }

    #[test]
    fn positions_stay_in_region_and_cells_valid() {
        let mut w = World::new(tiny_config(), 4).unwrap();
        w.run_epochs(40);
        for c in &w.citizens {
            assert!(c.pos.0 >= 0.0 && c.pos.0 <= w.cfg.region_width_m());
            assert!(c.pos.1 >= 0.0 && c.pos.1 <= w.cfg.region_height_m());
            let cell = w.cell_of(c.pos);
            assert!(cell.get() >= 1 && cell.get() <= w.cfg.cell_count());
        }
    }

    #[test]
    fn all_broadcast_tokens_are_globally_unique() {
        let mut w = World::new(tiny_config(), 5).unwrap();
        w.run_epochs(40);
        let mut seen = BTreeSet::new();
        for c in &w.citizens {
            for (token, _) in c.sent.iter() {
                assert!(seen.insert(*token), "token collision at desk scale");
            }
        }
    }

    #[test]
    fn nobody_receives_their_own_broadcast() {
        let mut w = World::new(tiny_config(), 7).unwrap();
        w.run_epochs(40);
        for c in &w.citizens {
            let own = c.sent.export_tokens();
            for token in c.received.tokens() {
                assert!(!own.contains(&token), "self-reception is impossible");
            }
        }
        for contact in &w.events.contacts {
            assert_ne!(contact.sender, contact.receiver);
        }
    }

    #[test]
    fn non_participants_stay_silent() {
        let mut cfg = tiny_config();
        cfg.participation_rate = 0.0;
        let mut w = World::new(cfg, 6).unwrap();
        w.run_epochs(10);
        for c in &w.citizens {
            assert!(c.sent.is_empty());
            assert!(c.received.is_empty());
            assert!(c.current_token.is_none());
        }
        assert!(w.events.contacts.is_empty());
    }
}
