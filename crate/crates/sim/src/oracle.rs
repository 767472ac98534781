//! Plaintext oracles computed solely from the ground-truth event log.
//!
//! Each oracle re-derives the ideal functionality's output (a census, a set
//! intersection cardinality, an exposure histogram) directly from recorded
//! contacts, infections and test times, never touching token stores,
//! registries or any protocol state. Honest protocol runs must match these
//! outputs exactly.

use std::collections::{BTreeMap, BTreeSet};

use epimpc_core::analytics::ExposureRecord;
use epimpc_core::analytics::{histogram_from_exposures, timeline_from_exposures, TimeBuckets};
use epimpc_core::density::SessionId;
use epimpc_core::{CellIndex, LocationHistogram, Token};

use crate::error::Result;
use crate::world::{EventLog, World};

/// Report times per citizen, extracted from test events.
pub fn report_times(events: &EventLog) -> BTreeMap<u32, u64> {
    events
        .tests
        .iter()
        .map(|test| (test.citizen, test.epoch))
        .collect()
}

/// The per-cell census of participating citizens, straight from positions.
pub fn census_oracle(world: &World) -> LocationHistogram {
    world.census()
}

/// `R(i)` at epoch `at`: tokens citizen `i` received inside the retention
/// window.
pub fn received_tokens_oracle(
    events: &EventLog,
    citizen: u32,
    at: u64,
    retention: u64,
) -> BTreeSet<Token> {
    let start = at.saturating_sub(retention);
    events
        .contacts
        .iter()
        .filter(|c| c.receiver == citizen && c.epoch >= start && c.epoch <= at)
        .map(|c| c.token)
        .collect()
}

/// `R(i) ∩ L` at epoch `at`: the received tokens of `i` whose sender had
/// reported by `at`, with the sender's upload inside the registry retention
/// window and the token inside the sender's upload window.
pub fn tracing_intersection_oracle(
    events: &EventLog,
    reports: &BTreeMap<u32, u64>,
    citizen: u32,
    at: u64,
    retention: u64,
) -> BTreeSet<Token> {
    let window_start = at.saturating_sub(retention);
    events
        .contacts
        .iter()
        .filter(|c| c.receiver == citizen && c.epoch >= window_start && c.epoch <= at)
        .filter(|c| match reports.get(&c.sender) {
            Some(&reported_at) => {
                reported_at <= at
                    && reported_at >= window_start
                    && c.epoch >= reported_at.saturating_sub(retention)
                    && c.epoch <= reported_at
            }
            None => false,
        })
        .map(|c| c.token)
        .collect()
}

/// Exposure sets of every reported citizen, as the analytics protocols are
/// meant to compute them: citizen `i` (reported at `u_i`) is exposed in cell
/// `c` when it received a token there from a citizen `j` reported at `u_j`,
/// with the contact inside both upload windows.
pub fn exposures_oracle(
    events: &EventLog,
    reports: &BTreeMap<u32, u64>,
    retention: u64,
) -> Vec<ExposureRecord> {
    let mut records = Vec::with_capacity(reports.len());
    for (&citizen, &reported_at) in reports {
        let mut cells: BTreeSet<CellIndex> = BTreeSet::new();
        for contact in &events.contacts {
            if contact.receiver != citizen {
                continue;
            }
            let in_own_window = contact.epoch >= reported_at.saturating_sub(retention)
                && contact.epoch <= reported_at;
            if !in_own_window {
                continue;
            }
            if let Some(&sender_reported) = reports.get(&contact.sender) {
                let in_sender_window = contact.epoch
                    >= sender_reported.saturating_sub(retention)
                    && contact.epoch <= sender_reported;
                if in_sender_window {
                    cells.insert(contact.cell);
                }
            }
        }
        records.push(ExposureRecord {
            session: SessionId::new(u64::from(citizen)),
            epoch: reported_at,
            exposure: epimpc_core::analytics::ExposureSet::from_cells(cells),
        });
    }
    records
}

/// The whole-period infection histogram from the oracle exposures.
pub fn infection_histogram_oracle(
    events: &EventLog,
    reports: &BTreeMap<u32, u64>,
    retention: u64,
    m: u32,
) -> Result<LocationHistogram> {
    Ok(histogram_from_exposures(
        &exposures_oracle(events, reports, retention),
        m,
    )?)
}

/// The bucketed timeline from the oracle exposures.
pub fn timeline_oracle(
    events: &EventLog,
    reports: &BTreeMap<u32, u64>,
    retention: u64,
    buckets: &TimeBuckets,
    m: u32,
) -> Result<epimpc_core::analytics::Timeline> {
    Ok(timeline_from_exposures(
        &exposures_oracle(events, reports, retention),
        buckets,
        m,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ContactEvent, TestEvent};

    fn token(id: u8) -> Token {
        Token::from_bytes([id; 16])
    }

    fn cell(raw: u32) -> CellIndex {
        CellIndex::new(raw, 9).unwrap()
    }

    fn contact(epoch: u64, sender: u32, receiver: u32, tok: u8, c: u32) -> ContactEvent {
        ContactEvent {
            epoch,
            sender,
            receiver,
            token: token(tok),
            cell: cell(c),
        }
    }

    #[test]
    fn tracing_oracle_applies_both_windows() {
        let mut events = EventLog::default();
        events.contacts.push(contact(10, 1, 0, 1, 2)); // sender 1 reports at 12
        events.contacts.push(contact(2, 2, 0, 2, 3)); // too old for sender 2's window
        events.contacts.push(contact(11, 3, 0, 3, 4)); // sender never reports
        events.tests.push(TestEvent { epoch: 12, citizen: 1 });
        events.tests.push(TestEvent { epoch: 9, citizen: 2 });
        let reports = report_times(&events);

        let got = tracing_intersection_oracle(&events, &reports, 0, 20, 5);
        // Token 1: received at 10 >= 20-5, sender reported at 12 within
        // registry window [15, 20]? 12 < 15: expired. So empty.
        assert!(got.is_empty());

        let got = tracing_intersection_oracle(&events, &reports, 0, 14, 5);
        // Window [9, 14]: token 1 (epoch 10, sender reported 12 >= 9) counts;
        // token 2's contact epoch 2 < 9 is out; token 3's sender not reported.
        assert_eq!(got, [token(1)].into_iter().collect());
    }

    #[test]
    fn exposures_oracle_requires_both_parties_reported() {
        let mut events = EventLog::default();
        events.contacts.push(contact(5, 1, 0, 1, 2));
        events.contacts.push(contact(5, 0, 1, 9, 2));
        events.contacts.push(contact(6, 2, 0, 2, 3)); // sender 2 never reports
        events.tests.push(TestEvent { epoch: 8, citizen: 0 });
        events.tests.push(TestEvent { epoch: 7, citizen: 1 });
        let reports = report_times(&events);

        let records = exposures_oracle(&events, &reports, 100);
        assert_eq!(records.len(), 2);
        let by_session: BTreeMap<u64, &ExposureRecord> =
            records.iter().map(|r| (r.session.get(), r)).collect();
        assert_eq!(
            by_session[&0].exposure.cells(),
            &[cell(2)].into_iter().collect()
        );
        assert_eq!(
            by_session[&1].exposure.cells(),
            &[cell(2)].into_iter().collect()
        );
    }
}
