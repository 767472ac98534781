//! Per-citizen token lifecycle: random epoch tokens, the sent log `L(i)`,
//! the received log behind `R(i)` and `RA(i)`, and retention-time pruning.
//!
//! The received log keeps one unified record per `(token, cell)` pair and
//! derives `R(i)` / `RA(i)` by projection, so the two views cannot drift
//! apart. Entries exactly `retention_epochs` old are still inside the window
//! (inclusive boundary).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::partition::CellIndex;

/// Width of every token in a deployment.
pub const TOKEN_BYTES: usize = 16;

/// A fixed-width uniformly random identifier, broadcast during one epoch.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token([u8; TOKEN_BYTES]);

impl Token {
    pub fn random(rng: &mut (impl RngCore + ?Sized)) -> Self {
        let mut bytes = [0u8; TOKEN_BYTES];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn from_bytes(bytes: [u8; TOKEN_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; TOKEN_BYTES] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.as_bytes()).map_err(|_| Error::InvalidHex)?;
        let bytes: [u8; TOKEN_BYTES] = bytes.try_into().map_err(|_| Error::InvalidHex)?;
        Ok(Self(bytes))
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Token({})", self.to_hex())
    }
}

/// Epoch counter plus the deployment's retention and update-interval settings.
///
/// `current_epoch` only moves forward; `retention_epochs >= update_interval_epochs >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochClock {
    epoch_length_secs: u64,
    retention_epochs: u64,
    update_interval_epochs: u64,
    current: u64,
}

impl EpochClock {
    pub fn new(
        epoch_length_secs: u64,
        retention_epochs: u64,
        update_interval_epochs: u64,
    ) -> Result<Self> {
        if update_interval_epochs == 0 {
            return Err(Error::InvalidParameter("update interval must be >= 1 epoch"));
        }
        if retention_epochs < update_interval_epochs {
            return Err(Error::InvalidParameter(
                "retention must cover at least one update interval",
            ));
        }
        Ok(Self {
            epoch_length_secs,
            retention_epochs,
            update_interval_epochs,
            current: 0,
        })
    }

    /// Rebuilds a clock at a given epoch (snapshot restore).
    pub fn restore(
        epoch_length_secs: u64,
        retention_epochs: u64,
        update_interval_epochs: u64,
        current: u64,
    ) -> Result<Self> {
        let mut clock = Self::new(epoch_length_secs, retention_epochs, update_interval_epochs)?;
        clock.current = current;
        Ok(clock)
    }

    pub fn advance(&mut self) -> u64 {
        self.current += 1;
        self.current
    }

    pub fn current_epoch(&self) -> u64 {
        self.current
    }

    pub fn epoch_length_secs(&self) -> u64 {
        self.epoch_length_secs
    }

    pub fn retention_epochs(&self) -> u64 {
        self.retention_epochs
    }

    pub fn update_interval_epochs(&self) -> u64 {
        self.update_interval_epochs
    }

    /// Oldest epoch still inside the retention window (inclusive).
    pub fn window_start(&self) -> u64 {
        self.current.saturating_sub(self.retention_epochs)
    }

    pub fn in_window(&self, epoch: u64) -> bool {
        epoch >= self.window_start()
    }
}

/// What a citizen remembers about one of its own broadcast tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentEntry {
    pub epoch: u64,
    /// Cell the citizen was in when broadcasting; feeds the variant where
    /// locations are attached to sent instead of received tokens.
    pub cell: CellIndex,
}

/// The set `L(i)`: tokens citizen `i` produced during the retention time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentLog {
    entries: BTreeMap<Token, SentEntry>,
}

impl SentLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a new epoch: advances the clock, draws a fresh token, records it
    /// and returns it as this epoch's broadcast token.
    pub fn advance_epoch(
        &mut self,
        clock: &mut EpochClock,
        cell: CellIndex,
        rng: &mut (impl RngCore + ?Sized),
    ) -> Token {
        let epoch = clock.advance();
        let token = Token::random(rng);
        self.entries.insert(token, SentEntry { epoch, cell });
        token
    }

    /// Re-inserts a known entry (snapshot restore).
    pub fn insert_entry(&mut self, token: Token, entry: SentEntry) {
        self.entries.insert(token, entry);
    }

    /// Drops every entry strictly older than the retention window.
    pub fn prune_expired(&mut self, clock: &EpochClock) {
        let start = clock.window_start();
        self.entries.retain(|_, e| e.epoch >= start);
    }

    /// The uploadable token set `L(i)`, without epochs.
    pub fn export_tokens(&self) -> BTreeSet<Token> {
        self.entries.keys().copied().collect()
    }

    /// `LA(i)`: sent tokens with the cell they were broadcast from.
    pub fn export_with_cells(&self) -> BTreeSet<(Token, CellIndex)> {
        self.entries.iter().map(|(t, e)| (*t, e.cell)).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Token, &SentEntry)> {
        self.entries.iter()
    }

    /// Newline-delimited `hex(token),cell,epoch` records, the persistence
    /// format shared by both log types.
    pub fn to_records(&self) -> String {
        self.entries
            .iter()
            .map(|(token, e)| format_record(token, e.cell, e.epoch))
            .collect()
    }

    pub fn from_records(text: &str, m: u32) -> Result<Self> {
        let mut log = Self::new();
        for line in text.lines() {
            let (token, cell, epoch) = parse_record(line, m)?;
            log.insert_entry(token, SentEntry { epoch, cell });
        }
        Ok(log)
    }
}

/// The unified received record; `R(i)` and `RA(i)` are projections of it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceivedLog {
    entries: BTreeMap<(Token, CellIndex), u64>,
}

impl ReceivedLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a received token together with the receiving cell. Duplicate
    /// `(token, cell)` pairs are stored once; the first receipt epoch wins.
    pub fn record(&mut self, token: Token, cell: u32, epoch: u64, m: u32) -> Result<()> {
        let cell = CellIndex::new(cell, m)?;
        self.entries.entry((token, cell)).or_insert(epoch);
        Ok(())
    }

    /// Re-inserts a known entry (snapshot restore).
    pub fn insert_entry(&mut self, token: Token, cell: CellIndex, epoch: u64) {
        self.entries.entry((token, cell)).or_insert(epoch);
    }

    pub fn prune_expired(&mut self, clock: &EpochClock) {
        let start = clock.window_start();
        self.entries.retain(|_, &mut epoch| epoch >= start);
    }

    /// The projection `R(i)`: received tokens only.
    pub fn tokens(&self) -> BTreeSet<Token> {
        self.entries.keys().map(|(t, _)| *t).collect()
    }

    /// The projection `RA(i)`: (token, cell) pairs.
    pub fn token_cells(&self) -> BTreeSet<(Token, CellIndex)> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Token, CellIndex), &u64)> {
        self.entries.iter()
    }

    /// Newline-delimited `hex(token),cell,epoch` records, the persistence
    /// format shared by both log types.
    pub fn to_records(&self) -> String {
        self.entries
            .iter()
            .map(|((token, cell), &epoch)| format_record(token, *cell, epoch))
            .collect()
    }

    pub fn from_records(text: &str, m: u32) -> Result<Self> {
        let mut log = Self::new();
        for line in text.lines() {
            let (token, cell, epoch) = parse_record(line, m)?;
            log.insert_entry(token, cell, epoch);
        }
        Ok(log)
    }
}

fn format_record(token: &Token, cell: CellIndex, epoch: u64) -> String {
    use core::fmt::Write;
    let mut line = String::new();
    let _ = writeln!(line, "{},{},{}", token.to_hex(), cell.get(), epoch);
    line
}

fn parse_record(line: &str, m: u32) -> Result<(Token, CellIndex, u64)> {
    let mut parts = line.split(',');
    let token = Token::from_hex(parts.next().ok_or(Error::InvalidHex)?)?;
    let cell: u32 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(Error::InvalidParameter("bad cell in log record"))?;
    let epoch: u64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(Error::InvalidParameter("bad epoch in log record"))?;
    if parts.next().is_some() {
        return Err(Error::InvalidParameter("trailing fields in log record"));
    }
    Ok((token, CellIndex::new(cell, m)?, epoch))
}
