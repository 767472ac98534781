//! In-memory message bus with full transcript capture.
//!
//! Every protocol message crosses the bus as its serialized wire line and is
//! re-parsed on delivery, so the receiving role only ever works from bytes.
//! The transcript is append-only and complete; privacy assertions scan it.

use std::fmt;

use crate::error::Result;
use crate::wire::WireMessage;

/// A party on the bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Citizen(u32),
    /// The mask-collecting aggregation server (e.g. the tele-operator).
    ServerOne,
    /// The combining server, which also runs the infected-token registry and
    /// the analytics (e.g. the health authority).
    ServerTwo,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Citizen(id) => write!(f, "citizen:{id}"),
            Role::ServerOne => write!(f, "server1"),
            Role::ServerTwo => write!(f, "server2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub epoch: u64,
    pub from: Role,
    pub to: Role,
    pub line: String,
}

impl TranscriptEntry {
    pub fn render(&self) -> String {
        format!("{} {} -> {} {}", self.epoch, self.from, self.to, self.line)
    }
}

/// The bus. Single-threaded by design; send order is transcript order.
#[derive(Debug, Default, Clone)]
pub struct Bus {
    entries: Vec<TranscriptEntry>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Serializes, records, and re-parses the message for the receiver.
    pub fn send(&mut self, epoch: u64, from: Role, to: Role, msg: &WireMessage) -> Result<WireMessage> {
        let line = msg.encode();
        let delivered = WireMessage::decode(&line)?;
        self.entries.push(TranscriptEntry {
            epoch,
            from,
            to,
            line,
        });
        Ok(delivered)
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Messages received by a role, rendered (an inbound view).
    pub fn inbound_lines(&self, to: Role) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.to == to)
            .map(TranscriptEntry::render)
            .collect()
    }

    pub fn render_log(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.render());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::NotifyV1;

    #[test]
    fn send_records_and_delivers() {
        let mut bus = Bus::new();
        let msg = WireMessage::Notify(NotifyV1 {
            citizen_session: 4,
            bit: 1,
        });
        let delivered = bus
            .send(9, Role::ServerTwo, Role::Citizen(4), &msg)
            .unwrap();
        assert_eq!(delivered, msg);
        assert_eq!(bus.len(), 1);
        let rendered = bus.entries()[0].render();
        assert!(rendered.starts_with("9 server2 -> citizen:4 notify_v1 "));
        assert_eq!(bus.inbound_lines(Role::Citizen(4)).len(), 1);
        assert!(bus.inbound_lines(Role::ServerOne).is_empty());
    }
}
