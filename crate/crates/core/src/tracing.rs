//! Contact tracing against the server-side infected-token registry.
//!
//! Two deployment patterns sit on top of the cardinality protocol. Under
//! suggestion 1 the citizen is the receiver and learns `|R(i) ∩ L|` itself;
//! a minimum-size guard on the citizen's set blunts single-token probing.
//! Under suggestion 2 the server is the receiver, keeps the cardinality, and
//! sends the citizen a single bit: whether the count strictly exceeds a
//! server-private threshold.

use alloc::collections::{BTreeMap, BTreeSet};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::psi::{run_local, PsiMode, PsiOutput};
use crate::token::{EpochClock, Token};

/// The registry `L`: every token uploaded by reported-infected citizens,
/// stamped with its upload epoch for retention pruning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InfectedRegistry {
    entries: BTreeMap<Token, u64>,
}

impl InfectedRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unions a reported citizen's token set into the registry. Re-uploaded
    /// tokens keep their original upload epoch.
    pub fn upload(&mut self, tokens: impl IntoIterator<Item = Token>, epoch: u64) {
        for token in tokens {
            self.entries.entry(token).or_insert(epoch);
        }
    }

    /// Drops entries whose upload epoch left the retention window.
    pub fn prune_expired(&mut self, clock: &EpochClock) {
        let start = clock.window_start();
        self.entries.retain(|_, &mut epoch| epoch >= start);
    }

    pub fn tokens(&self) -> BTreeSet<Token> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, token: &Token) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Token, &u64)> {
        self.entries.iter()
    }
}

/// Server-side tracing policy. The threshold never leaves the server; no
/// message type carries it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracingPolicy {
    /// Notify only when `|R(i) ∩ L| > threshold` (strict).
    pub threshold: u64,
    /// Suggestion-1 comparisons require `|R(i)| > min_receiver_set`.
    pub min_receiver_set: usize,
    /// Epochs between a citizen's comparisons.
    pub update_interval_epochs: u64,
}

impl TracingPolicy {
    pub fn new(threshold: u64, min_receiver_set: usize, update_interval_epochs: u64) -> Self {
        Self {
            threshold,
            min_receiver_set,
            update_interval_epochs,
        }
    }

    /// The server-side decision rule of suggestion 2.
    pub fn notify(&self, cardinality: u64) -> bool {
        cardinality > self.threshold
    }
}

/// Which deployment pattern a comparison runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suggestion {
    One,
    Two,
}

/// Suggestion 1: the citizen (receiver, `X = R(i)`) learns `|R(i) ∩ L|`;
/// the server (sender, `Y = L`) learns nothing beyond `|R(i)|`.
pub fn run_suggestion1(
    received: &BTreeSet<Token>,
    registry: &InfectedRegistry,
    policy: &TracingPolicy,
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<u64> {
    if received.len() <= policy.min_receiver_set {
        return Err(Error::ComparisonRefused {
            size: received.len(),
            min: policy.min_receiver_set,
        });
    }
    match run_local(
        received,
        &registry.tokens(),
        PsiMode::Cardinality,
        params,
        Some(policy.min_receiver_set),
        rng,
    )? {
        PsiOutput::Cardinality(n) => Ok(n as u64),
        PsiOutput::Intersection(_) => Err(Error::WrongPhase),
    }
}

/// What suggestion 2 produced. Only the bit is ever transmitted; the
/// cardinality stays on the server and is exposed here for oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suggestion2Outcome {
    pub notified: bool,
    server_cardinality: u64,
}

impl Suggestion2Outcome {
    pub fn server_cardinality(&self) -> u64 {
        self.server_cardinality
    }
}

/// Suggestion 2: the server (receiver, `X = L`) computes `|R(i) ∩ L|` and
/// sends the citizen (sender, `Y = R(i)`) a 1 iff it strictly exceeds the
/// threshold. Single-token citizen inputs are permitted.
pub fn run_suggestion2(
    received: &BTreeSet<Token>,
    registry: &InfectedRegistry,
    policy: &TracingPolicy,
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Suggestion2Outcome> {
    let cardinality = match run_local(
        &registry.tokens(),
        received,
        PsiMode::Cardinality,
        params,
        None,
        rng,
    )? {
        PsiOutput::Cardinality(n) => n as u64,
        PsiOutput::Intersection(_) => return Err(Error::WrongPhase),
    };
    Ok(Suggestion2Outcome {
        notified: policy.notify(cardinality),
        server_cardinality: cardinality,
    })
}

/// What a probing citizen walked away with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerKnowledge {
    /// Suggestion 1 handed over the exact cardinality.
    CardinalityLearned(u64),
    /// The minimum-size guard refused the comparison.
    Refused,
    /// Suggestion 2 revealed only the notification bit.
    NotificationBit(bool),
}

/// Runs a probe with an attacker-chosen token set, e.g. tokens the attacker
/// recorded from one specific person. Exists to demonstrate the attack
/// surface; expected outcomes are fixed by the tests.
pub fn attack_probe(
    attacker_tokens: &BTreeSet<Token>,
    registry: &InfectedRegistry,
    policy: &TracingPolicy,
    suggestion: Suggestion,
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<AttackerKnowledge> {
    match suggestion {
        Suggestion::One => match run_suggestion1(attacker_tokens, registry, policy, params, rng) {
            Ok(n) => Ok(AttackerKnowledge::CardinalityLearned(n)),
            Err(Error::ComparisonRefused { .. }) => Ok(AttackerKnowledge::Refused),
            Err(e) => Err(e),
        },
        Suggestion::Two => {
            let outcome = run_suggestion2(attacker_tokens, registry, policy, params, rng)?;
            Ok(AttackerKnowledge::NotificationBit(outcome.notified))
        }
    }
}

/// The single-token probe from the attack analysis: `R = {target_token}`.
pub fn single_token_attack_probe(
    target_token: Token,
    registry: &InfectedRegistry,
    policy: &TracingPolicy,
    suggestion: Suggestion,
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<AttackerKnowledge> {
    let mut set = BTreeSet::new();
    set.insert(target_token);
    attack_probe(&set, registry, policy, suggestion, params, rng)
}
