//! Private set intersection over the commutative cipher.
//!
//! Three messages realize both functionalities: the receiver sends its set
//! encrypted under a fresh key, the sender re-encrypts those ciphertexts
//! under its own key and ships them back together with its own encrypted
//! set, and the receiver strips its key layer and matches.
//!
//! In cardinality mode the sender permutes the double encryptions, so the
//! receiver learns only how many elements match. In intersection mode the
//! order is preserved, which lets the receiver map matching positions back
//! to its own inputs; the sender's non-matching elements stay hidden either
//! way.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::group::{hash_to_group, CommutativeKey, GroupElement, GroupParams};
use crate::token::Token;

/// Which output the receiver gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMode {
    /// Receiver learns `|X ∩ Y|`.
    Cardinality,
    /// Receiver learns `X ∩ Y`.
    Intersection,
}

/// Protocol role, fixed for a session's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiRole {
    Receiver,
    Sender,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Init,
    Round1Sent,
    Done,
}

/// First message: the receiver's encrypted set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round1Message {
    pub mode: PsiMode,
    pub ciphertexts: Vec<GroupElement>,
}

/// Second message: the double-encrypted receiver set (permuted in
/// cardinality mode) plus the sender's encrypted set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round2Message {
    pub double_enc: Vec<GroupElement>,
    pub sender_enc: Vec<GroupElement>,
}

/// What the receiver ends up with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsiOutput {
    Cardinality(usize),
    Intersection(BTreeSet<Token>),
}

/// Receiver-side session state.
///
/// Phases move `Init -> Round1Sent -> Done` only. The optional minimum-size
/// guard refuses to start a comparison unless the input set is strictly
/// larger than the configured bound.
#[derive(Debug)]
pub struct ReceiverSession {
    mode: PsiMode,
    key: CommutativeKey,
    tokens: Vec<Token>,
    min_input_size: Option<usize>,
    pad_to: Option<usize>,
    pre_shuffle: bool,
    phase: Phase,
}

impl ReceiverSession {
    /// Keys are per-session; generate a fresh one and drop the session after
    /// use.
    pub fn new(
        input: &BTreeSet<Token>,
        mode: PsiMode,
        key: CommutativeKey,
        min_input_size: Option<usize>,
    ) -> Self {
        Self {
            mode,
            key,
            tokens: input.iter().copied().collect(),
            min_input_size,
            pad_to: None,
            pre_shuffle: true,
            phase: Phase::Init,
        }
    }

    /// Disables the hygiene shuffle of the outgoing ciphertext list, leaving
    /// it in set order.
    pub fn without_pre_shuffle(mut self) -> Self {
        self.pre_shuffle = false;
        self
    }

    /// Pads the outgoing set with fresh random dummy tokens so the
    /// counterpart sees only the upper bound, not the exact size. Off by
    /// default. Dummies match nothing, so outputs are unchanged.
    pub fn with_padded_size(mut self, bound: usize) -> Self {
        self.pad_to = Some(bound);
        self
    }

    pub fn mode(&self) -> PsiMode {
        self.mode
    }

    pub fn input_len(&self) -> usize {
        self.tokens.len()
    }

    /// Encrypts the input set and hands back the first message.
    pub fn round1(&mut self, rng: &mut (impl RngCore + ?Sized)) -> Result<Round1Message> {
        if self.phase != Phase::Init {
            return Err(Error::WrongPhase);
        }
        if let Some(min) = self.min_input_size {
            if self.tokens.len() <= min {
                return Err(Error::ComparisonRefused {
                    size: self.tokens.len(),
                    min,
                });
            }
        }
        if let Some(bound) = self.pad_to {
            if bound < self.tokens.len() {
                return Err(Error::InvalidParameter(
                    "padding bound below the input set size",
                ));
            }
            while self.tokens.len() < bound {
                self.tokens.push(Token::random(rng));
            }
        }
        if self.pre_shuffle {
            self.tokens.shuffle(rng);
        }
        let params = self.key.params();
        let ciphertexts = self
            .tokens
            .iter()
            .map(|t| self.key.encrypt(&hash_to_group(t, params)))
            .collect::<Result<Vec<_>>>()?;
        self.phase = Phase::Round1Sent;
        Ok(Round1Message {
            mode: self.mode,
            ciphertexts,
        })
    }

    /// Strips the receiver key layer and matches against the sender's set.
    pub fn finalize(&mut self, msg: &Round2Message) -> Result<PsiOutput> {
        if self.phase != Phase::Round1Sent {
            return Err(Error::WrongPhase);
        }
        if msg.double_enc.len() != self.tokens.len() {
            return Err(Error::LengthMismatch {
                left: self.tokens.len(),
                right: msg.double_enc.len(),
            });
        }
        let own_under_sender_key = msg
            .double_enc
            .iter()
            .map(|c| self.key.decrypt(c))
            .collect::<Result<Vec<_>>>()?;
        let sender_set: BTreeSet<Vec<u8>> = msg
            .sender_enc
            .iter()
            .map(|e| e.value().to_bytes_be())
            .collect();
        self.phase = Phase::Done;
        match self.mode {
            PsiMode::Cardinality => {
                let matches = own_under_sender_key
                    .iter()
                    .filter(|e| sender_set.contains(&e.value().to_bytes_be()))
                    .count();
                Ok(PsiOutput::Cardinality(matches))
            }
            PsiMode::Intersection => {
                // Order was preserved end to end, so position i still belongs
                // to tokens[i].
                let matched = self
                    .tokens
                    .iter()
                    .zip(&own_under_sender_key)
                    .filter(|(_, e)| sender_set.contains(&e.value().to_bytes_be()))
                    .map(|(t, _)| *t)
                    .collect();
                Ok(PsiOutput::Intersection(matched))
            }
        }
    }
}

/// Sender side: re-encrypts the receiver's ciphertexts and encrypts its own
/// set. Stateless apart from the session key passed in.
pub fn sender_round2(
    msg: &Round1Message,
    key: &CommutativeKey,
    input: &BTreeSet<Token>,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Round2Message> {
    sender_round2_padded(msg, key, input, None, rng)
}

/// [`sender_round2`] with the sender's set padded to `pad_to` with fresh
/// dummy tokens, so the receiver sees only the upper bound.
pub fn sender_round2_padded(
    msg: &Round1Message,
    key: &CommutativeKey,
    input: &BTreeSet<Token>,
    pad_to: Option<usize>,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Round2Message> {
    let mut double_enc = msg
        .ciphertexts
        .iter()
        .map(|c| key.encrypt(c))
        .collect::<Result<Vec<_>>>()?;
    if msg.mode == PsiMode::Cardinality {
        double_enc.shuffle(rng);
    }
    let params = key.params();
    let mut sender_enc = input
        .iter()
        .map(|t| key.encrypt(&hash_to_group(t, params)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bound) = pad_to {
        if bound < sender_enc.len() {
            return Err(Error::InvalidParameter(
                "padding bound below the input set size",
            ));
        }
        while sender_enc.len() < bound {
            sender_enc.push(key.encrypt(&hash_to_group(&Token::random(rng), params))?);
        }
    }
    // The sender's set has no positional meaning; emit it in random order.
    sender_enc.shuffle(rng);
    Ok(Round2Message {
        double_enc,
        sender_enc,
    })
}

/// Drives a whole session in one process with fresh per-session keys.
pub fn run_local(
    receiver_input: &BTreeSet<Token>,
    sender_input: &BTreeSet<Token>,
    mode: PsiMode,
    params: &GroupParams,
    min_receiver_size: Option<usize>,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<PsiOutput> {
    let receiver_key = CommutativeKey::generate(params, rng);
    let sender_key = CommutativeKey::generate(params, rng);
    let mut session = ReceiverSession::new(receiver_input, mode, receiver_key, min_receiver_size);
    let round1 = session.round1(rng)?;
    let round2 = sender_round2(&round1, &sender_key, sender_input, rng)?;
    session.finalize(&round2)
}
