//! Derived randomness streams.
//!
//! Every stream is keyed by `(seed, purpose, context...)` through a hash, so
//! no rng state ever needs persisting: a run resumed from a snapshot derives
//! exactly the same streams for the remaining epochs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

fn derive(seed: u64, parts: &[&[u8]]) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"epimpc/rng/v1");
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    ChaCha20Rng::from_seed(hasher.finalize().into())
}

/// One stream per epoch and purpose, consumed in deterministic actor order.
pub fn epoch_stream(seed: u64, epoch: u64, purpose: &str) -> ChaCha20Rng {
    derive(seed, &[purpose.as_bytes(), &epoch.to_le_bytes()])
}

/// One stream per citizen within an epoch, for protocol steps whose draws
/// must not depend on any other citizen's state.
pub fn citizen_stream(seed: u64, epoch: u64, purpose: &str, citizen: u32) -> ChaCha20Rng {
    derive(
        seed,
        &[
            purpose.as_bytes(),
            &epoch.to_le_bytes(),
            &citizen.to_le_bytes(),
        ],
    )
}

/// A stream independent of epochs (world initialization).
pub fn setup_stream(seed: u64, purpose: &str) -> ChaCha20Rng {
    derive(seed, &[purpose.as_bytes()])
}
