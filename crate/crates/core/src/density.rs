//! Population-density aggregation across two non-colluding servers.
//!
//! Each citizen picks `m_bar` cell indices (its own cell hidden among
//! decoys), encodes its presence as a unit vector over those slots, masks it
//! with uniform field elements, and splits the result: the raw mask goes to
//! server 1, the masked presence to server 2. Server 1 forwards only the sum
//! of expanded masks; server 2 subtracts it from the sum of expanded masked
//! vectors and is left with the exact per-cell census.
//!
//! Neither server alone sees a citizen's cell: server 1 holds uniform noise,
//! server 2 holds uniformly masked values, and both see only the index list,
//! which narrows the cell down to one of `m_bar` choices.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::field::{random_field_vector, FieldElement, FieldParams};
use crate::histogram::LocationHistogram;
use crate::partition::CellIndex;

/// Identifies one citizen's contribution within a round, so the two servers
/// can confirm they aggregated the same participant set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionId(u64);

impl SessionId {
    pub fn new(raw: u64) -> Self {
        Self(raw)
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The index list `J_i`: `m_bar` distinct cells, one of which is the
/// citizen's true cell. The true slot is private and never serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexVector {
    indices: Vec<CellIndex>,
    true_pos: usize,
}

impl IndexVector {
    /// Chooses the index list for a citizen currently in `cell`.
    ///
    /// Decoys are drawn uniformly without replacement and the true cell is
    /// placed at a uniform slot. When `prev` is given the list changes as
    /// little as possible: it is reused verbatim while the cell stays inside
    /// it, and on a move to a cell outside it the new cell replaces one
    /// uniformly chosen decoy slot.
    pub fn build(
        cell: CellIndex,
        m: u32,
        m_bar: u32,
        prev: Option<&IndexVector>,
        rng: &mut (impl RngCore + ?Sized),
    ) -> Result<Self> {
        if m_bar == 0 || m_bar > m {
            return Err(Error::InvalidParameter("m_bar must satisfy 1 <= m_bar <= m"));
        }
        if cell.get() > m {
            return Err(Error::CellOutOfRange { cell: cell.get(), m });
        }
        let width = m_bar as usize;

        if let Some(prev) = prev {
            let reusable = prev.indices.len() == width
                && prev.indices.iter().all(|c| c.get() <= m);
            if reusable && width > 1 {
                if let Some(pos) = prev.indices.iter().position(|&c| c == cell) {
                    return Ok(Self {
                        indices: prev.indices.clone(),
                        true_pos: pos,
                    });
                }
                // Moved outside the list: swap the new cell into a decoy slot.
                let mut slot = rng.gen_range(0..width - 1);
                if slot >= prev.true_pos {
                    slot += 1;
                }
                let mut indices = prev.indices.clone();
                indices[slot] = cell;
                return Ok(Self {
                    indices,
                    true_pos: slot,
                });
            }
        }

        if width == 1 {
            return Ok(Self {
                indices: alloc::vec![cell],
                true_pos: 0,
            });
        }

        // Partial Fisher-Yates over all other cells for the decoys.
        let mut candidates: Vec<CellIndex> = (1..=m)
            .filter(|&raw| raw != cell.get())
            .map(|raw| CellIndex::new(raw, m).expect("raw in range"))
            .collect();
        for i in 0..width - 1 {
            let j = rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        let mut indices: Vec<CellIndex> = candidates[..width - 1].to_vec();
        let true_pos = rng.gen_range(0..width);
        indices.insert(true_pos, cell);
        Ok(Self { indices, true_pos })
    }

    /// Restores a list from its serialized indices plus the citizen's current
    /// cell; the private slot is recomputed rather than stored.
    pub fn restore(indices: Vec<CellIndex>, cell: CellIndex) -> Result<Self> {
        let distinct: BTreeSet<_> = indices.iter().collect();
        if distinct.len() != indices.len() {
            return Err(Error::DuplicateIndex);
        }
        let true_pos = indices
            .iter()
            .position(|&c| c == cell)
            .ok_or(Error::CellNotCovered { cell: cell.get() })?;
        Ok(Self { indices, true_pos })
    }

    pub fn indices(&self) -> &[CellIndex] {
        &self.indices
    }

    pub fn true_cell(&self) -> CellIndex {
        self.indices[self.true_pos]
    }

    pub fn width(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        self.indices.contains(&cell)
    }
}

/// The standard unit vector over the slots of `indices`: 1 where the slot's
/// index equals `cell`, 0 elsewhere.
pub fn encode_presence(cell: CellIndex, indices: &IndexVector) -> Result<Vec<u8>> {
    if !indices.contains(cell) {
        return Err(Error::CellNotCovered { cell: cell.get() });
    }
    Ok(indices
        .indices()
        .iter()
        .map(|&c| u8::from(c == cell))
        .collect())
}

/// Componentwise `(presence + mask) mod p`.
pub fn mask_presence(presence: &[u8], mask: &[FieldElement]) -> Result<Vec<FieldElement>> {
    if presence.len() != mask.len() {
        return Err(Error::LengthMismatch {
            left: presence.len(),
            right: mask.len(),
        });
    }
    presence
        .iter()
        .zip(mask)
        .map(|(&bit, r)| FieldElement::from_u64(u64::from(bit), r.params()).add(r))
        .collect()
}

/// The message to server 1: the index list and the raw masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskShare {
    pub session: SessionId,
    pub indices: Vec<CellIndex>,
    pub values: Vec<FieldElement>,
}

/// The message to server 2: the index list and the masked presence values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedShare {
    pub session: SessionId,
    pub indices: Vec<CellIndex>,
    pub values: Vec<FieldElement>,
}

/// Runs the citizen side of one round: draws the mask, masks the presence
/// vector and returns the two server messages.
///
/// The mask share is a function of the index list and the randomness source
/// only; swapping the true cell to another cell of the same list leaves the
/// server-1 message byte-identical.
pub fn make_shares(
    session: SessionId,
    indices: &IndexVector,
    params: &FieldParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<(MaskShare, MaskedShare)> {
    let mask = random_field_vector(indices.width(), params, rng)?;
    let presence = encode_presence(indices.true_cell(), indices)?;
    let masked = mask_presence(&presence, &mask)?;
    Ok((
        MaskShare {
            session,
            indices: indices.indices().to_vec(),
            values: mask,
        },
        MaskedShare {
            session,
            indices: indices.indices().to_vec(),
            values: masked,
        },
    ))
}

/// Scatters `values` to their cell positions in a length-`m` vector,
/// zero everywhere else.
pub fn server_expand(
    indices: &[CellIndex],
    values: &[FieldElement],
    m: u32,
    params: &FieldParams,
) -> Result<Vec<FieldElement>> {
    if indices.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: indices.len(),
            right: values.len(),
        });
    }
    let distinct: BTreeSet<_> = indices.iter().collect();
    if distinct.len() != indices.len() {
        return Err(Error::DuplicateIndex);
    }
    let mut expanded: Vec<FieldElement> = (0..m).map(|_| FieldElement::zero(params)).collect();
    for (cell, value) in indices.iter().zip(values) {
        if cell.get() > m {
            return Err(Error::CellOutOfRange { cell: cell.get(), m });
        }
        if value.params() != params {
            return Err(Error::ParamsMismatch);
        }
        expanded[cell.slot()] = value.clone();
    }
    Ok(expanded)
}

/// Server 1's output: the summed mask vector plus the participant set it
/// covered, forwarded to server 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSum {
    pub values: Vec<FieldElement>,
    pub sessions: BTreeSet<SessionId>,
}

/// Server 1: expands every mask share to length `m` and sums componentwise.
pub fn server1_aggregate(
    shares: &[MaskShare],
    m: u32,
    params: &FieldParams,
) -> Result<MaskSum> {
    let mut sum: Vec<FieldElement> = (0..m).map(|_| FieldElement::zero(params)).collect();
    let mut sessions = BTreeSet::new();
    for share in shares {
        let expanded = server_expand(&share.indices, &share.values, m, params)?;
        for (acc, v) in sum.iter_mut().zip(&expanded) {
            *acc = acc.add(v)?;
        }
        sessions.insert(share.session);
    }
    Ok(MaskSum {
        values: sum,
        sessions,
    })
}

/// Server 2: subtracts the mask sum from the summed masked vectors and reads
/// off the census. Exact whenever the participant count is below `p`.
pub fn server2_finalize(
    shares: &[MaskedShare],
    mask_sum: &MaskSum,
    m: u32,
    params: &FieldParams,
) -> Result<LocationHistogram> {
    let sessions: BTreeSet<SessionId> = shares.iter().map(|s| s.session).collect();
    if sessions.len() != shares.len() || sessions != mask_sum.sessions {
        return Err(Error::ParticipantMismatch);
    }
    if mask_sum.values.len() != m as usize {
        return Err(Error::LengthMismatch {
            left: m as usize,
            right: mask_sum.values.len(),
        });
    }
    let p = params.modulus();
    if &num_bigint::BigUint::from(shares.len()) >= p {
        return Err(Error::PopulationExceedsModulus {
            participants: shares.len(),
        });
    }

    let mut sum: Vec<FieldElement> = (0..m).map(|_| FieldElement::zero(params)).collect();
    for share in shares {
        let expanded = server_expand(&share.indices, &share.values, m, params)?;
        for (acc, v) in sum.iter_mut().zip(&expanded) {
            *acc = acc.add(v)?;
        }
    }
    let counts = sum
        .iter()
        .zip(&mask_sum.values)
        .map(|(y, s1)| {
            let d = y.sub(s1)?;
            u64::try_from(d.value()).map_err(|_| Error::PopulationExceedsModulus {
                participants: shares.len(),
            })
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(LocationHistogram::from_counts(counts))
}
