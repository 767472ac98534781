//! Infection-location counting and the time-bucketed spread timeline.
//!
//! Every reported citizen contributes an exposure set: the cells where it
//! was in contact with another reported citizen. Summing the 0/1 indicator
//! vectors of those sets gives the per-cell infection histogram; bucketing
//! contributions by upload epoch gives the timeline.
//!
//! Two aggregation paths produce the same histogram. Under suggestion 1 the
//! server holds both uploaded sets per citizen and computes everything
//! locally. Under suggestion 2 citizens upload only their located received
//! pairs, and the sent-token side enters through an intersection protocol
//! run per citizen, after which the server looks the matched tokens up in
//! the pooled pair set to recover the cells.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::histogram::LocationHistogram;
use crate::partition::CellIndex;
use crate::psi::{run_local, PsiMode, PsiOutput};
use crate::density::SessionId;
use crate::token::Token;

/// The cells where one citizen met reported-infected citizens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExposureSet {
    cells: BTreeSet<CellIndex>,
}

impl ExposureSet {
    pub fn from_cells(cells: BTreeSet<CellIndex>) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> &BTreeSet<CellIndex> {
        &self.cells
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        self.cells.contains(&cell)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// The cells of every received pair whose token is in the infected set.
/// Distinct matching cells all count as potential infection sites.
pub fn exposure_cells(
    received_pairs: &BTreeSet<(Token, CellIndex)>,
    infected: &BTreeSet<Token>,
) -> ExposureSet {
    ExposureSet {
        cells: received_pairs
            .iter()
            .filter(|(token, _)| infected.contains(token))
            .map(|&(_, cell)| cell)
            .collect(),
    }
}

/// The length-`M` 0/1 vector with ones exactly on the exposure cells.
pub fn indicator_vector(set: &ExposureSet, m: u32) -> Result<Vec<u8>> {
    let mut bits = alloc::vec![0u8; m as usize];
    for cell in &set.cells {
        if cell.get() > m {
            return Err(Error::CellOutOfRange { cell: cell.get(), m });
        }
        bits[cell.slot()] = 1;
    }
    Ok(bits)
}

/// One reported citizen's upload, with both token views frozen at the
/// moment of the positive test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionUpload {
    pub session: SessionId,
    /// `L(i)`: the citizen's own tokens, pruned at upload time. Uploaded in
    /// the suggestion-1 flow; kept citizen-side as protocol input in the
    /// suggestion-2 flow.
    pub sent: BTreeSet<Token>,
    /// `RA(i)`: received (token, cell) pairs, pruned at upload time.
    pub received_pairs: BTreeSet<(Token, CellIndex)>,
    /// Epoch the upload arrived at the server.
    pub epoch: u64,
}

/// A reported citizen's exposure contribution with its arrival epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureRecord {
    pub session: SessionId,
    pub epoch: u64,
    pub exposure: ExposureSet,
}

/// Per-citizen exposure sets computed the suggestion-1 way: the server pools
/// all uploaded sent tokens into `L` and matches each citizen's pairs
/// locally.
pub fn exposures_suggestion1(uploads: &[InfectionUpload]) -> Vec<ExposureRecord> {
    let infected: BTreeSet<Token> = uploads
        .iter()
        .flat_map(|u| u.sent.iter().copied())
        .collect();
    uploads
        .iter()
        .map(|u| ExposureRecord {
            session: u.session,
            epoch: u.epoch,
            exposure: exposure_cells(&u.received_pairs, &infected),
        })
        .collect()
}

/// Per-citizen exposure sets computed the suggestion-2 way: the server pools
/// all uploaded pairs, derives its token set `R` by projection, and runs one
/// intersection session per citizen (citizen sends `L(i)`, server receives
/// `L(i) ∩ R`), then recovers cells by looking the matches up in the pooled
/// pairs.
pub fn exposures_suggestion2(
    uploads: &[InfectionUpload],
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Vec<ExposureRecord>> {
    let pooled_pairs: BTreeSet<(Token, CellIndex)> = uploads
        .iter()
        .flat_map(|u| u.received_pairs.iter().copied())
        .collect();
    let server_tokens: BTreeSet<Token> = pooled_pairs.iter().map(|&(t, _)| t).collect();

    let mut records = Vec::with_capacity(uploads.len());
    for upload in uploads {
        let matched = match run_local(
            &server_tokens,
            &upload.sent,
            PsiMode::Intersection,
            params,
            None,
            rng,
        )? {
            PsiOutput::Intersection(set) => set,
            PsiOutput::Cardinality(_) => return Err(Error::WrongPhase),
        };
        let exposure = exposure_cells(&pooled_pairs, &matched);
        records.push(ExposureRecord {
            session: upload.session,
            epoch: upload.epoch,
            exposure,
        });
    }
    Ok(records)
}

/// Sums indicator vectors over exposure records.
pub fn histogram_from_exposures(
    records: &[ExposureRecord],
    m: u32,
) -> Result<LocationHistogram> {
    let mut histogram = LocationHistogram::zeros(m);
    for record in records {
        histogram.add_indicator(&indicator_vector(&record.exposure, m)?)?;
    }
    Ok(histogram)
}

/// Suggestion-1 histogram: pooled sent tokens, local matching.
pub fn aggregate_suggestion1(uploads: &[InfectionUpload], m: u32) -> Result<LocationHistogram> {
    histogram_from_exposures(&exposures_suggestion1(uploads), m)
}

/// Suggestion-2 histogram: per-citizen intersection sessions. Produces the
/// same totals as the suggestion-1 path on the same uploads.
pub fn aggregate_suggestion2(
    uploads: &[InfectionUpload],
    m: u32,
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<LocationHistogram> {
    histogram_from_exposures(&exposures_suggestion2(uploads, params, rng)?, m)
}

/// The role-interchange variant: locations attached to sent tokens instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentAttachedUpload {
    pub session: SessionId,
    /// `R(i)`: received tokens, frozen at upload time; protocol input.
    pub received: BTreeSet<Token>,
    /// `LA(i)`: own tokens with the cell they were broadcast from.
    pub sent_pairs: BTreeSet<(Token, CellIndex)>,
    pub epoch: u64,
}

/// Aggregation with locations attached to sent tokens: the server pools the
/// uploaded `LA(i)` sets, inputs the pooled token set to one intersection
/// session per citizen (citizen sends `R(i)`), and looks matched tokens up
/// in the pool.
pub fn exposures_role_interchange(
    uploads: &[SentAttachedUpload],
    params: &GroupParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Vec<ExposureRecord>> {
    let pooled_pairs: BTreeSet<(Token, CellIndex)> = uploads
        .iter()
        .flat_map(|u| u.sent_pairs.iter().copied())
        .collect();
    let server_tokens: BTreeSet<Token> = pooled_pairs.iter().map(|&(t, _)| t).collect();

    let mut records = Vec::with_capacity(uploads.len());
    for upload in uploads {
        let matched = match run_local(
            &server_tokens,
            &upload.received,
            PsiMode::Intersection,
            params,
            None,
            rng,
        )? {
            PsiOutput::Intersection(set) => set,
            PsiOutput::Cardinality(_) => return Err(Error::WrongPhase),
        };
        records.push(ExposureRecord {
            session: upload.session,
            epoch: upload.epoch,
            exposure: exposure_cells(&pooled_pairs, &matched),
        });
    }
    Ok(records)
}

/// Strictly increasing epoch boundaries `t_0 < t_1 < ...`; bucket `h` covers
/// the half-open interval `(t_{h-1}, t_h]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeBuckets {
    boundaries: Vec<u64>,
}

impl TimeBuckets {
    pub fn new(boundaries: Vec<u64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidParameter(
                "time buckets need at least two boundaries",
            ));
        }
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "bucket boundaries must be strictly increasing",
            ));
        }
        Ok(Self { boundaries })
    }

    /// Evenly spaced boundaries `start, start+step, ...` covering `end`.
    pub fn evenly_spaced(start: u64, step: u64, end: u64) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidParameter("bucket step must be positive"));
        }
        let mut boundaries = alloc::vec![start];
        let mut t = start;
        while t < end {
            t += step;
            boundaries.push(t);
        }
        Self::new(boundaries)
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn bucket_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// The bucket of an upload epoch, or `None` for epochs past the last
    /// boundary (the caller's open bucket).
    pub fn assign(&self, epoch: u64) -> Result<Option<usize>> {
        if epoch <= self.boundaries[0] {
            return Err(Error::InvalidParameter(
                "upload epoch at or before the first bucket boundary",
            ));
        }
        match self.boundaries.binary_search(&epoch) {
            Ok(pos) => Ok(Some(pos - 1)),
            Err(pos) if pos < self.boundaries.len() => Ok(Some(pos - 1)),
            Err(_) => Ok(None),
        }
    }
}

/// Per-bucket histograms; uploads past the last boundary land in the
/// flagged open bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    /// `(upper boundary t_h, histogram)` per closed bucket, in order.
    pub buckets: Vec<(u64, LocationHistogram)>,
    /// Contributions arriving after the last boundary, if any.
    pub open_bucket: Option<LocationHistogram>,
}

impl Timeline {
    /// Componentwise sum over all buckets; equals the whole-period histogram.
    pub fn total(&self) -> Result<LocationHistogram> {
        let m = self
            .buckets
            .first()
            .map(|(_, h)| h.cell_count())
            .or_else(|| self.open_bucket.as_ref().map(|h| h.cell_count()))
            .unwrap_or(0);
        let mut total = LocationHistogram::zeros(m);
        for (_, h) in &self.buckets {
            total.merge(h)?;
        }
        if let Some(h) = &self.open_bucket {
            total.merge(h)?;
        }
        Ok(total)
    }
}

/// Buckets exposure records by arrival epoch and sums per bucket.
pub fn timeline_from_exposures(
    records: &[ExposureRecord],
    buckets: &TimeBuckets,
    m: u32,
) -> Result<Timeline> {
    let mut per_bucket: Vec<LocationHistogram> = (0..buckets.bucket_count())
        .map(|_| LocationHistogram::zeros(m))
        .collect();
    let mut open: Option<LocationHistogram> = None;
    for record in records {
        let bits = indicator_vector(&record.exposure, m)?;
        match buckets.assign(record.epoch)? {
            Some(h) => per_bucket[h].add_indicator(&bits)?,
            None => open
                .get_or_insert_with(|| LocationHistogram::zeros(m))
                .add_indicator(&bits)?,
        }
    }
    Ok(Timeline {
        buckets: buckets.boundaries()[1..]
            .iter()
            .copied()
            .zip(per_bucket)
            .collect(),
        open_bucket: open,
    })
}

/// The timeline over the suggestion-1 exposures.
pub fn timeline_aggregate(
    uploads: &[InfectionUpload],
    buckets: &TimeBuckets,
    m: u32,
) -> Result<Timeline> {
    timeline_from_exposures(&exposures_suggestion1(uploads), buckets, m)
}
