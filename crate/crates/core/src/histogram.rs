//! Integer per-cell counts: the outputs of the aggregation protocols.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::partition::CellIndex;

/// A length-`M` vector of non-negative per-cell counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationHistogram {
    counts: Vec<u64>,
}

impl LocationHistogram {
    pub fn zeros(m: u32) -> Self {
        Self {
            counts: vec![0; m as usize],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn cell_count(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn get(&self, cell: CellIndex) -> u64 {
        self.counts[cell.slot()]
    }

    pub fn add_cell(&mut self, cell: CellIndex) -> Result<()> {
        if cell.slot() >= self.counts.len() {
            return Err(Error::CellOutOfRange {
                cell: cell.get(),
                m: self.cell_count(),
            });
        }
        self.counts[cell.slot()] += 1;
        Ok(())
    }

    /// Adds a 0/1 indicator vector of the same length.
    pub fn add_indicator(&mut self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.counts.len() {
            return Err(Error::LengthMismatch {
                left: self.counts.len(),
                right: bits.len(),
            });
        }
        for (count, &bit) in self.counts.iter_mut().zip(bits) {
            *count += u64::from(bit);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::LengthMismatch {
                left: self.counts.len(),
                right: other.counts.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_merge() {
        let mut h = LocationHistogram::zeros(4);
        h.add_cell(CellIndex::new(2, 4).unwrap()).unwrap();
        h.add_indicator(&[1, 0, 0, 1]).unwrap();
        let mut g = LocationHistogram::zeros(4);
        g.add_indicator(&[0, 1, 0, 0]).unwrap();
        h.merge(&g).unwrap();
        assert_eq!(h.counts(), &[1, 2, 0, 1]);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut h = LocationHistogram::zeros(3);
        assert!(h.add_indicator(&[1, 0]).is_err());
        assert!(h.merge(&LocationHistogram::zeros(2)).is_err());
    }
}
