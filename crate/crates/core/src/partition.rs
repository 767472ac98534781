//! The disjoint cover of the region into `M` cells, and 1-based cell indices.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A 1-based index into the partition, guaranteed to be `>= 1` when built
/// through [`CellIndex::new`] or [`Partition::cell`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(u32);

impl CellIndex {
    /// Validates `1 <= raw <= m`.
    pub fn new(raw: u32, m: u32) -> Result<Self> {
        if raw == 0 || raw > m {
            return Err(Error::CellOutOfRange { cell: raw, m });
        }
        Ok(Self(raw))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position of this cell in a length-`M` vector.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    /// Inverse of [`CellIndex::slot`]. Range validity is contextual; check
    /// against a partition where it matters.
    pub fn from_slot(slot: usize) -> Self {
        Self(slot as u32 + 1)
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A partition of the region into cells `1..=M`, optionally labelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    m: u32,
    labels: Vec<String>,
}

impl Partition {
    /// `m` unlabelled cells.
    pub fn uniform(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("partition needs at least one cell"));
        }
        Ok(Self {
            m,
            labels: Vec::new(),
        })
    }

    /// One cell per label, in order.
    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut p = Self::uniform(labels.len() as u32)?;
        p.labels = labels;
        Ok(p)
    }

    pub fn cell_count(&self) -> u32 {
        self.m
    }

    pub fn cell(&self, raw: u32) -> Result<CellIndex> {
        CellIndex::new(raw, self.m)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (1..=self.m).map(CellIndex)
    }

    pub fn label(&self, cell: CellIndex) -> Option<&str> {
        self.labels.get(cell.slot()).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn index_bounds() {
        assert!(CellIndex::new(1, 4).is_ok());
        assert!(CellIndex::new(4, 4).is_ok());
        assert_eq!(
            CellIndex::new(0, 4),
            Err(Error::CellOutOfRange { cell: 0, m: 4 })
        );
        assert_eq!(
            CellIndex::new(5, 4),
            Err(Error::CellOutOfRange { cell: 5, m: 4 })
        );
    }

    #[test]
    fn slots_are_zero_based() {
        let c = CellIndex::new(3, 4).unwrap();
        assert_eq!(c.slot(), 2);
        assert_eq!(CellIndex::from_slot(2), c);
    }

    #[test]
    fn labelled_partition() {
        let p = Partition::with_labels(vec!["home".to_string(), "market".to_string()]).unwrap();
        assert_eq!(p.cell_count(), 2);
        assert_eq!(p.label(p.cell(2).unwrap()), Some("market"));
        assert!(Partition::uniform(0).is_err());
    }
}
