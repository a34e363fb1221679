use std::collections::HashSet;

use crate::error::{Error, Result};

/// Distinct, in-range row or column indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    domain_size: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, domain_size: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &index in &indices {
            if index >= domain_size {
                return Err(Error::IndexOutOfRange {
                    index,
                    domain: domain_size,
                });
            }
            if !seen.insert(index) {
                return Err(Error::DuplicateIndex { index });
            }
        }
        Ok(Self { indices, domain_size })
    }

    /// `0..domain_size` in order.
    pub fn full(domain_size: usize) -> Self {
        Self {
            indices: (0..domain_size).collect(),
            domain_size,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    /// Copy with indices in ascending order.
    pub fn sorted(&self) -> Self {
        let mut indices = self.indices.clone();
        indices.sort_unstable();
        Self {
            indices,
            domain_size: self.domain_size,
        }
    }

    /// Indices of `self` that are not in `other`, order preserved.
    pub fn without(&self, other: &IndexSet) -> Self {
        let drop: HashSet<usize> = other.iter().collect();
        Self {
            indices: self.iter().filter(|i| !drop.contains(i)).collect(),
            domain_size: self.domain_size,
        }
    }
}

/// Which rows (or columns) to read from a source.
#[derive(Clone, Copy, Debug)]
pub enum Select<'a> {
    All,
    Only(&'a IndexSet),
}

impl Select<'_> {
    pub(crate) fn resolve(&self, domain: usize) -> Result<Vec<usize>> {
        match self {
            Select::All => Ok((0..domain).collect()),
            Select::Only(set) => {
                if set.domain_size() != domain {
                    return Err(Error::dims(format!(
                        "index set over domain {} used on axis of length {domain}",
                        set.domain_size()
                    )));
                }
                Ok(set.as_slice().to_vec())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range_and_duplicates() {
        assert!(matches!(
            IndexSet::new(vec![0, 5], 5),
            Err(Error::IndexOutOfRange { index: 5, domain: 5 })
        ));
        assert!(matches!(
            IndexSet::new(vec![0, 0], 5),
            Err(Error::DuplicateIndex { index: 0 })
        ));
        let s = IndexSet::new(vec![3, 1], 5).unwrap();
        assert_eq!(s.sorted().as_slice(), &[1, 3]);
        assert_eq!(s.without(&IndexSet::new(vec![1], 5).unwrap()).as_slice(), &[3]);
    }
}
