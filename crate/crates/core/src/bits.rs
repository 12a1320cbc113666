use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest index a [`BitSet`] can hold, exclusive.
pub const MAX_BITS: usize = 64;

/// A set of small indices stored in one machine word.
///
/// Used for contributor-state sets and symbol sets. Ordering is by the raw
/// mask value, which gives a stable order for sorting interfaces.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitSet(u64);

impl BitSet {
    pub const EMPTY: BitSet = BitSet(0);

    pub fn from_mask(mask: u64) -> Self {
        BitSet(mask)
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_BITS);
        if n == MAX_BITS {
            BitSet(u64::MAX)
        } else {
            BitSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_BITS);
        BitSet(1u64 << i)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_BITS && self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < MAX_BITS);
        let fresh = !self.contains(i);
        self.0 |= 1u64 << i;
        fresh
    }

    pub fn remove(&mut self, i: usize) {
        if i < MAX_BITS {
            self.0 &= !(1u64 << i);
        }
    }

    pub fn with(self, i: usize) -> Self {
        let mut s = self;
        s.insert(i);
        s
    }

    pub fn union(self, other: BitSet) -> BitSet {
        BitSet(self.0 | other.0)
    }

    pub fn intersection(self, other: BitSet) -> BitSet {
        BitSet(self.0 & other.0)
    }

    pub fn difference(self, other: BitSet) -> BitSet {
        BitSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: BitSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for BitSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = BitSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl IntoIterator for BitSet {
    type Item = usize;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

/// Ascending iterator over the members of a [`BitSet`].
#[derive(Clone, Debug)]
pub struct Iter(u64);

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// All subsets of `universe`, in increasing mask order.
pub fn subsets(universe: BitSet) -> impl Iterator<Item = BitSet> {
    // Standard submask enumeration, walked upward.
    let full = universe.mask();
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == full {
            None
        } else {
            Some(((cur | !full).wrapping_add(1)) & full)
        };
        Some(BitSet(cur))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut s = BitSet::EMPTY;
        assert!(s.insert(3));
        assert!(!s.insert(3));
        s.insert(0);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.first(), Some(0));
        assert!(BitSet::singleton(3).is_subset(s));
        assert!(!s.is_subset(BitSet::singleton(3)));
        assert_eq!(BitSet::full(64).len(), 64);
    }

    #[test]
    fn subset_enumeration_counts() {
        let u: BitSet = [1, 4, 6].into_iter().collect();
        let all: Vec<_> = subsets(u).collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|s| s.is_subset(u)));
        assert_eq!(all.first(), Some(&BitSet::EMPTY));
        assert_eq!(all.last(), Some(&u));
        assert_eq!(subsets(BitSet::EMPTY).count(), 1);
    }
}
