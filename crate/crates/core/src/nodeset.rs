//! Bitmask sets of variable indices, the index type of every DP table.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Hard cap on the number of variables. Every subset-indexed table is
/// dense over `2^n` entries, so this bounds memory at roughly
/// `n * 2^n` doubles.
pub const MAX_VARS: usize = 25;

/// A set of variable indices encoded as a bitmask over `n <= 25` bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(u32);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn empty() -> Self {
        NodeSet(0)
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VARS);
        if n == 0 {
            NodeSet(0)
        } else {
            NodeSet(u32::MAX >> (32 - n))
        }
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_VARS);
        NodeSet(1 << i)
    }

    pub fn from_mask(mask: u32) -> Self {
        NodeSet(mask)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut s = NodeSet(0);
        for &i in indices {
            s = s.insert(i);
        }
        s
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn insert(self, i: usize) -> Self {
        debug_assert!(i < MAX_VARS);
        NodeSet(self.0 | 1 << i)
    }

    #[inline]
    pub fn remove(self, i: usize) -> Self {
        NodeSet(self.0 & !(1 << i))
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        NodeSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        NodeSet(self.0 & other.0)
    }

    /// Elements of `self` not in `other`.
    #[inline]
    pub fn difference(self, other: Self) -> Self {
        NodeSet(self.0 & !other.0)
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// True when every element is `< n`.
    #[inline]
    pub fn within(self, n: usize) -> bool {
        self.is_subset_of(NodeSet::full(n))
    }

    /// Iterates set members in ascending index order.
    pub fn iter(self) -> BitIter {
        BitIter(self.0)
    }
}

pub struct BitIter(u32);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let i = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(i)
        }
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Deletes bit `i` from `mask`, packing the remaining bits.
///
/// Maps a subset of `V \ {i}` to its rank in the `(n-1)`-bit compressed
/// space used by the per-node tables `A_i`, `K_v`, `Γ_v`.
#[inline]
pub fn drop_bit(mask: u32, i: usize) -> usize {
    debug_assert!(mask >> i & 1 == 0, "mask must not contain bit {i}");
    ((mask & ((1 << i) - 1)) | ((mask >> (i + 1)) << i)) as usize
}

/// Inverse of [`drop_bit`]: re-inserts a zero bit at position `i`.
#[inline]
pub fn insert_bit(cmask: usize, i: usize) -> u32 {
    let c = cmask as u32;
    (c & ((1 << i) - 1)) | ((c >> i) << (i + 1))
}

/// All subsets of `{0, .., n-1} \ {node}` with at most `max_size`
/// elements, in canonical order: ascending cardinality, then ascending
/// numeric mask. This is the family enumeration order used everywhere a
/// deterministic per-node ordering is required.
pub fn bounded_subsets_excluding(n: usize, node: usize, max_size: usize) -> Vec<NodeSet> {
    debug_assert!(node < n);
    let space = n - 1;
    let mut out = Vec::new();
    for c in 0..=max_size.min(space) {
        if c == 0 {
            out.push(NodeSet::EMPTY);
            continue;
        }
        // Gosper's hack over the compressed space, then re-insert the gap.
        let mut m: u32 = (1 << c) - 1;
        while m < 1 << space {
            out.push(NodeSet::from_mask(insert_bit(m as usize, node)));
            let lo = m & m.wrapping_neg();
            let carry = m + lo;
            m = carry | (((m ^ carry) >> 2) / lo);
        }
    }
    out
}

/// C(n, k) as an exact f64 (exact for every n <= 25).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u64 = 1;
    let mut den: u64 = 1;
    for i in 0..k {
        num *= (n - i) as u64;
        den *= (i + 1) as u64;
    }
    (num / den) as f64
}
