//! Fixed-length bitset used for pair-coverage bookkeeping.
//!
//! The learner stores, per predicate, which labeled pairs it covers; terms
//! intersect those vectors and the covering loop masks off what earlier
//! terms already covered. Everything reduces to fused and/popcount passes
//! over `u64` blocks, which is the hot loop of learning, so the type keeps
//! those passes allocation-free.

/// Fixed-length vector of bits. All binary operations require equal
/// lengths; bits past `len` in the last block are kept at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    blocks: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn with_len(len: usize) -> BitSet {
        BitSet {
            blocks: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> BitSet {
        let mut s = BitSet::with_len(len);
        for i in 0..len {
            if f(i) {
                s.set(i);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn clear(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.blocks[i / 64] &= !(1 << (i % 64));
    }

    pub fn count_ones(&self) -> u64 {
        self.blocks.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn any(&self) -> bool {
        self.blocks.iter().any(|&b| b != 0)
    }

    fn check_len(&self, other: &BitSet) {
        assert_eq!(self.len, other.len, "bitset length mismatch");
    }

    /// `popcount(self ∩ other)` without materializing the intersection.
    pub fn and_count(&self, other: &BitSet) -> u64 {
        self.check_len(other);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// `popcount(self ∩ a ∩ b)`: the common case of scoring a term's
    /// coverage against the remaining mask.
    pub fn and3_count(&self, a: &BitSet, b: &BitSet) -> u64 {
        self.check_len(a);
        self.check_len(b);
        self.blocks
            .iter()
            .zip(&a.blocks)
            .zip(&b.blocks)
            .map(|((x, y), z)| (x & y & z).count_ones() as u64)
            .sum()
    }

    pub fn and_assign(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    /// Remove the bits set in `other` (`self ← self ∖ other`).
    pub fn and_not_assign(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= !b;
        }
    }

    pub fn or_assign(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn copy_from(&mut self, other: &BitSet) {
        self.check_len(other);
        self.blocks.copy_from_slice(&other.blocks);
    }

    /// Complement within `[0, len)`, keeping tail bits zero.
    pub fn flipped(&self) -> BitSet {
        let mut out = BitSet {
            blocks: self.blocks.iter().map(|b| !b).collect(),
            len: self.len,
        };
        let spare = out.blocks.len() * 64 - out.len;
        if spare > 0 {
            if let Some(last) = out.blocks.last_mut() {
                *last &= u64::MAX >> spare;
            }
        }
        out
    }

    /// Set every bit in `[0, len)`.
    pub fn fill_ones(&mut self) {
        for b in &mut self.blocks {
            *b = u64::MAX;
        }
        let spare = self.blocks.len() * 64 - self.len;
        if spare > 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= u64::MAX >> spare;
            }
        }
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut rest = block;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(bi * 64 + bit)
            })
        })
    }
}
