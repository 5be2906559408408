//! Word-packed bit vectors for row and row-buffer contents.

use std::fmt;

const WORD_BITS: usize = 64;

/// A fixed-length vector of bits, LSB of word 0 holding bit index 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = Self::zeros(len);
        row.fill(true);
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn fill(&mut self, value: bool) {
        let pattern = if value { u64::MAX } else { 0 };
        for w in &mut self.words {
            *w = pattern;
        }
        self.mask_tail();
    }

    /// Clears bits past `len` so that equality and hashing stay canonical.
    fn mask_tail(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Builds a row from a `0`/`1` string; index 0 is the leftmost character.
    pub fn from_bit_str(s: &str) -> Self {
        let mut row = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            row.set(i, c == '1');
        }
        row
    }

    /// Stores the low `width` bits of `value`, bit k of the integer at index k.
    pub fn from_u64_lsb(value: u64, width: usize, len: usize) -> Self {
        assert!(width <= 64 && width <= len);
        let mut row = Self::zeros(len);
        for k in 0..width {
            row.set(k, value >> k & 1 != 0);
        }
        row
    }

    /// Reads `width` bits starting at index 0 back into an integer.
    pub fn to_u64_lsb(&self, width: usize) -> u64 {
        assert!(width <= 64 && width <= self.len);
        let mut value = 0u64;
        for k in 0..width {
            if self.get(k) {
                value |= 1 << k;
            }
        }
        value
    }

    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut out = String::with_capacity(nibbles + 2);
        out.push_str("0x");
        for n in (0..nibbles).rev() {
            let mut v = 0u8;
            for b in 0..4 {
                let i = n * 4 + b;
                if i < self.len && self.get(i) {
                    v |= 1 << b;
                }
            }
            out.push(char::from_digit(v as u32, 16).unwrap());
        }
        out
    }

    pub fn randomize<R: rand::Rng>(&mut self, rng: &mut R) {
        for w in &mut self.words {
            *w = rng.gen();
        }
        self.mask_tail();
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRow[{}]({})", self.len, self.to_hex())
    }
}

impl FromIterator<bool> for BitRow {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let bits: Vec<bool> = iter.into_iter().collect();
        let mut row = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            row.set(i, b);
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut row = BitRow::zeros(130);
        row.set(0, true);
        row.set(64, true);
        row.set(129, true);
        assert!(row.get(0) && row.get(64) && row.get(129));
        assert!(!row.get(1) && !row.get(128));
        assert_eq!(row.count_ones(), 3);
    }

    #[test]
    fn fill_masks_tail() {
        let mut row = BitRow::ones(70);
        assert_eq!(row.count_ones(), 70);
        row.fill(false);
        assert_eq!(row, BitRow::zeros(70));
    }

    #[test]
    fn bit_str_matches_indexing() {
        let row = BitRow::from_bit_str("10110100");
        assert!(row.get(0));
        assert!(!row.get(1));
        assert!(row.get(2));
        assert_eq!(row.to_u64_lsb(8), 0b0010_1101);
    }

    #[test]
    fn u64_roundtrip() {
        let row = BitRow::from_u64_lsb(0xC1, 8, 16);
        assert_eq!(row.to_u64_lsb(8), 0xC1);
        assert_eq!(row.to_u64_lsb(16), 0xC1);
    }
}
