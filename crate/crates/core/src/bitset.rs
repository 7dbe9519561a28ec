//! Fixed-length bitset used for vertical (item → transaction) layouts.

const WORD: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / WORD] & (1 << (i % WORD)) != 0
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// In-place intersection. Both sides must have the same length.
    pub fn and_with(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    /// Size of the intersection, without building it.
    pub fn and_count(&self, other: &Bitset) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn and(&self, other: &Bitset) -> Bitset {
        let mut out = self.clone();
        out.and_with(other);
        out
    }

    /// Set bits in ascending order.
    pub fn ones(&self) -> Ones<'_> {
        self.ones_in(0, self.len)
    }

    /// Set bits within `start..end`, ascending.
    pub fn ones_in(&self, start: usize, end: usize) -> Ones<'_> {
        let end = end.min(self.len);
        let start = start.min(end);
        let word_idx = start / WORD;
        let current = if start < end {
            self.words[word_idx] & (!0u64 << (start % WORD))
        } else {
            0
        };
        Ones {
            words: &self.words,
            word_idx,
            current,
            end,
        }
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    end: usize,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let idx = self.word_idx * WORD + bit;
                return if idx < self.end { Some(idx) } else { None };
            }
            self.word_idx += 1;
            if self.word_idx * WORD >= self.end {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

impl FromIterator<bool> for Bitset {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let bits: Vec<bool> = iter.into_iter().collect();
        let mut out = Bitset::new(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                out.set(i);
            }
        }
        out
    }
}
