use std::fmt;

/// Token assignment over the canonical place order; every place holds 0 or 1.
///
/// Stored as a bit-vector so equal markings hash identically regardless of
/// how they were produced.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    words: Vec<u64>,
    len: usize,
}

impl Marking {
    pub fn empty(places: usize) -> Self {
        Self {
            words: vec![0; places.div_ceil(64)],
            len: places,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut m = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            m.set(i, b);
        }
        m
    }

    /// Number of places in the domain.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, p: usize) -> bool {
        assert!(p < self.len, "place {p} outside marking domain");
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    pub fn set(&mut self, p: usize, marked: bool) {
        assert!(p < self.len, "place {p} outside marking domain");
        let bit = 1u64 << (p % 64);
        if marked {
            self.words[p / 64] |= bit;
        } else {
            self.words[p / 64] &= !bit;
        }
    }

    /// Total number of tokens.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn marked_places(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&p| self.get(p))
    }

    /// `0`/`1` string in canonical place order, e.g. `100000`.
    pub fn bit_string(&self) -> String {
        (0..self.len).map(|p| if self.get(p) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Marking({})", self.bit_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_past_one_word() {
        let mut m = Marking::empty(130);
        m.set(0, true);
        m.set(64, true);
        m.set(129, true);
        assert_eq!(m.count(), 3);
        assert_eq!(m.marked_places().collect::<Vec<_>>(), vec![0, 64, 129]);
        m.set(64, false);
        assert!(!m.get(64));
        assert_eq!(m.count(), 2);
    }

    #[test]
    fn bit_string_order() {
        let m = Marking::from_bits(&[true, false, false, true]);
        assert_eq!(m.bit_string(), "1001");
    }
}
