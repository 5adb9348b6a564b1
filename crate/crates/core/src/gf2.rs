//! Incremental Gaussian elimination over GF(2).
//!
//! Rows are dense bitsets. The pivot of a row is its highest set bit, so after
//! reduction the free columns are the lowest-numbered non-pivot columns:
//! callers order columns so that preferred free variables come first.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(nbits: usize) -> Self {
        Self {
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn from_bits(nbits: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut row = Self::zeros(nbits);
        for b in bits {
            row.flip(b);
        }
        row
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn set(&mut self, bit: usize, value: bool) {
        if self.get(bit) != value {
            self.flip(bit);
        }
    }

    pub fn flip(&mut self, bit: usize) {
        self.words[bit / 64] ^= 1 << (bit % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn highest_bit(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Insert {
    Added,
    Redundant,
    Conflict,
}

/// Row echelon form built one equation at a time.
#[derive(Clone, Debug)]
pub struct Echelon {
    nbits: usize,
    pivots: Vec<Option<(BitRow, bool)>>,
    rank: usize,
}

/// Reduced solution of a consistent system.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Free columns set to zero.
    pub particular: BitRow,
    /// Non-pivot columns, ascending.
    pub free: Vec<usize>,
    /// One vector per free column, in the same order.
    pub nullspace: Vec<BitRow>,
}

impl Echelon {
    pub fn new(nbits: usize) -> Self {
        Self {
            nbits,
            pivots: vec![None; nbits],
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Reduces `row` against the current pivots. A zero result means the row
    /// is implied, with the returned parity being the implied right-hand side
    /// relative to the input parity (nonzero = contradiction).
    pub fn reduce(&self, mut row: BitRow, mut parity: bool) -> (BitRow, bool) {
        while let Some(h) = row.highest_bit() {
            match &self.pivots[h] {
                Some((pivot, pp)) => {
                    row.xor_assign(pivot);
                    parity ^= pp;
                }
                None => break,
            }
        }
        (row, parity)
    }

    pub fn insert(&mut self, row: BitRow, parity: bool) -> Insert {
        let (row, parity) = self.reduce(row, parity);
        match row.highest_bit() {
            Some(h) => {
                self.pivots[h] = Some((row, parity));
                self.rank += 1;
                Insert::Added
            }
            None if parity => Insert::Conflict,
            None => Insert::Redundant,
        }
    }

    /// The value forced on `bit`, if the current rows determine it.
    pub fn forced_value(&self, bit: usize) -> Option<bool> {
        let (rest, parity) = self.reduce(BitRow::from_bits(self.nbits, [bit]), false);
        rest.is_zero().then_some(parity)
    }

    pub fn solve(mut self) -> Solution {
        // Back-substitute so every pivot column is cleared from other rows.
        for h in 0..self.nbits {
            let Some((row_h, parity_h)) = self.pivots[h].clone() else { continue };
            for hp in h + 1..self.nbits {
                if let Some((row, parity)) = self.pivots[hp].as_mut() {
                    if row.get(h) {
                        row.xor_assign(&row_h);
                        *parity ^= parity_h;
                    }
                }
            }
        }
        let free: Vec<usize> = (0..self.nbits).filter(|&c| self.pivots[c].is_none()).collect();
        let mut particular = BitRow::zeros(self.nbits);
        for (h, entry) in self.pivots.iter().enumerate() {
            if let Some((_, parity)) = entry {
                particular.set(h, *parity);
            }
        }
        let nullspace = free
            .iter()
            .map(|&f| {
                let mut v = BitRow::zeros(self.nbits);
                v.set(f, true);
                for (h, entry) in self.pivots.iter().enumerate() {
                    if let Some((row, _)) = entry {
                        if row.get(f) {
                            v.set(h, true);
                        }
                    }
                }
                v
            })
            .collect();
        Solution {
            particular,
            free,
            nullspace,
        }
    }
}
