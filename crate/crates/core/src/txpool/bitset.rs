use std::collections::VecDeque;
use std::fmt;

use super::GlobalPool;
use super::TxPoolError;

const WORD_BITS: usize = 64;

/// A fixed-length transaction bit sequence with a `low`/`high` window.
///
/// Transaction `k` is a member iff its bit is set and `low <= k <= high`.
/// A node mempool starts with every bit set and an empty window; a block
/// starts with every bit clear.
///
/// Storage is sparse. Only a contiguous run of words is materialised: bits
/// below the run are zero and bits above it equal `tail`. A fresh mempool of
/// a million transactions therefore costs nothing, and a block only stores
/// the words spanned by its window.
#[derive(Clone, PartialEq, Eq)]
pub struct TxBitset {
    len: usize,
    offset: usize,
    words: VecDeque<u64>,
    tail: bool,
    window: Option<(usize, usize)>,
}

impl TxBitset {
    /// A node mempool (`TN`): all bits set, window empty.
    pub fn mempool(len: usize) -> Self {
        TxBitset { len, offset: 0, words: VecDeque::new(), tail: true, window: None }
    }

    /// An empty block bitset (`TB`): all bits clear, window empty.
    pub fn block(len: usize) -> Self {
        TxBitset { len, offset: 0, words: VecDeque::new(), tail: false, window: None }
    }

    /// A block bitset holding exactly `indices` (ascending); the window is
    /// bounded by the first and last index.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut tb = TxBitset::block(len);
        let (Some(&first), Some(&last)) = (indices.first(), indices.last()) else {
            return tb;
        };
        debug_assert!(last < len);
        tb.offset = first / WORD_BITS;
        tb.words = VecDeque::from(vec![0u64; last / WORD_BITS - tb.offset + 1]);
        for &k in indices {
            tb.words[k / WORD_BITS - tb.offset] |= 1 << (k % WORD_BITS);
        }
        tb.window = Some((first, last));
        tb
    }

    /// Builds a bitset from explicit bits (index 0 first) and a window.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I, window: Option<(usize, usize)>) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let len = bits.len();
        let mut words = VecDeque::from(vec![0u64; len.div_ceil(WORD_BITS)]);
        for (k, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            words[k / WORD_BITS] |= 1 << (k % WORD_BITS);
        }
        if let Some((low, high)) = window {
            assert!(low <= high && high < len, "invalid window ({low}, {high}) for length {len}");
        }
        TxBitset { len, offset: 0, words, tail: false, window }
    }

    /// Parses a string of `0`/`1` characters, leftmost character first.
    pub fn parse(bits: &str, window: Option<(usize, usize)>) -> Self {
        TxBitset::from_bits(bits.chars().map(|c| c == '1'), window)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_none()
    }

    /// `(low, high)`, or `None` when the window is empty (both pointers -1).
    pub fn window(&self) -> Option<(usize, usize)> {
        self.window
    }

    pub fn low(&self) -> i64 {
        self.window.map_or(-1, |w| w.0 as i64)
    }

    pub fn high(&self) -> i64 {
        self.window.map_or(-1, |w| w.1 as i64)
    }

    #[inline]
    fn end(&self) -> usize {
        self.offset + self.words.len()
    }

    #[inline]
    fn fill(&self) -> u64 {
        if self.tail {
            u64::MAX
        } else {
            0
        }
    }

    #[inline]
    fn word(&self, j: usize) -> u64 {
        if j < self.offset {
            0
        } else if j >= self.end() {
            self.fill()
        } else {
            self.words[j - self.offset]
        }
    }

    /// Raw bit value, ignoring the window.
    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.len, "bit {k} out of range for length {}", self.len);
        self.word(k / WORD_BITS) >> (k % WORD_BITS) & 1 == 1
    }

    /// Whether transaction `k` is a member (bit set and inside the window).
    pub fn contains(&self, k: usize) -> bool {
        matches!(self.window, Some((l, h)) if l <= k && k <= h) && self.bit(k)
    }

    /// Number of materialised 64-bit words.
    pub fn stored_words(&self) -> usize {
        self.words.len()
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|k| if self.bit(k) { '1' } else { '0' }).collect()
    }

    /// Smallest set bit in `from..=to`.
    fn first_set_in(&self, from: usize, to: usize) -> Option<usize> {
        if from > to {
            return None;
        }
        let from = from.max(self.offset * WORD_BITS);
        if from > to {
            return None;
        }
        let (first_word, last_word) = (from / WORD_BITS, to / WORD_BITS);
        for j in first_word..=last_word {
            let mut w = self.word(j);
            if j == first_word {
                w &= u64::MAX << (from % WORD_BITS);
            }
            if j == last_word && to % WORD_BITS != WORD_BITS - 1 {
                w &= (1u64 << (to % WORD_BITS + 1)) - 1;
            }
            if w != 0 {
                return Some(j * WORD_BITS + w.trailing_zeros() as usize);
            }
            if j >= self.end() {
                // Past the stored run every word equals the (zero) fill.
                return None;
            }
        }
        None
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let (mut next, high) = match self.window {
            Some((l, h)) => (l, h),
            None => (1, 0),
        };
        std::iter::from_fn(move || {
            let k = self.first_set_in(next, high)?;
            next = k + 1;
            Some(k)
        })
    }

    pub fn count(&self) -> usize {
        self.iter().count()
    }

    fn ensure_stored(&mut self, j: usize) {
        while j < self.offset {
            self.words.push_front(0);
            self.offset -= 1;
        }
        let fill = self.fill();
        while j >= self.end() {
            self.words.push_back(fill);
        }
    }

    /// Makes every bit in word `cut` and above equal to `value`.
    fn set_tail_from(&mut self, cut: usize, value: bool) {
        if cut > self.offset {
            self.ensure_stored(cut - 1);
            self.words.truncate(cut - self.offset);
        } else {
            self.words.clear();
            self.offset = cut;
        }
        self.tail = value;
    }

    fn trim_front(&mut self) {
        while self.words.front() == Some(&0) {
            self.words.pop_front();
            self.offset += 1;
        }
    }

    fn retrim_low(&mut self) {
        if let Some((low, high)) = self.window {
            self.window = self.first_set_in(low, high).map(|l| (l, high));
        }
    }

    /// Moves `high` to the last transaction generated at or before `clock`
    /// and `low` to the first set bit at or after the old `low`.
    pub fn advance_window(&mut self, clock: f64, pool: &GlobalPool) {
        let Some(new_high) = pool.last_at_or_before(clock) else {
            return;
        };
        let start = match self.window {
            Some((_, high)) if new_high <= high => return,
            Some((low, _)) => low,
            None => 0,
        };
        self.window = self.first_set_in(start, new_high).map(|l| (l, new_high));
    }

    /// Earliest-first block assembly: the lowest-index members, taken while
    /// the running size stays within `max_size_mb`.
    pub fn select(&self, max_size_mb: f64, pool: &GlobalPool) -> TxBitset {
        let mut total = 0.0;
        let mut chosen = Vec::new();
        for k in self.iter() {
            let size = pool.size_mb(k);
            if total + size > max_size_mb {
                break;
            }
            total += size;
            chosen.push(k);
        }
        TxBitset::from_indices(self.len, &chosen)
    }

    fn check_len(&self, other: &TxBitset) -> Result<(), TxPoolError> {
        if self.len != other.len {
            return Err(TxPoolError::LengthMismatch { left: self.len, right: other.len });
        }
        Ok(())
    }

    /// `self = self AND NOT other`: drop every transaction `other` includes.
    pub fn remove_included(&mut self, other: &TxBitset) -> Result<(), TxPoolError> {
        self.check_len(other)?;
        for (i, &b) in other.words.iter().enumerate() {
            let j = other.offset + i;
            if b == 0 || j < self.offset || (j >= self.end() && !self.tail) {
                continue;
            }
            self.ensure_stored(j);
            let idx = j - self.offset;
            self.words[idx] &= !b;
        }
        if other.tail {
            self.set_tail_from(other.end(), false);
        }
        self.trim_front();
        self.retrim_low();
        Ok(())
    }

    /// `self = self OR other`: return `other`'s transactions to the mempool
    /// and widen the window to cover them.
    pub fn release(&mut self, other: &TxBitset) -> Result<(), TxPoolError> {
        self.check_len(other)?;
        for (i, &b) in other.words.iter().enumerate() {
            let j = other.offset + i;
            if b == 0 || (j >= self.end() && self.tail) {
                continue;
            }
            self.ensure_stored(j);
            let idx = j - self.offset;
            self.words[idx] |= b;
        }
        if other.tail {
            self.set_tail_from(other.end(), true);
        }
        if let Some((ol, oh)) = other.window {
            self.window = Some(match self.window {
                None => (ol, oh),
                Some((l, h)) => (l.min(ol), h.max(oh)),
            });
        }
        self.retrim_low();
        Ok(())
    }
}

impl fmt::Debug for TxBitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TxBitset")
            .field("len", &self.len)
            .field("low", &self.low())
            .field("high", &self.high())
            .field("stored_words", &self.words.len())
            .finish()
    }
}
