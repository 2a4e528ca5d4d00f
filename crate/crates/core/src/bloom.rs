//! Power-of-two Bloom filter over canonical k-mer hashes.
//!
//! Bit positions come from multiplicative hashing: the key is multiplied by
//! an odd 64-bit seed and the top `log2m` bits of the product are kept, so no
//! modulo is needed. Bits are set with atomic OR, which lets several threads
//! insert into one shared filter.

use std::io::{self, Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::kmer_hash::{HashError, KmerHasher, DEFAULT_BASE_SEEDS};
use crate::prefetch::{prefetch_read, PREFETCH_DISTANCE};

pub const MAGIC: &[u8; 5] = b"KEBAB";
pub const FORMAT_VERSION: u8 = b'1';
/// Fixed header bytes before the index seeds.
pub const HEADER_LEN: usize = 17;
pub const MIN_LOG2M: u32 = 10;
pub const MAX_LOG2M: u32 = 40;

#[derive(Debug, Error)]
pub enum BloomError {
    #[error("false-positive rate must lie in (0, 1), got {0}")]
    FpRate(f64),
    #[error("expected item count must be at least 1")]
    ZeroItems,
    #[error("hash function count must be in [1, 255], got {0}")]
    HashCount(u32),
    #[error("k must be in [1, 255], got {0}")]
    K(usize),
    #[error("log2 of filter size {0} outside [{MIN_LOG2M}, {MAX_LOG2M}]")]
    Log2m(u32),
    #[error("index seed {0:#x} is even")]
    EvenSeed(u64),
    #[error("bad magic bytes, not a filter file")]
    BadMagic,
    #[error("unsupported filter format version {0:?}")]
    UnsupportedVersion(char),
    #[error("reserved header bytes are not zero")]
    Reserved,
    #[error("filter file is truncated")]
    Truncated,
    #[error("unexpected bytes after the bit array")]
    TrailingData,
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Io(io::Error),
}

impl BloomError {
    /// True for errors caused by malformed filter bytes rather than I/O or
    /// bad parameters.
    pub fn is_format(&self) -> bool {
        matches!(
            self,
            BloomError::BadMagic
                | BloomError::UnsupportedVersion(_)
                | BloomError::Reserved
                | BloomError::Truncated
                | BloomError::TrailingData
                | BloomError::Log2m(_)
                | BloomError::EvenSeed(_)
                | BloomError::HashCount(_)
                | BloomError::K(_)
        )
    }
}

fn check_fp_rate(eps: f64) -> Result<(), BloomError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(BloomError::FpRate(eps))
    }
}

/// Filter size minimizing bits for `n` items at rate `eps`, with the
/// matching hash count: `m = ceil(-n ln eps / ln^2 2)`,
/// `h = round(-ln eps / ln 2)` (at least 1).
pub fn optimal_size(n: u64, eps: f64) -> Result<(u64, u32), BloomError> {
    if n == 0 {
        return Err(BloomError::ZeroItems);
    }
    check_fp_rate(eps)?;
    let ln2 = std::f64::consts::LN_2;
    let m = (-(n as f64) * eps.ln() / (ln2 * ln2)).ceil();
    let h = (-eps.ln() / ln2).round().max(1.0);
    Ok((m as u64, h as u32))
}

/// Smallest filter reaching rate `eps` for `n` items with exactly `h`
/// hashes, from inverting `eps = (1 - e^{-hn/m})^h`.
pub fn size_given_h(n: u64, eps: f64, h: u32) -> Result<u64, BloomError> {
    if n == 0 {
        return Err(BloomError::ZeroItems);
    }
    check_fp_rate(eps)?;
    if h == 0 {
        return Err(BloomError::HashCount(h));
    }
    let root = (eps.ln() / f64::from(h)).exp();
    let m = -f64::from(h) * n as f64 / (-root).ln_1p();
    Ok(m.ceil() as u64)
}

/// Rounds a bit count to a power of two: down to the previous power unless
/// `m` is within 10% of the next one.
pub fn round_pow2(m: u64) -> u32 {
    let m = m.max(2);
    let up = m.next_power_of_two();
    if up == m || m as f64 >= 0.9 * up as f64 {
        up.trailing_zeros()
    } else {
        63 - m.leading_zeros()
    }
}

/// Approximate false-positive rate `(1 - e^{-hn/m})^h`.
pub fn expected_fp_rate(n: f64, m: f64, h: u32) -> f64 {
    (1.0 - (-(f64::from(h)) * n / m).exp()).powi(h as i32)
}

/// Deterministic odd multipliers; the first is the 64-bit golden ratio.
pub fn default_index_seeds(h: u32) -> Vec<u64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    (0..h)
        .map(|j| {
            if j == 0 {
                return state;
            }
            // splitmix64
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            (z ^ (z >> 31)) | 1
        })
        .collect()
}

/// Sizing outcome for a planned filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizePlan {
    /// Bit count from the closed-form formula, before rounding.
    pub exact_bits: u64,
    pub log2m: u32,
    pub h: u32,
    /// `(1 - e^{-hn/m})^h` for the rounded `m`.
    pub predicted_fp: f64,
}

impl SizePlan {
    /// Sizes a filter for `n` items. Without `h` the optimal hash count is
    /// used; the rounded size is clamped to `[MIN_LOG2M, MAX_LOG2M]`.
    pub fn new(n: u64, eps: f64, h: Option<u32>) -> Result<Self, BloomError> {
        let n = n.max(1);
        let (exact_bits, h) = match h {
            Some(h) => (size_given_h(n, eps, h)?, h),
            None => optimal_size(n, eps)?,
        };
        if h > 255 {
            return Err(BloomError::HashCount(h));
        }
        let log2m = round_pow2(exact_bits).clamp(MIN_LOG2M, MAX_LOG2M);
        Ok(Self {
            exact_bits,
            log2m,
            h,
            predicted_fp: expected_fp_rate(n as f64, (1u64 << log2m) as f64, h),
        })
    }

    pub fn bits(&self) -> u64 {
        1 << self.log2m
    }
}

pub struct BloomFilter {
    k: usize,
    log2m: u32,
    shift: u32,
    index_seeds: Vec<u64>,
    base_seeds: [u64; 4],
    bits: Vec<AtomicU64>,
}

impl std::fmt::Debug for BloomFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BloomFilter")
            .field("k", &self.k)
            .field("log2m", &self.log2m)
            .field("index_seeds", &self.index_seeds)
            .finish_non_exhaustive()
    }
}

impl PartialEq for BloomFilter {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.log2m == other.log2m
            && self.index_seeds == other.index_seeds
            && self.base_seeds == other.base_seeds
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(a, b)| a.load(Ordering::Relaxed) == b.load(Ordering::Relaxed))
    }
}

impl BloomFilter {
    /// Empty filter of `2^log2m` bits with `h` default index seeds.
    pub fn new(k: usize, log2m: u32, h: u32) -> Result<Self, BloomError> {
        if h == 0 || h > 255 {
            return Err(BloomError::HashCount(h));
        }
        Self::with_seeds(k, log2m, default_index_seeds(h), DEFAULT_BASE_SEEDS)
    }

    pub fn from_plan(k: usize, plan: &SizePlan) -> Result<Self, BloomError> {
        Self::new(k, plan.log2m, plan.h)
    }

    pub fn with_seeds(
        k: usize,
        log2m: u32,
        index_seeds: Vec<u64>,
        base_seeds: [u64; 4],
    ) -> Result<Self, BloomError> {
        if k == 0 || k > 255 {
            return Err(BloomError::K(k));
        }
        if !(MIN_LOG2M..=MAX_LOG2M).contains(&log2m) {
            return Err(BloomError::Log2m(log2m));
        }
        if index_seeds.is_empty() || index_seeds.len() > 255 {
            return Err(BloomError::HashCount(index_seeds.len() as u32));
        }
        if let Some(&s) = index_seeds.iter().find(|s| *s & 1 == 0) {
            return Err(BloomError::EvenSeed(s));
        }
        let words = 1usize << (log2m - 6);
        Ok(Self {
            k,
            log2m,
            shift: 64 - log2m,
            index_seeds,
            base_seeds,
            bits: (0..words).map(|_| AtomicU64::new(0)).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn log2m(&self) -> u32 {
        self.log2m
    }

    /// Filter size in bits.
    pub fn bit_len(&self) -> u64 {
        1 << self.log2m
    }

    pub fn hash_count(&self) -> u32 {
        self.index_seeds.len() as u32
    }

    pub fn index_seeds(&self) -> &[u64] {
        &self.index_seeds
    }

    pub fn base_seeds(&self) -> [u64; 4] {
        self.base_seeds
    }

    /// A k-mer hasher using this filter's `k` and base seeds.
    pub fn hasher(&self) -> KmerHasher {
        KmerHasher::with_seeds(self.k, self.base_seeds).expect("k validated at construction")
    }

    /// Bit position of `key` under index function `j`.
    #[inline]
    pub fn index(&self, key: u64, j: usize) -> u64 {
        key.wrapping_mul(self.index_seeds[j]) >> self.shift
    }

    #[inline]
    fn word_and_mask(pos: u64) -> (usize, u64) {
        ((pos >> 6) as usize, 1u64 << (pos & 63))
    }

    #[inline]
    pub fn insert(&self, key: u64) {
        for j in 0..self.index_seeds.len() {
            let (w, mask) = Self::word_and_mask(self.index(key, j));
            self.bits[w].fetch_or(mask, Ordering::Relaxed);
        }
    }

    #[inline]
    pub fn query(&self, key: u64) -> bool {
        (0..self.index_seeds.len()).all(|j| {
            let (w, mask) = Self::word_and_mask(self.index(key, j));
            self.bits[w].load(Ordering::Relaxed) & mask != 0
        })
    }

    /// Answers `keys` into `out`, prefetching the words of the key
    /// [`PREFETCH_DISTANCE`] positions ahead. Same answers as [`query`].
    ///
    /// [`query`]: BloomFilter::query
    pub fn query_batch(&self, keys: &[u64], out: &mut Vec<bool>) {
        out.clear();
        out.reserve(keys.len());
        let h = self.index_seeds.len();
        for &key in keys.iter().take(PREFETCH_DISTANCE) {
            self.prefetch_key(key, h);
        }
        for (i, &key) in keys.iter().enumerate() {
            if let Some(&ahead) = keys.get(i + PREFETCH_DISTANCE) {
                self.prefetch_key(ahead, h);
            }
            out.push(self.query(key));
        }
    }

    #[inline]
    fn prefetch_key(&self, key: u64, h: usize) {
        for j in 0..h {
            let (w, _) = Self::word_and_mask(self.index(key, j));
            prefetch_read(self.bits[w].as_ptr());
        }
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> u64 {
        self.bits
            .iter()
            .map(|w| u64::from(w.load(Ordering::Relaxed).count_ones()))
            .sum()
    }

    /// Serialized size: header, seeds, then the bit array.
    pub fn file_len(&self) -> u64 {
        (HEADER_LEN + 8 * self.index_seeds.len() + 32) as u64 + self.bit_len() / 8
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[..5].copy_from_slice(MAGIC);
        header[5] = FORMAT_VERSION;
        header[6] = self.k as u8;
        header[7] = self.index_seeds.len() as u8;
        header[8] = self.log2m as u8;
        w.write_all(&header)?;
        for s in &self.index_seeds {
            w.write_all(&s.to_le_bytes())?;
        }
        for s in &self.base_seeds {
            w.write_all(&s.to_le_bytes())?;
        }
        // Bit i sits in byte i / 8 at position i % 8, which is exactly the
        // little-endian layout of the 64-bit words.
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in self.bits.chunks(4096) {
            buf.clear();
            for word in chunk {
                buf.extend_from_slice(&word.load(Ordering::Relaxed).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.file_len() as usize);
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, BloomError> {
        let mut header = [0u8; HEADER_LEN];
        read_exact(&mut r, &mut header)?;
        if &header[..5] != MAGIC {
            return Err(BloomError::BadMagic);
        }
        if header[5] != FORMAT_VERSION {
            return Err(BloomError::UnsupportedVersion(header[5] as char));
        }
        if header[9..].iter().any(|&b| b != 0) {
            return Err(BloomError::Reserved);
        }
        let k = header[6] as usize;
        let h = header[7] as usize;
        let log2m = u32::from(header[8]);
        if !(MIN_LOG2M..=MAX_LOG2M).contains(&log2m) {
            return Err(BloomError::Log2m(log2m));
        }
        let mut word = [0u8; 8];
        let mut index_seeds = Vec::with_capacity(h);
        for _ in 0..h {
            read_exact(&mut r, &mut word)?;
            index_seeds.push(u64::from_le_bytes(word));
        }
        let mut base_seeds = [0u64; 4];
        for s in base_seeds.iter_mut() {
            read_exact(&mut r, &mut word)?;
            *s = u64::from_le_bytes(word);
        }
        let filter = Self::with_seeds(k, log2m, index_seeds, base_seeds)?;
        let mut buf = vec![0u8; 8 * 4096];
        for chunk in filter.bits.chunks(4096) {
            let bytes = &mut buf[..8 * chunk.len()];
            read_exact(&mut r, bytes)?;
            for (slot, b) in chunk.iter().zip(bytes.chunks_exact(8)) {
                slot.store(
                    u64::from_le_bytes(b.try_into().expect("8-byte chunk")),
                    Ordering::Relaxed,
                );
            }
        }
        match r.read(&mut word) {
            Ok(0) => Ok(filter),
            Ok(_) => Err(BloomError::TrailingData),
            Err(e) => Err(BloomError::Io(e)),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BloomError> {
        Self::read_from(bytes)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), BloomError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => BloomError::Truncated,
        _ => BloomError::Io(e),
    })
}
