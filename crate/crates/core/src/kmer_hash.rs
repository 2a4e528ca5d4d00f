//! Rolling canonical k-mer hashing over both DNA strands.
//!
//! The forward hash of a window `w[0..k]` is the XOR of each base seed
//! rotated left by its distance from the window end; the reverse-complement
//! hash is the XOR of the complement seeds rotated left by their distance
//! from the window start. Rolling by one base uses two precomputed tables of
//! seeds rotated by `k`, so each step is a handful of lookups, XORs and a
//! single one-bit rotation per strand.

use thiserror::Error;

/// Seeds for `A`, `C`, `G`, `T`, in that order.
///
/// These values are written into every filter file, so changing them breaks
/// compatibility with existing filters.
pub const DEFAULT_BASE_SEEDS: [u64; 4] = [
    0x3c8b_fbb3_95c6_0474,
    0x3193_c185_62a0_2b4c,
    0x2032_3ed0_8257_2324,
    0x2955_49f5_4be2_4456,
];

/// Sentinel code for anything outside `ACGTacgt`.
pub const INVALID_BASE: u8 = 4;

const fn build_codes() -> [u8; 256] {
    let mut table = [INVALID_BASE; 256];
    table[b'A' as usize] = 0;
    table[b'C' as usize] = 1;
    table[b'G' as usize] = 2;
    table[b'T' as usize] = 3;
    table[b'a' as usize] = 0;
    table[b'c' as usize] = 1;
    table[b'g' as usize] = 2;
    table[b't' as usize] = 3;
    table
}

static BASE_CODES: [u8; 256] = build_codes();

/// 2-bit code of a nucleotide (`A=0, C=1, G=2, T=3`), or [`INVALID_BASE`].
/// Lowercase bases are accepted.
#[inline]
pub fn base_code(b: u8) -> u8 {
    BASE_CODES[b as usize]
}

/// Complement of a 2-bit base code.
#[inline]
pub fn complement_code(c: u8) -> u8 {
    3 - c
}

/// Reverse complement of a nucleotide string. Non-ACGT bytes map to `N`.
pub fn reverse_complement(seq: &[u8]) -> Vec<u8> {
    seq.iter()
        .rev()
        .map(|&b| match base_code(b) {
            0 => b'T',
            1 => b'G',
            2 => b'C',
            3 => b'A',
            _ => b'N',
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("window length {got} does not match k = {k}")]
    WindowLength { k: usize, got: usize },
    /// The window contains a byte outside `ACGTacgt`; the caller has to
    /// restart past it.
    #[error("invalid base {0:#04x} in window")]
    InvalidBase(u8),
}

/// Dual-strand rolling hash state for a fixed `k`.
#[derive(Debug, Clone)]
pub struct KmerHasher {
    k: usize,
    fwd: u64,
    rc: u64,
    base_seed: [u64; 4],
    comp_seed: [u64; 4],
    rolk_base: [u64; 4],
    rolk_comp: [u64; 4],
}

impl KmerHasher {
    pub fn new(k: usize) -> Result<Self, HashError> {
        Self::with_seeds(k, DEFAULT_BASE_SEEDS)
    }

    pub fn with_seeds(k: usize, base_seed: [u64; 4]) -> Result<Self, HashError> {
        if k == 0 {
            return Err(HashError::ZeroK);
        }
        let comp_seed = [base_seed[3], base_seed[2], base_seed[1], base_seed[0]];
        let rot = (k % 64) as u32;
        Ok(Self {
            k,
            fwd: 0,
            rc: 0,
            base_seed,
            comp_seed,
            rolk_base: base_seed.map(|s| s.rotate_left(rot)),
            rolk_comp: comp_seed.map(|s| s.rotate_left(rot)),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base_seeds(&self) -> &[u64; 4] {
        &self.base_seed
    }

    pub fn comp_seeds(&self) -> &[u64; 4] {
        &self.comp_seed
    }

    pub fn rolk_base(&self) -> &[u64; 4] {
        &self.rolk_base
    }

    pub fn rolk_comp(&self) -> &[u64; 4] {
        &self.rolk_comp
    }

    /// Forward-strand hash of the current window.
    #[inline]
    pub fn fwd_hash(&self) -> u64 {
        self.fwd
    }

    /// Reverse-complement-strand hash of the current window.
    #[inline]
    pub fn rc_hash(&self) -> u64 {
        self.rc
    }

    /// The smaller of the two strand hashes.
    #[inline]
    pub fn canonical(&self) -> u64 {
        self.fwd.min(self.rc)
    }

    /// Hashes `window` from scratch. On error the state is left unchanged.
    pub fn init_window(&mut self, window: &[u8]) -> Result<(), HashError> {
        if window.len() != self.k {
            return Err(HashError::WindowLength {
                k: self.k,
                got: window.len(),
            });
        }
        let mut fwd = 0u64;
        let mut rc = 0u64;
        for (i, &b) in window.iter().enumerate() {
            let c = base_code(b);
            if c == INVALID_BASE {
                return Err(HashError::InvalidBase(b));
            }
            let c = c as usize;
            fwd ^= self.base_seed[c].rotate_left(((self.k - 1 - i) % 64) as u32);
            rc ^= self.comp_seed[c].rotate_left((i % 64) as u32);
        }
        self.fwd = fwd;
        self.rc = rc;
        Ok(())
    }

    /// Slides the window one base to the right. `outgoing` must be the first
    /// base of the current window.
    #[inline]
    pub fn roll(&mut self, outgoing: u8, incoming: u8) -> Result<(), HashError> {
        let out = base_code(outgoing);
        let inc = base_code(incoming);
        if inc == INVALID_BASE {
            return Err(HashError::InvalidBase(incoming));
        }
        if out == INVALID_BASE {
            return Err(HashError::InvalidBase(outgoing));
        }
        self.roll_codes(out as usize, inc as usize);
        Ok(())
    }

    #[inline(always)]
    fn roll_codes(&mut self, out: usize, inc: usize) {
        self.fwd = self.fwd.rotate_left(1) ^ self.rolk_base[out] ^ self.base_seed[inc];
        self.rc = (self.rc ^ self.comp_seed[out] ^ self.rolk_comp[inc]).rotate_right(1);
    }

    /// Iterates over the canonical hashes of every valid k-mer of `seq`.
    pub fn canonical_kmers<'a>(&self, seq: &'a [u8]) -> CanonicalKmers<'a> {
        CanonicalKmers {
            hasher: self.clone(),
            seq,
            next: 0,
            valid_from: 0,
            primed: false,
            inits: 0,
            rolls: 0,
        }
    }
}

/// Iterator of `(position, canonical hash)` over the valid k-mers of a
/// sequence. Windows containing a non-ACGT byte are skipped.
#[derive(Debug, Clone)]
pub struct CanonicalKmers<'a> {
    hasher: KmerHasher,
    seq: &'a [u8],
    /// Start of the next window to emit.
    next: usize,
    /// No invalid base at or after this index has been seen before `next`.
    valid_from: usize,
    primed: bool,
    inits: usize,
    rolls: usize,
}

impl CanonicalKmers<'_> {
    /// Number of from-scratch window hashes performed so far.
    pub fn inits(&self) -> usize {
        self.inits
    }

    /// Number of single-base rolls performed so far.
    pub fn rolls(&self) -> usize {
        self.rolls
    }

    /// Finds the first window start `>= from` with no invalid base.
    fn find_valid_window(&self, mut from: usize) -> Option<usize> {
        let k = self.hasher.k;
        let mut run = 0usize;
        let mut i = from;
        while i < self.seq.len() {
            if base_code(self.seq[i]) == INVALID_BASE {
                run = 0;
                from = i + 1;
            } else {
                run += 1;
                if run == k {
                    return Some(from);
                }
            }
            i += 1;
        }
        None
    }
}

impl Iterator for CanonicalKmers<'_> {
    type Item = (usize, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let k = self.hasher.k;
        if self.next + k > self.seq.len() {
            return None;
        }
        if self.primed {
            let incoming = self.seq[self.next + k - 1];
            let inc = base_code(incoming);
            if inc != INVALID_BASE {
                let out = base_code(self.seq[self.next - 1]) as usize;
                self.hasher.roll_codes(out, inc as usize);
                self.rolls += 1;
                let pos = self.next;
                self.next += 1;
                return Some((pos, self.hasher.canonical()));
            }
            self.primed = false;
            self.valid_from = self.next + k;
        }
        let start = self.find_valid_window(self.valid_from.max(self.next))?;
        self.hasher
            .init_window(&self.seq[start..start + k])
            .expect("window was checked for invalid bases");
        self.inits += 1;
        self.primed = true;
        self.next = start + 1;
        Some((start, self.hasher.canonical()))
    }
}
