//! Breaking reads into pseudo-MEMs.
//!
//! Every k-mer start `i` of a read gets a flag: does the filter accept the
//! canonical k-mer at `i`? Windows containing a non-ACGT byte are rejected.
//! A maximal run of accepted starts `[s, e]` covers the read segment
//! `[s, e + k)`, and segments of length at least `L` are the pseudo-MEMs.
//! Any exact match of length `>= L` between the read and the indexed text
//! only contains accepted k-mers, so it lies inside one of these segments.

use std::cmp::Reverse;

use thiserror::Error;

use crate::bloom::BloomFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("minimum length L = {min_len} must be greater than k = {k}")]
    MinLenNotAboveK { min_len: usize, k: usize },
}

/// Half-open segment `[start, end)` of a read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PseudoMem {
    pub start: usize,
    pub end: usize,
}

impl PseudoMem {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, start: usize, end: usize) -> bool {
        self.start <= start && end <= self.end
    }
}

/// A k-mer membership oracle that can flag every k-mer start of a read.
pub trait KmerFilter: Sync {
    fn k(&self) -> usize;

    /// Fills `out` with one flag per k-mer start (`read.len() - k + 1`
    /// entries, none if the read is shorter than `k`). Windows with a
    /// non-ACGT byte must be `false`.
    fn mark_kmers(&self, read: &[u8], out: &mut Vec<bool>);
}

impl KmerFilter for BloomFilter {
    fn k(&self) -> usize {
        BloomFilter::k(self)
    }

    fn mark_kmers(&self, read: &[u8], out: &mut Vec<bool>) {
        let k = BloomFilter::k(self);
        out.clear();
        if read.len() < k {
            return;
        }
        out.resize(read.len() - k + 1, false);
        for (pos, hash) in self.hasher().canonical_kmers(read) {
            out[pos] = self.query(hash);
        }
    }
}

/// Bloom filter view that answers through [`BloomFilter::query_batch`].
/// Flags are identical to the plain implementation.
#[derive(Debug, Clone, Copy)]
pub struct Prefetching<'a>(pub &'a BloomFilter);

impl KmerFilter for Prefetching<'_> {
    fn k(&self) -> usize {
        self.0.k()
    }

    fn mark_kmers(&self, read: &[u8], out: &mut Vec<bool>) {
        let k = self.0.k();
        out.clear();
        if read.len() < k {
            return;
        }
        out.resize(read.len() - k + 1, false);
        let (positions, hashes): (Vec<usize>, Vec<u64>) =
            self.0.hasher().canonical_kmers(read).unzip();
        let mut answers = Vec::with_capacity(hashes.len());
        self.0.query_batch(&hashes, &mut answers);
        for (pos, hit) in positions.into_iter().zip(answers) {
            out[pos] = hit;
        }
    }
}

/// Turns per-start flags into the segments covered by maximal runs of
/// `true`, keeping those with length at least `min_len`.
pub fn runs_to_segments(flags: &[bool], k: usize, min_len: usize) -> Vec<PseudoMem> {
    let mut segments = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i < flags.len() && flags[i] {
            i += 1;
        }
        // run covers starts s..i, so the last k-mer ends at (i - 1) + k
        let seg = PseudoMem::new(s, i - 1 + k);
        if seg.len() >= min_len {
            segments.push(seg);
        }
    }
    segments
}

/// Reusable scanning state for one worker.
#[derive(Debug)]
pub struct Scanner<'f, F: KmerFilter + ?Sized> {
    filter: &'f F,
    min_len: usize,
    flags: Vec<bool>,
}

impl<'f, F: KmerFilter + ?Sized> Scanner<'f, F> {
    pub fn new(filter: &'f F, min_len: usize) -> Result<Self, ScanError> {
        let k = filter.k();
        if min_len <= k {
            return Err(ScanError::MinLenNotAboveK { min_len, k });
        }
        Ok(Self {
            filter,
            min_len,
            flags: Vec::new(),
        })
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    /// Pseudo-MEMs of `read`, left to right.
    pub fn scan(&mut self, read: &[u8]) -> Vec<PseudoMem> {
        if read.len() < self.min_len {
            return Vec::new();
        }
        self.filter.mark_kmers(read, &mut self.flags);
        runs_to_segments(&self.flags, self.filter.k(), self.min_len)
    }
}

/// Pseudo-MEMs of `read` with respect to `filter` and minimum length `min_len`.
pub fn scan_read<F: KmerFilter + ?Sized>(
    read: &[u8],
    filter: &F,
    min_len: usize,
) -> Result<Vec<PseudoMem>, ScanError> {
    Ok(Scanner::new(filter, min_len)?.scan(read))
}

/// Sorts by length descending, ties by ascending start, then keeps at most
/// `top` entries.
pub fn sort_and_truncate(mut pms: Vec<PseudoMem>, top: Option<usize>) -> Vec<PseudoMem> {
    pms.sort_by_key(|p| (Reverse(p.len()), p.start));
    if let Some(t) = top {
        pms.truncate(t);
    }
    pms
}

/// Per-read output options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub min_len: usize,
    /// Order each read's pseudo-MEMs by non-increasing length.
    pub sort: bool,
    /// Keep only the `t` longest per read. Implies sorting by length first.
    pub top: Option<usize>,
}

impl ScanOptions {
    pub fn new(min_len: usize) -> Self {
        Self {
            min_len,
            sort: false,
            top: None,
        }
    }

    /// Applies sorting and truncation to one read's pseudo-MEMs.
    pub fn finish(&self, pms: Vec<PseudoMem>) -> Vec<PseudoMem> {
        match (self.sort, self.top) {
            (_, Some(t)) => {
                let mut kept = sort_and_truncate(pms, Some(t));
                if !self.sort {
                    kept.sort_by_key(|p| p.start);
                }
                kept
            }
            (true, None) => sort_and_truncate(pms, None),
            (false, None) => pms,
        }
    }
}
