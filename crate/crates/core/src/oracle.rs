//! Ground truth for small instances.
//!
//! [`brute_mems`] finds maximal exact matches by direct comparison against
//! every text position, with no index. [`ExactKmerSet`] is a filter with no
//! false positives. [`early_stop_select`] simulates a MEM-finder that visits
//! pseudo-MEMs longest first and stops once the remaining ones cannot hold a
//! longer match.

use std::collections::{BTreeSet, HashSet};

use crate::kmer_hash::{base_code, INVALID_BASE};
use crate::scanner::{KmerFilter, PseudoMem};

/// A maximal exact match `pattern[start..end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mem {
    pub start: usize,
    pub end: usize,
}

impl Mem {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Longest match length of every suffix of `pattern` against any position
/// of `text`. Only `ACGT` (either case) bytes can match.
pub fn match_lengths(pattern: &[u8], text: &[u8]) -> Vec<usize> {
    let p: Vec<u8> = pattern.iter().map(|&b| base_code(b)).collect();
    let t: Vec<u8> = text.iter().map(|&b| base_code(b)).collect();
    let mut best = vec![0usize; p.len()];
    // row[j] = common prefix length of p[i..] and t[j..], built from the right
    let mut row = vec![0u32; t.len() + 1];
    let mut next = vec![0u32; t.len() + 1];
    for i in (0..p.len()).rev() {
        let c = p[i];
        let mut longest = 0u32;
        if c != INVALID_BASE {
            for j in 0..t.len() {
                let v = if t[j] == c { row[j + 1] + 1 } else { 0 };
                next[j] = v;
                longest = longest.max(v);
            }
        } else {
            next[..t.len()].fill(0);
        }
        best[i] = longest as usize;
        std::mem::swap(&mut row, &mut next);
    }
    best
}

/// All MEMs of `pattern` against `text` with length at least `min_len`,
/// sorted by start.
pub fn brute_mems(pattern: &[u8], text: &[u8], min_len: usize) -> Vec<Mem> {
    let ell = match_lengths(pattern, text);
    (0..pattern.len())
        .filter(|&i| ell[i] >= min_len.max(1) && (i == 0 || ell[i - 1] < ell[i] + 1))
        .map(|i| Mem {
            start: i,
            end: i + ell[i],
        })
        .collect()
}

/// Packs a k-mer (k <= 32) into 2 bits per base; `None` on a non-ACGT byte.
fn pack(kmer: &[u8]) -> Option<u64> {
    kmer.iter().try_fold(0u64, |acc, &b| {
        let c = base_code(b);
        (c != INVALID_BASE).then(|| (acc << 2) | u64::from(c))
    })
}

fn pack_revcomp(kmer: &[u8]) -> Option<u64> {
    kmer.iter().rev().try_fold(0u64, |acc, &b| {
        let c = base_code(b);
        (c != INVALID_BASE).then(|| (acc << 2) | u64::from(3 - c))
    })
}

fn canonical_packed(kmer: &[u8]) -> Option<u64> {
    Some(pack(kmer)?.min(pack_revcomp(kmer)?))
}

/// Exact set of the canonical k-mers of some texts. Drop-in replacement for
/// the Bloom filter in scanning, with no false positives.
#[derive(Debug, Clone, Default)]
pub struct ExactKmerSet {
    k: usize,
    kmers: HashSet<u64>,
}

impl ExactKmerSet {
    /// # Panics
    /// If `k` is 0 or above 32.
    pub fn new(k: usize) -> Self {
        assert!((1..=32).contains(&k), "exact k-mer sets support 1 <= k <= 32");
        Self {
            k,
            kmers: HashSet::new(),
        }
    }

    pub fn from_text(text: &[u8], k: usize) -> Self {
        let mut set = Self::new(k);
        set.add_text(text);
        set
    }

    pub fn add_text(&mut self, text: &[u8]) {
        if text.len() < self.k {
            return;
        }
        for w in text.windows(self.k) {
            if let Some(c) = canonical_packed(w) {
                self.kmers.insert(c);
            }
        }
    }

    pub fn contains(&self, kmer: &[u8]) -> bool {
        kmer.len() == self.k && canonical_packed(kmer).is_some_and(|c| self.kmers.contains(&c))
    }

    pub fn len(&self) -> usize {
        self.kmers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kmers.is_empty()
    }
}

impl KmerFilter for ExactKmerSet {
    fn k(&self) -> usize {
        self.k
    }

    fn mark_kmers(&self, read: &[u8], out: &mut Vec<bool>) {
        out.clear();
        if read.len() < self.k {
            return;
        }
        out.extend(read.windows(self.k).map(|w| self.contains(w)));
    }
}

/// Result of a simulated longest-first search.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EarlyStop {
    /// Distinct MEMs found, in read coordinates, sorted by start.
    pub mems: Vec<Mem>,
    /// Pseudo-MEMs that were searched, in visiting order.
    pub searched: Vec<PseudoMem>,
}

impl EarlyStop {
    pub fn searched_bases(&self) -> usize {
        self.searched.iter().map(PseudoMem::len).sum()
    }
}

/// Visits `pms` (sorted by non-increasing length) and collects the MEMs of
/// length `>= min_len` that `mem_finder` reports for each segment. Before
/// each next pseudo-MEM the search stops if at least `t` MEMs found so far
/// are at least as long as it, since nothing inside it can be longer.
///
/// `mem_finder` receives a segment of `read` and returns MEMs in segment
/// coordinates.
pub fn early_stop_select<F>(
    read: &[u8],
    pms: &[PseudoMem],
    mut mem_finder: F,
    t: usize,
    min_len: usize,
) -> EarlyStop
where
    F: FnMut(&[u8]) -> Vec<Mem>,
{
    debug_assert!(pms.windows(2).all(|w| w[0].len() >= w[1].len()));
    let mut found: BTreeSet<Mem> = BTreeSet::new();
    let mut searched = Vec::new();
    for pm in pms {
        let at_least_as_long = found.iter().filter(|m| m.len() >= pm.len()).count();
        if at_least_as_long >= t {
            break;
        }
        searched.push(*pm);
        for m in mem_finder(&read[pm.start..pm.end]) {
            if m.len() >= min_len {
                found.insert(Mem {
                    start: pm.start + m.start,
                    end: pm.start + m.end,
                });
            }
        }
    }
    EarlyStop {
        mems: found.into_iter().collect(),
        searched,
    }
}
