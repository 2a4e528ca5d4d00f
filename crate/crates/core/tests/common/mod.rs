//! Instance generators and reference computations shared by the
//! integration suites. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use std::collections::HashSet;

use kbreak::eval::{mutate, random_bases};
use kbreak::kmer_hash::DEFAULT_BASE_SEEDS;
use rand::Rng;

/// One random text/read pair with scan parameters.
#[derive(Debug, Clone)]
pub struct Instance {
    pub text: Vec<u8>,
    pub read: Vec<u8>,
    pub k: usize,
    pub min_len: usize,
    pub eps: f64,
    pub h: Option<u32>,
}

/// Text up to 5 kb, read up to 1 kb with 0-20% errors, k in {8, 12, 16},
/// L in (k, 64]. Most reads are sampled from the text; some are chimeras
/// of two text regions and some are unrelated.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let k = [8usize, 12, 16][rng.gen_range(0..3)];
    let min_len = rng.gen_range(k + 1..=64);
    let text_len = rng.gen_range(200..=5000);
    let text = random_bases(rng, text_len);
    let read_len = rng.gen_range(20..=1000usize).min(text_len);
    let rate = rng.gen_range(0.0..=0.2);
    let read = match rng.gen_range(0..10) {
        0 => random_bases(rng, read_len),
        1 => {
            let half = read_len / 2;
            let a = rng.gen_range(0..=text_len - half);
            let b = rng.gen_range(0..=text_len - half);
            let mut r = mutate(rng, &text[a..a + half], rate);
            r.extend(mutate(rng, &text[b..b + half], rate));
            r
        }
        _ => {
            let s = rng.gen_range(0..=text_len - read_len);
            mutate(rng, &text[s..s + read_len], rate)
        }
    };
    let eps = [0.05, 0.1, 0.25][rng.gen_range(0..3)];
    let h = if rng.gen_bool(0.5) { Some(1) } else { None };
    Instance {
        text,
        read,
        k,
        min_len,
        eps,
        h,
    }
}

pub fn revcomp(s: &[u8]) -> Vec<u8> {
    s.iter()
        .rev()
        .map(|&b| match b.to_ascii_uppercase() {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            b'T' => b'A',
            _ => b'N',
        })
        .collect()
}

pub fn is_acgt(s: &[u8]) -> bool {
    s.iter()
        .all(|b| matches!(b.to_ascii_uppercase(), b'A' | b'C' | b'G' | b'T'))
}

/// Set of the upper-cased k-mer strings of `text`.
pub fn text_kmers(text: &[u8], k: usize) -> HashSet<Vec<u8>> {
    text.windows(k)
        .filter(|w| is_acgt(w))
        .map(|w| w.to_ascii_uppercase())
        .collect()
}

/// Maximal substrings of `read` of length >= `min_len` whose k-mers all
/// occur in `text` on either strand, by direct enumeration.
pub fn maximal_segments(read: &[u8], text: &[u8], k: usize, min_len: usize) -> Vec<(usize, usize)> {
    let kmers = text_kmers(text, k);
    if read.len() < k {
        return Vec::new();
    }
    let present: Vec<bool> = read
        .windows(k)
        .map(|w| {
            is_acgt(w) && (kmers.contains(&w.to_ascii_uppercase()) || kmers.contains(&revcomp(w)))
        })
        .collect();
    // longest qualifying extension from every start
    let mut cands = Vec::new();
    for i in 0..present.len() {
        let mut j = i;
        while j < present.len() && present[j] {
            j += 1;
        }
        if j > i {
            let end = j - 1 + k;
            if end - i >= min_len {
                cands.push((i, end));
            }
        }
    }
    let mut out: Vec<(usize, usize)> = cands
        .iter()
        .copied()
        .filter(|&(s, e)| {
            !cands
                .iter()
                .any(|&(s2, e2)| (s2, e2) != (s, e) && s2 <= s && e <= e2)
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// From-scratch forward hash: XOR of each base seed rotated left by its
/// distance from the window end.
pub fn scratch_fwd(window: &[u8]) -> u64 {
    let k = window.len();
    window.iter().enumerate().fold(0u64, |acc, (i, &b)| {
        acc ^ seed_of(b).rotate_left(((k - 1 - i) % 64) as u32)
    })
}

pub fn seed_of(b: u8) -> u64 {
    match b.to_ascii_uppercase() {
        b'A' => DEFAULT_BASE_SEEDS[0],
        b'C' => DEFAULT_BASE_SEEDS[1],
        b'G' => DEFAULT_BASE_SEEDS[2],
        b'T' => DEFAULT_BASE_SEEDS[3],
        other => panic!("not a base: {other}"),
    }
}

/// All 4^k strings over ACGT.
pub fn all_kmers(k: usize) -> Vec<Vec<u8>> {
    (0..1usize << (2 * k))
        .map(|mut x| {
            let mut v = vec![0u8; k];
            for slot in v.iter_mut().rev() {
                *slot = b"ACGT"[x & 3];
                x >>= 2;
            }
            v
        })
        .collect()
}

/// Oracle MEMs sorted by length descending; returns the length of the t-th
/// longest (or 0 when fewer than t).
pub fn tth_longest(lengths: &mut [usize], t: usize) -> usize {
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    if t == 0 || lengths.len() < t {
        0
    } else {
        lengths[t - 1]
    }
}
