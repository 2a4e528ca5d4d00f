mod common;

use std::collections::{HashMap, HashSet};

use common::{all_kmers, revcomp, scratch_fwd};
use kbreak::kmer_hash::KmerHasher;
use proptest::prelude::*;

fn acgt_seq(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(b"ACGT".to_vec()), 0..max_len)
}

#[test]
fn strand_symmetry_for_all_short_windows() {
    for k in 1..=6 {
        let mut h = KmerHasher::new(k).unwrap();
        for w in all_kmers(k) {
            h.init_window(&w).unwrap();
            let rc = h.rc_hash();
            let canon = h.canonical();
            let mut h2 = KmerHasher::new(k).unwrap();
            h2.init_window(&revcomp(&w)).unwrap();
            assert_eq!(rc, h2.fwd_hash(), "k={k} {:?}", std::str::from_utf8(&w));
            assert_eq!(canon, h2.canonical());
        }
    }
}

#[test]
fn canonical_six_mers_collide_only_within_revcomp_pairs() {
    let mut h = KmerHasher::new(6).unwrap();
    let mut by_hash: HashMap<u64, HashSet<Vec<u8>>> = HashMap::new();
    for w in all_kmers(6) {
        h.init_window(&w).unwrap();
        let class = w.clone().min(revcomp(&w));
        by_hash.entry(h.canonical()).or_default().insert(class);
    }
    assert!(by_hash.values().all(|classes| classes.len() == 1));
    // 4^6 strings form (4^6 + 4^3) / 2 revcomp classes (4^3 palindromes)
    assert_eq!(by_hash.len(), (4096 + 64) / 2);
}

#[test]
fn fwd_hash_matches_formula_exhaustively() {
    for k in 1..=6 {
        let mut h = KmerHasher::new(k).unwrap();
        for w in all_kmers(k) {
            h.init_window(&w).unwrap();
            assert_eq!(h.fwd_hash(), scratch_fwd(&w));
        }
    }
}

proptest! {
    #[test]
    fn rolling_matches_scratch(k in 1usize..=40, seq in acgt_seq(300)) {
        prop_assume!(seq.len() >= k);
        let mut h = KmerHasher::new(k).unwrap();
        h.init_window(&seq[..k]).unwrap();
        for i in 0..=seq.len() - k {
            if i > 0 {
                h.roll(seq[i - 1], seq[i + k - 1]).unwrap();
            }
            let w = &seq[i..i + k];
            prop_assert_eq!(h.fwd_hash(), scratch_fwd(w));
            prop_assert_eq!(h.rc_hash(), scratch_fwd(&revcomp(w)));
        }
    }

    #[test]
    fn iterator_matches_scratch_with_gaps(
        k in 1usize..=12,
        seq in prop::collection::vec(prop::sample::select(b"ACGTNacgtR".to_vec()), 0..200),
    ) {
        let h = KmerHasher::new(k).unwrap();
        let got: Vec<(usize, u64)> = h.canonical_kmers(&seq).collect();
        let expect: Vec<(usize, u64)> = if seq.len() < k {
            vec![]
        } else {
            seq.windows(k)
                .enumerate()
                .filter(|(_, w)| common::is_acgt(w))
                .map(|(i, w)| (i, scratch_fwd(w).min(scratch_fwd(&revcomp(w)))))
                .collect()
        };
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn canonical_is_strand_symmetric(k in 1usize..=31, seq in acgt_seq(64)) {
        prop_assume!(seq.len() >= k);
        let w = &seq[..k];
        let mut a = KmerHasher::new(k).unwrap();
        let mut b = KmerHasher::new(k).unwrap();
        a.init_window(w).unwrap();
        b.init_window(&revcomp(w)).unwrap();
        prop_assert_eq!(a.canonical(), b.canonical());
        prop_assert_eq!(a.canonical(), a.fwd_hash().min(a.rc_hash()));
    }
}
