//! k-mer filtration of query reads into pseudo-MEMs.
//!
//! A Bloom filter over the canonical k-mers of a reference tells, for each
//! k-mer of a read, whether it can occur in the reference. Maximal read
//! segments whose k-mers all pass, and which are at least `L > k` bases long,
//! are pseudo-MEMs: every maximal exact match of length `>= L` lies inside
//! one of them, so a MEM-finder can search just those segments.

pub mod bloom;
pub mod cardinality;
pub mod cli;
pub mod coord_fix;
pub mod eval;
pub mod kmer_hash;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod prefetch;
pub mod scanner;
pub mod seq_io;

pub use bloom::{BloomFilter, SizePlan};
pub use cardinality::CardinalityEstimator;
pub use kmer_hash::KmerHasher;
pub use oracle::{ExactKmerSet, Mem};
pub use scanner::{scan_read, sort_and_truncate, KmerFilter, PseudoMem, ScanOptions};
pub use seq_io::SeqRecord;
