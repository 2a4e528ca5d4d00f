//! Two-pass filter construction and batched read scanning.
//!
//! Building first streams every canonical k-mer into a cardinality
//! estimator, sizes the filter from the estimate, then streams the same
//! k-mers again into the filter. Scanning processes reads in chunks; reads
//! of a chunk are scanned in parallel and written back in input order.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use crate::bloom::{BloomError, BloomFilter, SizePlan};
use crate::cardinality::{CardinalityError, CardinalityEstimator, DEFAULT_PRECISION};
use crate::kmer_hash::KmerHasher;
use crate::par;
use crate::scanner::{KmerFilter, Prefetching, PseudoMem, ScanError, ScanOptions, Scanner};
use crate::seq_io::{self, SeqIoError, SeqRecord};

/// Records processed per parallel batch.
pub const CHUNK_RECORDS: usize = 4096;

pub const MIN_BUILD_K: usize = 4;
pub const MAX_BUILD_K: usize = 31;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("k = {0} outside [{MIN_BUILD_K}, {MAX_BUILD_K}]")]
    K(usize),
    #[error("filter of {bytes} bytes exceeds the memory cap of {cap} bytes")]
    MemoryCap { bytes: u64, cap: u64 },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: SeqIoError },
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error(transparent)]
    Cardinality(#[from] CardinalityError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Whether batch work may be spread over the thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    pub k: usize,
    pub eps: f64,
    /// Hash count; `None` picks the count minimizing filter size.
    pub h: Option<u32>,
    pub hll_precision: u8,
    /// Largest filter bit array allowed, in bytes.
    pub max_bytes: u64,
}

impl BuildParams {
    pub fn new(k: usize, eps: f64, h: Option<u32>) -> Self {
        Self {
            k,
            eps,
            h,
            hll_precision: DEFAULT_PRECISION,
            max_bytes: 16 << 30,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if !(MIN_BUILD_K..=MAX_BUILD_K).contains(&self.k) {
            return Err(PipelineError::K(self.k));
        }
        // surfaces eps / h domain errors before any input is read
        SizePlan::new(1, self.eps, self.h)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildReport {
    pub estimated_distinct: f64,
    pub plan: SizePlan,
    /// Canonical k-mer occurrences inserted (with repeats).
    pub kmers_inserted: u64,
}

/// Bijective finalizer applied before cardinality estimation. Canonical
/// hashes are the minimum of two strand hashes, which skews their top bits;
/// the estimator needs uniform top bits to pick registers.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

fn estimate_chunk(
    records: &[SeqRecord],
    hasher: &KmerHasher,
    est: CardinalityEstimator,
    exec: Execution,
) -> CardinalityEstimator {
    let observe = |mut e: CardinalityEstimator, r: &SeqRecord| {
        for (_, h) in hasher.canonical_kmers(&r.seq) {
            e.observe(mix64(h));
        }
        e
    };
    match exec {
        Execution::Sequential => records.iter().fold(est, observe),
        Execution::Parallel => {
            let p = est.precision();
            let local = par::fold_reduce(
                records,
                || CardinalityEstimator::new(p).expect("precision already validated"),
                observe,
                |mut a, b| {
                    a.merge(&b).expect("same precision");
                    a
                },
            );
            let mut est = est;
            est.merge(&local).expect("same precision");
            est
        }
    }
}

fn insert_chunk(records: &[SeqRecord], filter: &BloomFilter, exec: Execution) -> u64 {
    let hasher = filter.hasher();
    let insert = |r: &SeqRecord| {
        let mut n = 0u64;
        for (_, h) in hasher.canonical_kmers(&r.seq) {
            filter.insert(h);
            n += 1;
        }
        n
    };
    match exec {
        Execution::Sequential => records.iter().map(insert).sum(),
        Execution::Parallel => par::map_init(records, || (), |_, r| insert(r)).iter().sum(),
    }
}

fn plan_filter(
    params: &BuildParams,
    est: &CardinalityEstimator,
) -> Result<(f64, SizePlan), PipelineError> {
    let n_hat = est.estimate();
    let plan = SizePlan::new(n_hat.round().max(1.0) as u64, params.eps, params.h)?;
    let bytes = plan.bits() / 8;
    if bytes > params.max_bytes {
        return Err(PipelineError::MemoryCap {
            bytes,
            cap: params.max_bytes,
        });
    }
    info!(
        "estimated {n_hat:.0} distinct {}-mers; filter m = 2^{} bits ({} before rounding), h = {}, predicted FP rate {:.4}",
        params.k, plan.log2m, plan.exact_bits, plan.h, plan.predicted_fp
    );
    Ok((n_hat, plan))
}

/// Builds a filter over in-memory records.
pub fn build_filter(
    records: &[SeqRecord],
    params: &BuildParams,
    exec: Execution,
) -> Result<(BloomFilter, BuildReport), PipelineError> {
    params.validate()?;
    let hasher = KmerHasher::new(params.k).expect("k validated");
    let mut est = CardinalityEstimator::new(params.hll_precision)?;
    for chunk in records.chunks(CHUNK_RECORDS) {
        est = estimate_chunk(chunk, &hasher, est, exec);
    }
    let (estimated_distinct, plan) = plan_filter(params, &est)?;
    let filter = BloomFilter::from_plan(params.k, &plan)?;
    let kmers_inserted = records
        .chunks(CHUNK_RECORDS)
        .map(|c| insert_chunk(c, &filter, exec))
        .sum();
    Ok((
        filter,
        BuildReport {
            estimated_distinct,
            plan,
            kmers_inserted,
        },
    ))
}

/// Calls `f` on successive chunks of records from every file in `paths`.
pub fn for_each_chunk<F>(paths: &[PathBuf], mut f: F) -> Result<(), PipelineError>
where
    F: FnMut(&[SeqRecord]) -> Result<(), PipelineError>,
{
    let mut chunk = Vec::with_capacity(CHUNK_RECORDS);
    for path in paths {
        let reader = seq_io::open_path(path).map_err(|e| PipelineError::Input {
            path: path.clone(),
            source: e.into(),
        })?;
        for rec in reader {
            chunk.push(rec.map_err(|e| PipelineError::Input {
                path: path.clone(),
                source: e,
            })?);
            if chunk.len() == CHUNK_RECORDS {
                f(&chunk)?;
                chunk.clear();
            }
        }
    }
    if !chunk.is_empty() {
        f(&chunk)?;
    }
    Ok(())
}

/// Builds a filter from sequence files, reading each file twice.
pub fn build_filter_from_paths(
    paths: &[PathBuf],
    params: &BuildParams,
    exec: Execution,
) -> Result<(BloomFilter, BuildReport), PipelineError> {
    params.validate()?;
    // stdin cannot be read twice; buffer everything and build in memory
    if paths.iter().any(|p| p.as_os_str() == "-") {
        let mut records = Vec::new();
        for_each_chunk(paths, |chunk| {
            records.extend_from_slice(chunk);
            Ok(())
        })?;
        return build_filter(&records, params, exec);
    }
    let hasher = KmerHasher::new(params.k).expect("k validated");
    let mut est = Some(CardinalityEstimator::new(params.hll_precision)?);
    for_each_chunk(paths, |chunk| {
        est = Some(estimate_chunk(chunk, &hasher, est.take().expect("set"), exec));
        Ok(())
    })?;
    let (estimated_distinct, plan) = plan_filter(params, est.as_ref().expect("set"))?;
    let filter = BloomFilter::from_plan(params.k, &plan)?;
    let mut kmers_inserted = 0;
    for_each_chunk(paths, |chunk| {
        kmers_inserted += insert_chunk(chunk, &filter, exec);
        Ok(())
    })?;
    Ok((
        filter,
        BuildReport {
            estimated_distinct,
            plan,
            kmers_inserted,
        },
    ))
}

/// Scans a batch of reads, returning each read's finished pseudo-MEM list
/// in input order.
pub fn scan_records<F: KmerFilter + ?Sized>(
    records: &[SeqRecord],
    filter: &F,
    opts: &ScanOptions,
    exec: Execution,
) -> Result<Vec<Vec<PseudoMem>>, ScanError> {
    // validates L > k once for the whole batch
    Scanner::new(filter, opts.min_len)?;
    let scanner = || Scanner::new(filter, opts.min_len).expect("validated");
    let run = |s: &mut Scanner<'_, F>, r: &SeqRecord| opts.finish(s.scan(&r.seq));
    Ok(match exec {
        Execution::Parallel => par::map_init(records, scanner, run),
        Execution::Sequential => {
            let mut s = scanner();
            records.iter().map(|r| run(&mut s, r)).collect()
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub reads: u64,
    pub read_bases: u64,
    pub pseudo_mems: u64,
    pub pseudo_mem_bases: u64,
}

impl ScanStats {
    fn add(&mut self, rec: &SeqRecord, pms: &[PseudoMem]) {
        self.reads += 1;
        self.read_bases += rec.seq.len() as u64;
        self.pseudo_mems += pms.len() as u64;
        self.pseudo_mem_bases += pms.iter().map(|p| p.len() as u64).sum::<u64>();
    }
}

/// Scans every read of `paths` and writes pseudo-MEM FASTA to `out`.
/// Each read's records are written together, reads in input order.
pub fn scan_paths<W: Write>(
    paths: &[PathBuf],
    filter: &BloomFilter,
    opts: &ScanOptions,
    prefetch: bool,
    exec: Execution,
    mut out: W,
) -> Result<ScanStats, PipelineError> {
    Scanner::new(filter, opts.min_len)?;
    let mut stats = ScanStats::default();
    for_each_chunk(paths, |chunk| {
        let results = if prefetch {
            scan_records(chunk, &Prefetching(filter), opts, exec)?
        } else {
            scan_records(chunk, filter, opts, exec)?
        };
        for (rec, pms) in chunk.iter().zip(&results) {
            seq_io::write_pseudomems(&mut out, &rec.id, pms, &rec.seq)?;
            stats.add(rec, pms);
        }
        Ok(())
    })?;
    out.flush()?;
    info!(
        "{} reads ({} bases) -> {} pseudo-MEMs ({} bases)",
        stats.reads, stats.read_bases, stats.pseudo_mems, stats.pseudo_mem_bases
    );
    Ok(stats)
}

/// Reads a filter file.
pub fn load_filter(path: &Path) -> Result<BloomFilter, BloomError> {
    let file = std::fs::File::open(path).map_err(BloomError::Io)?;
    BloomFilter::read_from(io::BufReader::with_capacity(1 << 20, file))
}

/// Writes a filter file.
pub fn save_filter(filter: &BloomFilter, path: &Path) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    filter.write_to(io::BufWriter::with_capacity(1 << 20, file))
}
