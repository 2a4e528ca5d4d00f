//! Synthetic end-to-end evaluation.
//!
//! Generates a random reference and reads sampled from it with ONT-style
//! errors, builds a filter, scans the reads and checks the results against
//! the brute-force MEM oracle. The reported "searched bases" count how much
//! input a downstream MEM-finder would have to process: whole reads without
//! filtering, all pseudo-MEMs, the `t` longest pseudo-MEMs per read, or the
//! pseudo-MEMs visited by a longest-first search that stops early.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloom::expected_fp_rate;
use crate::oracle::{brute_mems, early_stop_select, ExactKmerSet};
use crate::pipeline::{build_filter, BuildParams, Execution, PipelineError};
use crate::scanner::{scan_read, sort_and_truncate};
use crate::seq_io::SeqRecord;

const BASES: &[u8; 4] = b"ACGT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub seed: u64,
    pub ref_len: usize,
    pub num_reads: usize,
    pub read_len: usize,
    /// Per-base error probability; errors are half substitutions, a quarter
    /// insertions and a quarter deletions.
    pub mutation_rate: f64,
    pub k: usize,
    pub min_len: usize,
    pub eps: f64,
    pub h: Option<u32>,
    pub top: usize,
    /// Random k-mers absent from the reference used to measure the FP rate.
    pub fp_probes: usize,
    pub hll_precision: u8,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            seed: 42,
            ref_len: 20_000,
            num_reads: 50,
            read_len: 2_000,
            mutation_rate: 0.15,
            k: 20,
            min_len: 40,
            eps: 0.1,
            h: Some(1),
            top: 10,
            fp_probes: 100_000,
            hll_precision: 14,
        }
    }
}

pub fn random_bases(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

/// Copies `src` introducing substitutions, insertions and deletions, each
/// base being hit with probability `rate`.
pub fn mutate(rng: &mut impl Rng, src: &[u8], rate: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(src.len() + src.len() / 8);
    for &b in src {
        if !rng.gen_bool(rate) {
            out.push(b);
            continue;
        }
        match rng.gen_range(0..4) {
            0 | 1 => {
                let shift = rng.gen_range(1..4);
                let code = BASES.iter().position(|&x| x == b).unwrap_or(0);
                out.push(BASES[(code + shift) % 4]);
            }
            2 => {
                out.push(b);
                out.push(BASES[rng.gen_range(0..4)]);
            }
            _ => {}
        }
    }
    out
}

/// Reference and reads for one evaluation run.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub reference: Vec<u8>,
    pub reads: Vec<SeqRecord>,
}

impl Corpus {
    pub fn generate(p: &EvalParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let reference = random_bases(&mut rng, p.ref_len);
        let read_len = p.read_len.min(p.ref_len);
        let reads = (0..p.num_reads)
            .map(|i| {
                let start = rng.gen_range(0..=p.ref_len - read_len);
                let seq = mutate(&mut rng, &reference[start..start + read_len], p.mutation_rate);
                SeqRecord::new(format!("read{i}"), seq)
            })
            .collect();
        Self { reference, reads }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub reads: usize,
    pub read_bases: usize,
    pub distinct_kmers: usize,
    pub estimated_distinct: f64,
    pub filter_bits: u64,
    pub hash_count: u32,
    pub pseudo_mems: usize,
    /// Read bases covered by at least one pseudo-MEM, over all read bases.
    pub covered_fraction: f64,
    /// Reads whose every oracle MEM of length >= L lies in a pseudo-MEM.
    pub containment_pass: usize,
    pub oracle_mems: usize,
    pub fp_measured: f64,
    /// `(1 - e^{-hn/m})^h` with the true distinct count.
    pub fp_predicted: f64,
    pub bases_whole_reads: usize,
    pub bases_pseudo_mems: usize,
    pub bases_top_t: usize,
    pub bases_early_stop: usize,
}

impl EvalReport {
    pub fn containment_rate(&self) -> f64 {
        if self.reads == 0 {
            1.0
        } else {
            self.containment_pass as f64 / self.reads as f64
        }
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{self}")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ratio = |x: usize| {
            if self.bases_whole_reads == 0 {
                0.0
            } else {
                x as f64 / self.bases_whole_reads as f64
            }
        };
        writeln!(f, "metric\tvalue")?;
        writeln!(f, "reads\t{}", self.reads)?;
        writeln!(f, "read_bases\t{}", self.read_bases)?;
        writeln!(f, "distinct_kmers\t{}", self.distinct_kmers)?;
        writeln!(f, "estimated_distinct\t{:.0}", self.estimated_distinct)?;
        writeln!(f, "filter_bits\t{}", self.filter_bits)?;
        writeln!(f, "hash_count\t{}", self.hash_count)?;
        writeln!(f, "pseudo_mems\t{}", self.pseudo_mems)?;
        writeln!(f, "covered_fraction\t{:.6}", self.covered_fraction)?;
        writeln!(f, "oracle_mems\t{}", self.oracle_mems)?;
        writeln!(f, "containment_rate\t{:.6}", self.containment_rate())?;
        writeln!(f, "fp_measured\t{:.6}", self.fp_measured)?;
        writeln!(f, "fp_predicted\t{:.6}", self.fp_predicted)?;
        writeln!(f, "bases_whole_reads\t{}", self.bases_whole_reads)?;
        writeln!(f, "bases_pseudo_mems\t{}", self.bases_pseudo_mems)?;
        writeln!(f, "bases_top_t\t{}", self.bases_top_t)?;
        writeln!(f, "bases_early_stop\t{}", self.bases_early_stop)?;
        writeln!(f, "ratio_pseudo_mems\t{:.6}", ratio(self.bases_pseudo_mems))?;
        writeln!(f, "ratio_top_t\t{:.6}", ratio(self.bases_top_t))?;
        writeln!(f, "ratio_early_stop\t{:.6}", ratio(self.bases_early_stop))
    }
}

/// Runs the whole evaluation. Deterministic for a given parameter set.
pub fn run_eval(p: &EvalParams) -> Result<EvalReport, PipelineError> {
    let corpus = Corpus::generate(p);
    let reference = SeqRecord::new("ref", corpus.reference.clone());
    let mut params = BuildParams::new(p.k, p.eps, p.h);
    params.hll_precision = p.hll_precision;
    let (filter, report) = build_filter(std::slice::from_ref(&reference), &params, Execution::Sequential)?;
    let exact = ExactKmerSet::from_text(&corpus.reference, p.k);

    let mut out = EvalReport {
        reads: corpus.reads.len(),
        read_bases: 0,
        distinct_kmers: exact.len(),
        estimated_distinct: report.estimated_distinct,
        filter_bits: filter.bit_len(),
        hash_count: filter.hash_count(),
        pseudo_mems: 0,
        covered_fraction: 0.0,
        containment_pass: 0,
        oracle_mems: 0,
        fp_measured: 0.0,
        fp_predicted: expected_fp_rate(
            exact.len() as f64,
            filter.bit_len() as f64,
            filter.hash_count(),
        ),
        bases_whole_reads: 0,
        bases_pseudo_mems: 0,
        bases_top_t: 0,
        bases_early_stop: 0,
    };

    let mut covered = 0usize;
    for read in &corpus.reads {
        let seq = &read.seq;
        let pms = scan_read(seq, &filter, p.min_len)?;
        let mems = brute_mems(seq, &corpus.reference, p.min_len);

        out.read_bases += seq.len();
        out.bases_whole_reads += seq.len();
        out.pseudo_mems += pms.len();
        out.oracle_mems += mems.len();
        out.bases_pseudo_mems += pms.iter().map(|x| x.len()).sum::<usize>();

        let mut mask = vec![false; seq.len()];
        for pm in &pms {
            mask[pm.start..pm.end].fill(true);
        }
        covered += mask.iter().filter(|&&b| b).count();

        if mems
            .iter()
            .all(|m| pms.iter().any(|pm| pm.contains(m.start, m.end)))
        {
            out.containment_pass += 1;
        }

        let sorted = sort_and_truncate(pms, None);
        out.bases_top_t += sorted.iter().take(p.top).map(|x| x.len()).sum::<usize>();
        let stop = early_stop_select(
            seq,
            &sorted,
            |segment| brute_mems(segment, &corpus.reference, p.min_len),
            p.top,
            p.min_len,
        );
        out.bases_early_stop += stop.searched_bases();
    }
    if out.read_bases > 0 {
        out.covered_fraction = covered as f64 / out.read_bases as f64;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x5eed_f00d);
    let hasher = filter.hasher();
    let mut probes = 0usize;
    let mut hits = 0usize;
    while probes < p.fp_probes {
        let kmer = random_bases(&mut rng, p.k);
        if exact.contains(&kmer) {
            continue;
        }
        let (_, h) = hasher.canonical_kmers(&kmer).next().expect("one ACGT window");
        probes += 1;
        hits += usize::from(filter.query(h));
    }
    if probes > 0 {
        out.fp_measured = hits as f64 / probes as f64;
    }
    Ok(out)
}
