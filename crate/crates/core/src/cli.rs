//! Command-line interface: `build`, `scan`, `fix` and `eval`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::bloom::BloomError;
use crate::coord_fix::{fix_stream, FixConfig, FixError};
use crate::eval::{run_eval, EvalParams};
use crate::pipeline::{
    build_filter_from_paths, load_filter, save_filter, scan_paths, BuildParams, Execution,
    PipelineError,
};
use crate::scanner::{ScanError, ScanOptions};
use crate::seq_io::SeqIoError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "kbreak", version, about = "Break reads into pseudo-MEMs with a k-mer Bloom filter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a filter over the canonical k-mers of reference sequences.
    Build(BuildArgs),
    /// Write the pseudo-MEMs of query reads as FASTA.
    Scan(ScanArgs),
    /// Map MEM reports on pseudo-MEMs back to whole-read coordinates.
    Fix(FixArgs),
    /// Run the synthetic evaluation and print a metrics table.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// k-mer length
    #[arg(short = 'k', default_value_t = 20)]
    pub k: usize,
    /// Target false-positive rate
    #[arg(short = 'e', default_value_t = 0.1)]
    pub eps: f64,
    /// Number of hash functions (default: size-optimal count)
    #[arg(short = 'f')]
    pub hashes: Option<u32>,
    /// Worker threads (0 = all cores)
    #[arg(short = 't', default_value_t = 0)]
    pub threads: usize,
    /// Output filter file
    #[arg(short = 'o', required = true)]
    pub output: PathBuf,
    /// Cardinality estimator register bits
    #[arg(long, default_value_t = crate::cardinality::DEFAULT_PRECISION)]
    pub hll_bits: u8,
    /// Refuse filters larger than this many MiB
    #[arg(long, default_value_t = 16384)]
    pub max_mem: u64,
    /// Reference FASTA/FASTQ files (gzip allowed, `-` for stdin)
    #[arg(required = true)]
    pub texts: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Output FASTA (`-` for stdout)
    #[arg(short = 'o', default_value = "-")]
    pub output: PathBuf,
    /// Filter file
    #[arg(short = 'i', required = true)]
    pub filter: PathBuf,
    /// Minimum pseudo-MEM length L (must exceed the filter's k)
    #[arg(short = 'l', default_value_t = 40)]
    pub min_len: usize,
    /// Worker threads (0 = all cores)
    #[arg(short = 't', default_value_t = 0)]
    pub threads: usize,
    /// Order each read's pseudo-MEMs by non-increasing length
    #[arg(short = 's')]
    pub sort: bool,
    /// Keep only the t longest pseudo-MEMs per read
    #[arg(long = "top", value_name = "T")]
    pub top: Option<usize>,
    /// Query the filter one k-mer at a time instead of in prefetched batches
    #[arg(long)]
    pub no_prefetch: bool,
    /// Query FASTA/FASTQ files (gzip allowed, `-` for stdin)
    #[arg(required = true)]
    pub patterns: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixArgs {
    /// Input MEM report (`-` for stdin)
    #[arg(short = 'i', default_value = "-")]
    pub input: PathBuf,
    /// Output report (`-` for stdout)
    #[arg(short = 'o', default_value = "-")]
    pub output: PathBuf,
    /// 0-based column holding the sequence name
    #[arg(long, default_value_t = 0)]
    pub name_col: usize,
    /// 0-based column holding the MEM offset
    #[arg(long, default_value_t = 1)]
    pub offset_col: usize,
    /// 0-based column holding the MEM length
    #[arg(long, default_value_t = 2)]
    pub len_col: usize,
    /// Keep duplicate records from overlapping pseudo-MEMs
    #[arg(long)]
    pub no_dedup: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Reference length in bases
    #[arg(long, default_value_t = 20_000)]
    pub ref_len: usize,
    /// Number of reads
    #[arg(long, default_value_t = 50)]
    pub reads: usize,
    /// Read length before errors
    #[arg(long, default_value_t = 2_000)]
    pub read_len: usize,
    /// Per-base error rate
    #[arg(long, default_value_t = 0.15)]
    pub mutation_rate: f64,
    #[arg(short = 'k', default_value_t = 20)]
    pub k: usize,
    #[arg(short = 'l', default_value_t = 40)]
    pub min_len: usize,
    #[arg(short = 'e', default_value_t = 0.1)]
    pub eps: f64,
    #[arg(short = 'f', default_value_t = 1)]
    pub hashes: u32,
    /// Pseudo-MEMs per read kept in top-t mode
    #[arg(long = "top", default_value_t = 10)]
    pub top: usize,
    /// Random absent k-mers used to measure the false-positive rate
    #[arg(long, default_value_t = 100_000)]
    pub fp_probes: usize,
    /// Output table (`-` for stdout)
    #[arg(short = 'o', default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn bloom_error(path: &Path, e: BloomError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        BloomError::Io(_) => CliError::Io(msg),
        e if e.is_format() => CliError::Format(msg),
        _ => CliError::Usage(msg),
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Input {
                source: SeqIoError::Io(_),
                ..
            }
            | PipelineError::Io(_) => CliError::Io(msg),
            PipelineError::Input {
                source: SeqIoError::Parse { .. },
                ..
            } => CliError::Format(msg),
            PipelineError::Bloom(BloomError::Io(_)) => CliError::Io(msg),
            PipelineError::Bloom(b) if b.is_format() => CliError::Format(msg),
            PipelineError::Scan(ScanError::MinLenNotAboveK { min_len, k }) => CliError::Usage(
                format!("-l {min_len} is invalid: pseudo-MEMs require L > k, and the filter has k = {k}"),
            ),
            _ => CliError::Usage(msg),
        }
    }
}

fn create_output(path: &Path) -> Result<Box<dyn Write + Send>, CliError> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::with_capacity(1 << 16, io::stdout())))
    } else {
        let f = File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufWriter::with_capacity(1 << 20, f)))
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin().lock())))
    } else {
        let f =
            File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

pub fn build(args: &BuildArgs) -> Result<(), CliError> {
    let mut params = BuildParams::new(args.k, args.eps, args.hashes);
    params.hll_precision = args.hll_bits;
    params.max_bytes = args.max_mem.saturating_mul(1 << 20);
    let (filter, report) = crate::par::with_threads(args.threads, || {
        build_filter_from_paths(&args.texts, &params, Execution::Parallel)
    })??;
    save_filter(&filter, &args.output)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.output.display())))?;
    info!(
        "inserted {} k-mers; wrote {} ({} bytes)",
        report.kmers_inserted,
        args.output.display(),
        filter.file_len()
    );
    Ok(())
}

pub fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let filter = load_filter(&args.filter).map_err(|e| bloom_error(&args.filter, e))?;
    let opts = ScanOptions {
        min_len: args.min_len,
        sort: args.sort,
        top: args.top,
    };
    let out = create_output(&args.output)?;
    crate::par::with_threads(args.threads, || {
        scan_paths(
            &args.patterns,
            &filter,
            &opts,
            !args.no_prefetch,
            Execution::Parallel,
            out,
        )
    })??;
    Ok(())
}

pub fn fix(args: &FixArgs) -> Result<(), CliError> {
    let cfg = FixConfig {
        name_col: args.name_col,
        offset_col: args.offset_col,
        len_col: args.len_col,
        dedup: !args.no_dedup,
    };
    let input = open_input(&args.input)?;
    let out = create_output(&args.output)?;
    let stats = fix_stream(input, out, &cfg).map_err(|e| match e {
        FixError::Io(e) => CliError::Io(e.to_string()),
        e => CliError::Format(e.to_string()),
    })?;
    info!(
        "{} records: {} fixed, {} copied unchanged, {} duplicates removed",
        stats.records, stats.fixed, stats.passed_through, stats.duplicates
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    if args.k > 32 || args.k == 0 {
        return Err(CliError::Usage(format!("k = {} outside [1, 32]", args.k)));
    }
    if !(0.0..=1.0).contains(&args.mutation_rate) {
        return Err(CliError::Usage("mutation rate must lie in [0, 1]".into()));
    }
    if args.ref_len < args.k {
        return Err(CliError::Usage("reference must be at least k bases".into()));
    }
    let params = EvalParams {
        seed: args.seed,
        ref_len: args.ref_len,
        num_reads: args.reads,
        read_len: args.read_len,
        mutation_rate: args.mutation_rate,
        k: args.k,
        min_len: args.min_len,
        eps: args.eps,
        h: Some(args.hashes),
        top: args.top,
        fp_probes: args.fp_probes,
        ..EvalParams::default()
    };
    let report = run_eval(&params)?;
    let mut out = create_output(&args.output)?;
    report.write_tsv(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Build(a) => build(a),
        Command::Scan(a) => scan(a),
        Command::Fix(a) => fix(a),
        Command::Eval(a) => eval(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
