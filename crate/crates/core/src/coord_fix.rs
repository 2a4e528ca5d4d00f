//! Maps MEM reports made against pseudo-MEM records back onto whole reads.
//!
//! Input is tab-separated text. One column names the query sequence, which
//! for pseudo-MEM input reads `READID:START-END`; another holds the MEM
//! offset within that sequence and a third its length. Fixing replaces the
//! name with `READID` and adds `START` to the offset. Every other byte of the
//! line is kept. A MEM inside the overlap of two neighbouring pseudo-MEMs is
//! reported once per pseudo-MEM; identical fixed lines are collapsed.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use log::warn;
use thiserror::Error;

use crate::seq_io::parse_header;

#[derive(Debug, Error)]
pub enum FixError {
    #[error("line {line}: MEM at offset {offset} with length {len} does not fit in {header} (length {span})")]
    OutOfRange {
        line: usize,
        header: String,
        offset: u64,
        len: u64,
        span: u64,
    },
    #[error("line {line}: fixed offset overflows")]
    Overflow { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Column layout of the MEM report (0-based column indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixConfig {
    pub name_col: usize,
    pub offset_col: usize,
    pub len_col: usize,
    pub dedup: bool,
}

impl Default for FixConfig {
    fn default() -> Self {
        Self {
            name_col: 0,
            offset_col: 1,
            len_col: 2,
            dedup: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixStats {
    /// Data lines read (blank and `#` lines excluded).
    pub records: usize,
    pub fixed: usize,
    /// Lines whose name or numeric columns did not parse, written unchanged.
    pub passed_through: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixOutcome {
    Fixed(String),
    /// The line is not a parseable pseudo-MEM record.
    PassThrough,
}

/// Rewrites one report line.
pub fn fix_record(line: &str, line_no: usize, cfg: &FixConfig) -> Result<FixOutcome, FixError> {
    let mut fields: Vec<&str> = line.split('\t').collect();
    let needed = cfg.name_col.max(cfg.offset_col).max(cfg.len_col);
    if fields.len() <= needed {
        return Ok(FixOutcome::PassThrough);
    }
    let Some((read_id, start, end)) = parse_header(fields[cfg.name_col]) else {
        return Ok(FixOutcome::PassThrough);
    };
    let (Ok(offset), Ok(len)) = (
        fields[cfg.offset_col].parse::<u64>(),
        fields[cfg.len_col].parse::<u64>(),
    ) else {
        return Ok(FixOutcome::PassThrough);
    };
    let span = (end - start) as u64;
    if offset.checked_add(len).is_none_or(|e| e > span) {
        return Err(FixError::OutOfRange {
            line: line_no,
            header: fields[cfg.name_col].to_owned(),
            offset,
            len,
            span,
        });
    }
    let shifted = offset
        .checked_add(start as u64)
        .ok_or(FixError::Overflow { line: line_no })?
        .to_string();
    fields[cfg.name_col] = read_id;
    fields[cfg.offset_col] = &shifted;
    Ok(FixOutcome::Fixed(fields.join("\t")))
}

/// Streams a report from `input` to `out`, fixing every record.
pub fn fix_stream<R: BufRead, W: Write>(
    input: R,
    mut out: W,
    cfg: &FixConfig,
) -> Result<FixStats, FixError> {
    let mut stats = FixStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            writeln!(out, "{line}")?;
            continue;
        }
        stats.records += 1;
        let fixed = match fix_record(&line, line_no, cfg)? {
            FixOutcome::Fixed(s) => {
                stats.fixed += 1;
                s
            }
            FixOutcome::PassThrough => {
                warn!("line {line_no}: not a READID:START-END record, copied unchanged");
                stats.passed_through += 1;
                line
            }
        };
        if cfg.dedup {
            if seen.contains(&fixed) {
                stats.duplicates += 1;
                continue;
            }
            writeln!(out, "{fixed}")?;
            seen.insert(fixed);
        } else {
            writeln!(out, "{fixed}")?;
        }
    }
    out.flush()?;
    Ok(stats)
}
