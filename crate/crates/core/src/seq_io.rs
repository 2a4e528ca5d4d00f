//! FASTA/FASTQ input and pseudo-MEM FASTA output.
//!
//! Input format is picked from the first byte (`>` or `@`); gzip input is
//! recognised by its magic bytes and decompressed on the fly. Pseudo-MEMs
//! are written as FASTA records named `READID:START-END` with 0-based
//! inclusive `START` and exclusive `END`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::scanner::PseudoMem;

#[derive(Debug, Error)]
pub enum SeqIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqRecord {
    /// First whitespace-delimited word of the header.
    pub id: String,
    pub seq: Vec<u8>,
}

impl SeqRecord {
    pub fn new(id: impl Into<String>, seq: impl Into<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            seq: seq.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Fasta,
    Fastq,
}

/// Streaming record reader over FASTA or FASTQ text.
pub struct SeqReader<R> {
    inner: R,
    format: Option<Format>,
    line_no: usize,
    line: Vec<u8>,
    /// Header of the next FASTA record, already consumed from the stream.
    pending_header: Option<(Vec<u8>, usize)>,
    done: bool,
}

/// Opens a sequence file, or stdin for `-`, decompressing gzip if present.
pub fn open_path(path: &Path) -> io::Result<SeqReader<Box<dyn BufRead + Send>>> {
    let raw: Box<dyn Read + Send> = if path.as_os_str() == "-" {
        Box::new(io::stdin())
    } else {
        Box::new(File::open(path)?)
    };
    open_reader(raw)
}

/// Wraps any byte stream, sniffing for gzip.
pub fn open_reader<R: Read + Send + 'static>(
    raw: R,
) -> io::Result<SeqReader<Box<dyn BufRead + Send>>> {
    let mut buffered = BufReader::with_capacity(1 << 16, raw);
    let is_gzip = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let inner: Box<dyn BufRead + Send> = if is_gzip {
        Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(buffered),
        ))
    } else {
        Box::new(buffered)
    };
    Ok(SeqReader::new(inner))
}

impl<R: BufRead> SeqReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            format: None,
            line_no: 0,
            line: Vec::new(),
            pending_header: None,
            done: false,
        }
    }

    /// Reads the next line without its terminator. `Ok(false)` on EOF.
    fn next_line(&mut self) -> io::Result<bool> {
        self.line.clear();
        if self.inner.read_until(b'\n', &mut self.line)? == 0 {
            return Ok(false);
        }
        self.line_no += 1;
        while matches!(self.line.last(), Some(b'\n' | b'\r')) {
            self.line.pop();
        }
        Ok(true)
    }

    fn parse_err(&self, line: usize, msg: impl Into<String>) -> SeqIoError {
        SeqIoError::Parse {
            line,
            msg: msg.into(),
        }
    }

    fn header_id(&self, header: &[u8], line: usize) -> Result<String, SeqIoError> {
        let token = header
            .split(|b| b.is_ascii_whitespace())
            .next()
            .unwrap_or_default();
        if token.is_empty() {
            return Err(self.parse_err(line, "record has an empty identifier"));
        }
        String::from_utf8(token.to_vec())
            .map_err(|_| self.parse_err(line, "identifier is not valid UTF-8"))
    }

    fn detect(&mut self) -> Result<Option<Format>, SeqIoError> {
        loop {
            if !self.next_line()? {
                return Ok(None);
            }
            match self.line.first() {
                None => continue,
                Some(b'>') => {
                    self.pending_header = Some((self.line[1..].to_vec(), self.line_no));
                    return Ok(Some(Format::Fasta));
                }
                Some(b'@') => {
                    self.pending_header = Some((self.line[1..].to_vec(), self.line_no));
                    return Ok(Some(Format::Fastq));
                }
                Some(_) => {
                    return Err(self.parse_err(
                        self.line_no,
                        "expected '>' (FASTA) or '@' (FASTQ) at start of input",
                    ))
                }
            }
        }
    }

    fn next_fasta(&mut self) -> Result<Option<SeqRecord>, SeqIoError> {
        let Some((header, line)) = self.pending_header.take() else {
            return Ok(None);
        };
        let id = self.header_id(&header, line)?;
        let mut seq = Vec::new();
        while self.next_line()? {
            if self.line.first() == Some(&b'>') {
                self.pending_header = Some((self.line[1..].to_vec(), self.line_no));
                break;
            }
            seq.extend(self.line.iter().filter(|b| !b.is_ascii_whitespace()));
        }
        Ok(Some(SeqRecord { id, seq }))
    }

    fn next_fastq(&mut self) -> Result<Option<SeqRecord>, SeqIoError> {
        let (header, line) = match self.pending_header.take() {
            Some(h) => h,
            None => loop {
                if !self.next_line()? {
                    return Ok(None);
                }
                match self.line.first() {
                    None => continue,
                    Some(b'@') => break (self.line[1..].to_vec(), self.line_no),
                    Some(_) => {
                        return Err(self.parse_err(self.line_no, "expected '@' FASTQ header"))
                    }
                }
            },
        };
        let id = self.header_id(&header, line)?;
        if !self.next_line()? {
            return Err(self.parse_err(line, "FASTQ record is missing its sequence line"));
        }
        let seq = self.line.clone();
        if !self.next_line()? || self.line.first() != Some(&b'+') {
            return Err(self.parse_err(self.line_no, "expected '+' separator line"));
        }
        if !self.next_line()? {
            return Err(self.parse_err(line, "FASTQ record is missing its quality line"));
        }
        if self.line.len() != seq.len() {
            return Err(self.parse_err(
                self.line_no,
                format!(
                    "quality length {} differs from sequence length {}",
                    self.line.len(),
                    seq.len()
                ),
            ));
        }
        Ok(Some(SeqRecord { id, seq }))
    }

    fn read_next(&mut self) -> Result<Option<SeqRecord>, SeqIoError> {
        let format = match self.format {
            Some(f) => f,
            None => match self.detect()? {
                Some(f) => {
                    self.format = Some(f);
                    f
                }
                None => return Ok(None),
            },
        };
        match format {
            Format::Fasta => self.next_fasta(),
            Format::Fastq => self.next_fastq(),
        }
    }
}

impl<R: BufRead> Iterator for SeqReader<R> {
    type Item = Result<SeqRecord, SeqIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_next() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// `READID:START-END`.
pub fn format_header(read_id: &str, start: usize, end: usize) -> String {
    format!("{read_id}:{start}-{end}")
}

/// Splits `READID:START-END` from the right, so read ids may themselves
/// contain `:` or `-`.
pub fn parse_header(header: &str) -> Option<(&str, usize, usize)> {
    let (id, range) = header.rsplit_once(':')?;
    let (start, end) = range.rsplit_once('-')?;
    if id.is_empty() || !is_decimal(start) || !is_decimal(end) {
        return None;
    }
    let start: usize = start.parse().ok()?;
    let end: usize = end.parse().ok()?;
    (start <= end).then_some((id, start, end))
}

fn is_decimal(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Writes one FASTA record per pseudo-MEM, named `READID:START-END`, with the
/// covered substring as a single-line body.
pub fn write_pseudomems<W: Write>(
    out: &mut W,
    read_id: &str,
    pms: &[PseudoMem],
    read_seq: &[u8],
) -> io::Result<()> {
    for pm in pms {
        writeln!(out, ">{}", format_header(read_id, pm.start, pm.end))?;
        out.write_all(&read_seq[pm.start..pm.end])?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
