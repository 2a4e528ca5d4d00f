//! HyperLogLog distinct-count estimation used to size the filter before any
//! k-mer is inserted.

use thiserror::Error;

/// 2^20 one-byte registers (1 MiB).
pub const DEFAULT_PRECISION: u8 = 20;
pub const MIN_PRECISION: u8 = 4;
pub const MAX_PRECISION: u8 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CardinalityError {
    #[error("register precision {0} outside [{MIN_PRECISION}, {MAX_PRECISION}]")]
    Precision(u8),
    #[error("cannot merge estimators with precision {0} and {1}")]
    PrecisionMismatch(u8, u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardinalityEstimator {
    p: u8,
    registers: Vec<u8>,
}

impl Default for CardinalityEstimator {
    fn default() -> Self {
        Self::new(DEFAULT_PRECISION).expect("default precision is in range")
    }
}

impl CardinalityEstimator {
    pub fn new(p: u8) -> Result<Self, CardinalityError> {
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&p) {
            return Err(CardinalityError::Precision(p));
        }
        Ok(Self {
            p,
            registers: vec![0; 1 << p],
        })
    }

    pub fn precision(&self) -> u8 {
        self.p
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    /// Records one hash. The top `p` bits pick the register; the register
    /// keeps the largest `1 + leading zeros` seen in the remaining bits.
    #[inline]
    pub fn observe(&mut self, hash: u64) {
        let p = self.p as u32;
        let idx = (hash >> (64 - p)) as usize;
        let rank = ((hash << p).leading_zeros().min(64 - p) + 1) as u8;
        let slot = &mut self.registers[idx];
        if rank > *slot {
            *slot = rank;
        }
    }

    /// Register-wise maximum; the result equals observing both streams.
    pub fn merge(&mut self, other: &Self) -> Result<(), CardinalityError> {
        if self.p != other.p {
            return Err(CardinalityError::PrecisionMismatch(self.p, other.p));
        }
        for (a, &b) in self.registers.iter_mut().zip(&other.registers) {
            *a = (*a).max(b);
        }
        Ok(())
    }

    /// Harmonic-mean estimate with linear counting in the small range.
    pub fn estimate(&self) -> f64 {
        let m = self.registers.len() as f64;
        let alpha = match self.registers.len() {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m),
        };
        let mut sum = 0.0f64;
        let mut zeros = 0usize;
        for &r in &self.registers {
            sum += f64::from(r).exp2().recip();
            if r == 0 {
                zeros += 1;
            }
        }
        let raw = alpha * m * m / sum;
        if raw <= 2.5 * m && zeros > 0 {
            m * (m / zeros as f64).ln()
        } else {
            raw
        }
    }
}
