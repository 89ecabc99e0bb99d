//! Finite-level uniform quantizer `Q_{E,R}` and the index code for
//! transmitted sums.
//!
//! A quantized value is always `2pE/R` for an integer `p` with `|p| ≤ R₀`,
//! where `R = 2R₀ + 1`. Bins are left-open and right-closed:
//! `(2p−1)E/R < z ≤ (2p+1)E/R` maps to `p ≥ 1`, the dead zone
//! `[−E/R, E/R]` maps to 0, and negative inputs follow `Q(−z) = −Q(z)`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizerError {
    #[error("quantization level count R = {0} must be odd and positive")]
    EvenLevels(u32),
    #[error("quantization range E = {0} must be positive and finite")]
    BadRange(f64),
    #[error("input {z} saturates the quantizer with range E = {range}")]
    Saturated { z: f64, range: f64 },
    #[error("value {value} is not a multiple of the step 2E/R = {step}")]
    OffGrid { value: f64, step: f64 },
    #[error("{count} values exceed the degree bound d̃ = {dtilde}")]
    TooManyValues { count: usize, dtilde: u32 },
    #[error("index {p} outside the alphabet |p| ≤ {limit}")]
    IndexOutOfAlphabet { p: i64, limit: i64 },
}

/// Quantizer with range `E` and `R` levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizerSpec {
    range: f64,
    levels: u32,
}

impl QuantizerSpec {
    pub fn new(range: f64, levels: u32) -> Result<Self, QuantizerError> {
        if levels.is_multiple_of(2) {
            return Err(QuantizerError::EvenLevels(levels));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(QuantizerError::BadRange(range));
        }
        Ok(QuantizerSpec { range, levels })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// `R₀ = (R − 1)/2`.
    pub fn half_levels(&self) -> i64 {
        (self.levels as i64 - 1) / 2
    }

    /// `2E/R`.
    pub fn step(&self) -> f64 {
        2.0 * self.range / self.levels as f64
    }

    /// Bin edge `mE/R`, evaluated the same way everywhere so that the
    /// right-closed convention holds bit-exactly at representable edges.
    pub fn edge(&self, m: i64) -> f64 {
        m as f64 * self.range / self.levels as f64
    }

    /// Reconstruction value `2pE/R`.
    pub fn value(&self, p: i64) -> f64 {
        (2 * p) as f64 * self.range / self.levels as f64
    }

    /// Bin index `p` of `z`, with `|p| ≤ R₀`.
    pub fn index(&self, z: f64) -> Result<i64, QuantizerError> {
        if !(z.abs() <= self.range) {
            return Err(QuantizerError::Saturated {
                z,
                range: self.range,
            });
        }
        let p = self.positive_index(z.abs());
        Ok(if z < 0.0 { -p } else { p })
    }

    /// Index for `z ∈ [0, E]`.
    fn positive_index(&self, z: f64) -> i64 {
        let r0 = self.half_levels();
        if z <= self.edge(1) {
            return 0;
        }
        // floating estimate, then enforce edge(2p−1) < z ≤ edge(2p+1)
        let scaled = z * self.levels as f64 / self.range;
        let mut p = ((scaled - 1.0) / 2.0).ceil() as i64;
        p = p.clamp(1, r0);
        while p > 1 && z <= self.edge(2 * p - 1) {
            p -= 1;
        }
        while p < r0 && z > self.edge(2 * p + 1) {
            p += 1;
        }
        p
    }

    /// `Q_{E,R}[z]`.
    pub fn quantize(&self, z: f64) -> Result<f64, QuantizerError> {
        Ok(self.value(self.index(z)?))
    }
}

/// Transmitted index for a sum of quantized relative measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantIndex {
    pub p: i64,
    pub dtilde: u32,
}

impl QuantIndex {
    /// Number of distinct indices, `2·d̃·R₀ + 1`.
    pub fn alphabet_size(levels: u32, dtilde: u32) -> u64 {
        2 * dtilde as u64 * ((levels as u64 - 1) / 2) + 1
    }

    /// Bits needed to transmit one index.
    pub fn bits(levels: u32, dtilde: u32) -> u32 {
        let size = Self::alphabet_size(levels, dtilde);
        u64::BITS - (size - 1).leading_zeros()
    }
}

/// Encodes a sum of quantized values as the integer sum of their
/// multiples of `2E/R`.
pub fn encode_sum(
    spec: &QuantizerSpec,
    dtilde: u32,
    values: &[f64],
) -> Result<QuantIndex, QuantizerError> {
    if values.len() > dtilde as usize {
        return Err(QuantizerError::TooManyValues {
            count: values.len(),
            dtilde,
        });
    }
    let step = spec.step();
    let mut p = 0i64;
    for &v in values {
        let m = (v / step).round();
        if spec.value(m as i64) != v {
            return Err(QuantizerError::OffGrid { value: v, step });
        }
        p += m as i64;
    }
    encode_index(spec, dtilde, p)
}

/// Wraps an already-summed multiple, checking it against the alphabet.
pub fn encode_index(
    spec: &QuantizerSpec,
    dtilde: u32,
    p: i64,
) -> Result<QuantIndex, QuantizerError> {
    let limit = dtilde as i64 * spec.half_levels();
    if p.abs() > limit {
        return Err(QuantizerError::IndexOutOfAlphabet { p, limit });
    }
    Ok(QuantIndex { p, dtilde })
}

/// Decodes an index with the shared current range: `2pE/R`.
pub fn decode_sum(idx: QuantIndex, range_now: f64, levels: u32) -> Result<f64, QuantizerError> {
    let limit = idx.dtilde as i64 * ((levels as i64 - 1) / 2);
    if idx.p.abs() > limit {
        return Err(QuantizerError::IndexOutOfAlphabet { p: idx.p, limit });
    }
    Ok((2 * idx.p) as f64 * range_now / levels as f64)
}
