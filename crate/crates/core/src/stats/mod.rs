//! Statistical randomness battery and its suite-level interpretation.

pub mod battery;
pub mod special;
pub mod sts;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use battery::{
    interpret, run_battery, test_fails, BatteryConfig, BatteryReport, TestSummary, Verdict,
};

/// A bit string. Bytes unpack most-significant bit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>,
}

impl BitSequence {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidConfig("empty bit sequence".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_bits(unpack(bytes))
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn from_ascii(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("invalid bit character `{other}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bits(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Packs back into bytes, MSB first; a trailing partial byte is
    /// zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        pack(&self.bits)
    }
}

pub fn unpack(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1))
        .collect()
}

pub fn pack(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
        })
        .collect()
}

/// Outcome of one test on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub p_value: f64,
    pub params: Vec<(String, f64)>,
}

impl TestResult {
    pub(crate) fn new(name: &str, p_value: f64) -> Self {
        Self {
            test_name: name.to_string(),
            p_value: p_value.clamp(0.0, 1.0),
            params: Vec::new(),
        }
    }

    pub(crate) fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.to_string(), value));
        self
    }

    pub fn passed(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}
