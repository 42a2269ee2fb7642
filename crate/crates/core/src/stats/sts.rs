//! Single-sequence randomness tests after NIST SP 800-22 rev. 1a.
//!
//! Every test maps a [`BitSequence`] to one or more p-values; constant
//! inputs drive all of them to (numerically) zero.

use std::f64::consts::SQRT_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::special::{erfc, igamc, normal_cdf};
use super::{BitSequence, TestResult};
use crate::error::{Error, Result};

fn require(test: &'static str, seq: &BitSequence, needed: usize) -> Result<()> {
    if seq.len() < needed {
        Err(Error::SequenceTooShort {
            test,
            needed,
            actual: seq.len(),
        })
    } else {
        Ok(())
    }
}

pub fn monobit(seq: &BitSequence) -> Result<TestResult> {
    require("monobit", seq, 1)?;
    let n = seq.len() as f64;
    let sum: i64 = seq.bits().iter().map(|&b| 2 * b as i64 - 1).sum();
    let s_obs = (sum.abs() as f64) / n.sqrt();
    Ok(TestResult::new("monobit", erfc(s_obs / SQRT_2)).with_param("n", n))
}

pub fn block_frequency(seq: &BitSequence, block_len: usize) -> Result<TestResult> {
    if block_len == 0 {
        return Err(Error::InvalidConfig("block length must be positive".into()));
    }
    require("block_frequency", seq, block_len)?;
    let blocks = seq.len() / block_len;
    let m = block_len as f64;
    let chi2: f64 = seq
        .bits()
        .chunks_exact(block_len)
        .take(blocks)
        .map(|block| {
            let ones = block.iter().filter(|&&b| b == 1).count() as f64;
            (ones / m - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m;
    Ok(
        TestResult::new("block_frequency", igamc(blocks as f64 / 2.0, chi2 / 2.0))
            .with_param("M", m)
            .with_param("N", blocks as f64),
    )
}

pub fn runs(seq: &BitSequence) -> Result<TestResult> {
    require("runs", seq, 2)?;
    let bits = seq.bits();
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b == 1).count() as f64 / n;
    let tau = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= tau {
        return Ok(TestResult::new("runs", 0.0).with_param("pi", pi));
    }
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let v = v_obs as f64;
    let num = (v - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    Ok(TestResult::new("runs", erfc(num / den))
        .with_param("pi", pi)
        .with_param("V", v))
}

struct LongestRunTable {
    block_len: usize,
    min_run: usize,
    probs: &'static [f64],
}

const LONGEST_RUN_8: LongestRunTable = LongestRunTable {
    block_len: 8,
    min_run: 1,
    probs: &[0.2148, 0.3672, 0.2305, 0.1875],
};
const LONGEST_RUN_128: LongestRunTable = LongestRunTable {
    block_len: 128,
    min_run: 4,
    probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
};
const LONGEST_RUN_10K: LongestRunTable = LongestRunTable {
    block_len: 10_000,
    min_run: 10,
    probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
};

pub fn longest_run_of_ones(seq: &BitSequence) -> Result<TestResult> {
    require("longest_run_of_ones", seq, 128)?;
    let n = seq.len();
    let table = if n < 6272 {
        &LONGEST_RUN_8
    } else if n < 750_000 {
        &LONGEST_RUN_128
    } else {
        &LONGEST_RUN_10K
    };
    let k = table.probs.len();
    let blocks = n / table.block_len;
    let mut counts = vec![0usize; k];
    for block in seq.bits().chunks_exact(table.block_len).take(blocks) {
        let mut longest = 0usize;
        let mut current = 0;
        for &b in block {
            if b == 1 {
                current += 1;
                longest = longest.max(current);
            } else {
                current = 0;
            }
        }
        let idx = longest.saturating_sub(table.min_run).min(k - 1);
        counts[idx] += 1;
    }
    let nb = blocks as f64;
    let chi2: f64 = counts
        .iter()
        .zip(table.probs)
        .map(|(&v, &p)| (v as f64 - nb * p).powi(2) / (nb * p))
        .sum();
    let df = (k - 1) as f64;
    Ok(
        TestResult::new("longest_run_of_ones", igamc(df / 2.0, chi2 / 2.0))
            .with_param("M", table.block_len as f64)
            .with_param("N", nb),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

pub fn cumulative_sums(seq: &BitSequence, direction: Direction) -> Result<TestResult> {
    require("cumulative_sums", seq, 1)?;
    let bits = seq.bits();
    let n = bits.len();
    let step = |b: &u8| 2 * *b as i64 - 1;
    let mut s = 0i64;
    let mut z = 0i64;
    let mut visit = |b: &u8| {
        s += step(b);
        z = z.max(s.abs());
    };
    match direction {
        Direction::Forward => bits.iter().for_each(&mut visit),
        Direction::Backward => bits.iter().rev().for_each(&mut visit),
    }
    let name = match direction {
        Direction::Forward => "cumulative_sums_forward",
        Direction::Backward => "cumulative_sums_backward",
    };
    Ok(TestResult::new(name, cusum_p_value(n, z)).with_param("z", z as f64))
}

fn cusum_p_value(n: usize, z: i64) -> f64 {
    if z == 0 {
        // Only reachable for n = 0; a walk of length >= 1 always moves.
        return 1.0;
    }
    let nf = n as f64;
    let zf = z as f64;
    let sqrt_n = nf.sqrt();
    // Summation limits truncate toward zero, as in the reference code.
    let lo1 = ((-nf / zf + 1.0) / 4.0).trunc() as i64;
    let hi = ((nf / zf - 1.0) / 4.0).trunc() as i64;
    let lo2 = ((-nf / zf - 3.0) / 4.0).trunc() as i64;
    let mut sum1 = 0.0;
    for k in lo1..=hi {
        let k = k as f64;
        sum1 +=
            normal_cdf((4.0 * k + 1.0) * zf / sqrt_n) - normal_cdf((4.0 * k - 1.0) * zf / sqrt_n);
    }
    let mut sum2 = 0.0;
    for k in lo2..=hi {
        let k = k as f64;
        sum2 +=
            normal_cdf((4.0 * k + 3.0) * zf / sqrt_n) - normal_cdf((4.0 * k + 1.0) * zf / sqrt_n);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

/// Frequencies of all overlapping `m`-bit patterns, wrapping around the end.
fn pattern_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        return counts;
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut window = 0usize;
    for i in 0..m - 1 {
        window = (window << 1) | bits[i % n] as usize;
    }
    for i in 0..n {
        window = ((window << 1) | bits[(i + m - 1) % n] as usize) & mask;
        counts[window] += 1;
    }
    counts
}

fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = pattern_counts(bits, m)
        .iter()
        .map(|&c| (c as f64).powi(2))
        .sum();
    (1u64 << m) as f64 / n * sum - n
}

/// Serial test; returns the first- and second-difference p-values.
pub fn serial(seq: &BitSequence, m: usize) -> Result<[TestResult; 2]> {
    if m < 2 {
        return Err(Error::InvalidConfig("serial test needs m >= 2".into()));
    }
    require("serial", seq, m)?;
    let bits = seq.bits();
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m - 2);
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = igamc((1u64 << (m - 2)) as f64, del1 / 2.0);
    let p2 = igamc((1u64 << (m - 2)) as f64 / 2.0, del2 / 2.0);
    Ok([
        TestResult::new("serial_1", p1).with_param("m", m as f64),
        TestResult::new("serial_2", p2).with_param("m", m as f64),
    ])
}

fn phi(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    pattern_counts(bits, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

pub fn approximate_entropy(seq: &BitSequence, m: usize) -> Result<TestResult> {
    if m == 0 {
        return Err(Error::InvalidConfig(
            "approximate entropy needs m >= 1".into(),
        ));
    }
    require("approximate_entropy", seq, m + 1)?;
    let bits = seq.bits();
    let n = bits.len() as f64;
    let ap_en = phi(bits, m) - phi(bits, m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - ap_en);
    let df = (1u64 << (m - 1)) as f64;
    Ok(
        TestResult::new("approximate_entropy", igamc(df, chi2 / 2.0))
            .with_param("m", m as f64)
            .with_param("ApEn", ap_en),
    )
}

pub fn spectral_dft(seq: &BitSequence) -> Result<TestResult> {
    require("spectral_dft", seq, 2)?;
    let bits = seq.bits();
    let n = bits.len();
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(2.0 * b as f64 - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let n0 = 0.95 * nf / 2.0;
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let d = (n1 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    Ok(TestResult::new("spectral_dft", erfc(d.abs() / SQRT_2))
        .with_param("N1", n1)
        .with_param("d", d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> BitSequence {
        BitSequence::from_ascii(s).unwrap()
    }

    #[test]
    fn monobit_simple_cases() {
        let zeros = BitSequence::from_bits(vec![0; 100]).unwrap();
        let p = monobit(&zeros).unwrap().p_value;
        assert!((p - erfc(10.0 / SQRT_2)).abs() < 1e-30);
        assert!(p < 1e-22);
        let alt = BitSequence::from_bits((0..100).map(|i| (i % 2) as u8).collect()).unwrap();
        assert_eq!(monobit(&alt).unwrap().p_value, 1.0);
    }

    #[test]
    fn block_frequency_simple_cases() {
        let ones = BitSequence::from_bits(vec![1; 1000]).unwrap();
        assert!(block_frequency(&ones, 100).unwrap().p_value < 1e-10);
        let half = BitSequence::from_bits((0..1000).map(|i| (i % 2) as u8).collect()).unwrap();
        assert_eq!(block_frequency(&half, 100).unwrap().p_value, 1.0);
        assert!(block_frequency(&half, 0).is_err());
    }

    #[test]
    fn runs_degenerate_cases() {
        let alt = BitSequence::from_bits((0..100).map(|i| (i % 2) as u8).collect()).unwrap();
        assert!(runs(&alt).unwrap().p_value < 1e-10);
        let zeros = BitSequence::from_bits(vec![0; 100]).unwrap();
        assert_eq!(runs(&zeros).unwrap().p_value, 0.0);
    }

    #[test]
    fn all_zero_input_rejects_everywhere() {
        let zeros = BitSequence::from_bits(vec![0; 20_000]).unwrap();
        let mut ps = vec![
            monobit(&zeros).unwrap().p_value,
            block_frequency(&zeros, 128).unwrap().p_value,
            runs(&zeros).unwrap().p_value,
            longest_run_of_ones(&zeros).unwrap().p_value,
            cumulative_sums(&zeros, Direction::Forward).unwrap().p_value,
            cumulative_sums(&zeros, Direction::Backward)
                .unwrap()
                .p_value,
            approximate_entropy(&zeros, 2).unwrap().p_value,
            spectral_dft(&zeros).unwrap().p_value,
        ];
        ps.extend(serial(&zeros, 2).unwrap().iter().map(|r| r.p_value));
        for p in ps {
            assert!(p < 1e-6, "p = {p}");
        }
    }

    #[test]
    fn too_short_sequences() {
        let s = seq("1011");
        assert!(matches!(
            longest_run_of_ones(&s),
            Err(Error::SequenceTooShort { .. })
        ));
        assert!(block_frequency(&s, 8).is_err());
    }

    #[test]
    fn pattern_counts_wrap() {
        // 0011 with wraparound: 00, 01, 11, 10
        assert_eq!(pattern_counts(&[0, 0, 1, 1], 2), vec![1, 1, 1, 1]);
        assert_eq!(pattern_counts(&[0, 0, 1, 1], 1), vec![2, 2]);
    }
}
