//! Runs the test roster over many disjoint sequences and decides
//! PASS/REJECT for the whole stream.
//!
//! A test fails when its pass proportion drops below
//! `p - 3 sqrt(p (1 - p) / s)` with `p = 1 - alpha` and `s` sequences, or when
//! its p-values fail a ten-bin chi-square uniformity check at 1e-4. The suite
//! rejects when more tests fail than the `1 - alpha` quantile of
//! Binomial(tests, alpha).

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::{binomial_quantile, pvalue_uniformity};
use super::sts::{self, Direction};
use super::{BitSequence, TestResult};
use crate::error::{Error, Result};

/// Uniformity p-value below which a test fails regardless of proportion.
pub const UNIFORMITY_THRESHOLD: f64 = 1e-4;
/// Minimum number of sequences for the proportion rule to be meaningful.
pub const MIN_SEQUENCES: usize = 20;

/// Names of the roster entries, in report order.
pub const ROSTER: [&str; 10] = [
    "monobit",
    "block_frequency",
    "runs",
    "longest_run_of_ones",
    "cumulative_sums_forward",
    "cumulative_sums_backward",
    "serial_1",
    "serial_2",
    "approximate_entropy",
    "spectral_dft",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub alpha: f64,
    pub seq_len: usize,
    pub seq_count: usize,
    pub block_len: usize,
    pub serial_m: usize,
    pub apen_m: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            seq_len: 1_000_000,
            seq_count: 100,
            block_len: 128,
            serial_m: 2,
            apen_m: 2,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} not in (0,1)",
                self.alpha
            )));
        }
        if self.seq_count < MIN_SEQUENCES {
            return Err(Error::InvalidConfig(format!(
                "seq_count {} below {MIN_SEQUENCES}",
                self.seq_count
            )));
        }
        if self.seq_len < 128 {
            return Err(Error::InvalidConfig(
                "seq_len must be at least 128 bits".into(),
            ));
        }
        Ok(())
    }

    /// Stream bytes needed to fill every sequence.
    pub fn bytes_needed(&self) -> usize {
        (self.seq_len * self.seq_count).div_ceil(8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Reject => "REJECT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub name: String,
    pub passes: usize,
    pub proportion: f64,
    pub uniformity_p: f64,
    pub proportion_ok: bool,
    pub uniformity_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub alpha: f64,
    pub seq_len: usize,
    pub seq_count: usize,
    pub tests: Vec<TestSummary>,
    pub tests_passed: usize,
    pub tests_run: usize,
    pub failure_threshold: u64,
    pub verdict: Verdict,
}

impl BatteryReport {
    /// Tests whose pass proportion fell outside the interval.
    pub fn proportion_failures(&self) -> usize {
        self.tests.iter().filter(|t| !t.proportion_ok).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Lower edge of the acceptable pass proportion.
pub fn proportion_lower_bound(alpha: f64, seq_count: usize) -> f64 {
    let p = 1.0 - alpha;
    p - 3.0 * (p * alpha / seq_count as f64).sqrt()
}

pub fn test_fails(summary: &TestSummary) -> bool {
    !(summary.proportion_ok && summary.uniformity_ok)
}

fn summarize(name: &str, p_values: &[f64], alpha: f64) -> TestSummary {
    let seq_count = p_values.len();
    let passes = p_values.iter().filter(|&&p| p >= alpha).count();
    let proportion = passes as f64 / seq_count as f64;
    let uniformity_p = pvalue_uniformity(p_values);
    TestSummary {
        name: name.to_string(),
        passes,
        proportion,
        uniformity_p,
        proportion_ok: proportion >= proportion_lower_bound(alpha, seq_count),
        uniformity_ok: uniformity_p >= UNIFORMITY_THRESHOLD,
    }
}

/// Suite decision from per-test summaries.
pub fn interpret(report: &BatteryReport, alpha: f64) -> Verdict {
    let failing = report.tests.iter().filter(|t| test_fails(t)).count() as u64;
    let threshold = binomial_quantile(report.tests.len() as u64, alpha, 1.0 - alpha);
    if failing > threshold {
        Verdict::Reject
    } else {
        Verdict::Pass
    }
}

/// Runs every roster test on one sequence, in [`ROSTER`] order.
pub fn run_sequence(seq: &BitSequence, config: &BatteryConfig) -> Result<Vec<TestResult>> {
    let [s1, s2] = sts::serial(seq, config.serial_m)?;
    Ok(vec![
        sts::monobit(seq)?,
        sts::block_frequency(seq, config.block_len)?,
        sts::runs(seq)?,
        sts::longest_run_of_ones(seq)?,
        sts::cumulative_sums(seq, Direction::Forward)?,
        sts::cumulative_sums(seq, Direction::Backward)?,
        s1,
        s2,
        sts::approximate_entropy(seq, config.apen_m)?,
        sts::spectral_dft(seq)?,
    ])
}

/// Splits `data` into `seq_count` disjoint `seq_len`-bit sequences and runs
/// the roster on each.
pub fn run_battery(data: &[u8], config: &BatteryConfig) -> Result<BatteryReport> {
    config.validate()?;
    let needed = config.bytes_needed();
    if data.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: data.len(),
        });
    }
    let bits = super::unpack(&data[..needed]);
    let per_sequence: Vec<Vec<TestResult>> = (0..config.seq_count)
        .into_par_iter()
        .map(|k| {
            let slice = bits[k * config.seq_len..(k + 1) * config.seq_len].to_vec();
            run_sequence(&BitSequence::from_bits(slice)?, config)
        })
        .collect::<Result<_>>()?;

    let tests: Vec<TestSummary> = ROSTER
        .iter()
        .enumerate()
        .map(|(t, name)| {
            let ps: Vec<f64> = per_sequence.iter().map(|r| r[t].p_value).collect();
            summarize(name, &ps, config.alpha)
        })
        .collect();
    Ok(assemble(config, tests))
}

/// Builds a report from per-test summaries, filling in totals and verdict.
pub fn assemble(config: &BatteryConfig, tests: Vec<TestSummary>) -> BatteryReport {
    let tests_run = tests.len();
    let tests_passed = tests.iter().filter(|t| !test_fails(t)).count();
    let mut report = BatteryReport {
        alpha: config.alpha,
        seq_len: config.seq_len,
        seq_count: config.seq_count,
        tests,
        tests_passed,
        tests_run,
        failure_threshold: binomial_quantile(tests_run as u64, config.alpha, 1.0 - config.alpha),
        verdict: Verdict::Pass,
    };
    report.verdict = interpret(&report, config.alpha);
    report
}

/// Summary for a test with the given pass count and uniformity p-value.
pub fn summary_from_counts(
    name: &str,
    passes: usize,
    seq_count: usize,
    uniformity_p: f64,
    alpha: f64,
) -> TestSummary {
    let proportion = passes as f64 / seq_count as f64;
    TestSummary {
        name: name.to_string(),
        passes,
        proportion,
        uniformity_p,
        proportion_ok: proportion >= proportion_lower_bound(alpha, seq_count),
        uniformity_ok: uniformity_p >= UNIFORMITY_THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seq_count: usize) -> BatteryConfig {
        BatteryConfig {
            seq_count,
            ..BatteryConfig::default()
        }
    }

    fn report_from(counts: &[usize], seq_count: usize) -> BatteryReport {
        let tests = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| summary_from_counts(&format!("t{i}"), c, seq_count, 0.5, 0.01))
            .collect();
        assemble(&cfg(seq_count), tests)
    }

    #[test]
    fn all_pass_is_pass() {
        let r = report_from(&[100; 10], 100);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(interpret(&r, 0.01), Verdict::Pass);
        assert_eq!(r.tests_passed, 10);
    }

    #[test]
    fn single_gross_failure_rejects() {
        let r = report_from(&[23], 100);
        assert!(test_fails(&r.tests[0]));
        assert_eq!(r.verdict, Verdict::Reject);
    }

    #[test]
    fn boundary_proportion_passes() {
        // 0.99 - 3 sqrt(0.99*0.01/100) = 0.96015; 99/100 sits well inside.
        let lower = proportion_lower_bound(0.01, 100);
        assert!((lower - 0.960150).abs() < 1e-6);
        let r = report_from(&[99; 10], 100);
        assert!(r.tests.iter().all(|t| t.proportion_ok));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn one_of_ten_failing_is_tolerated_two_are_not() {
        let mut counts = [100; 10];
        counts[3] = 80;
        assert_eq!(report_from(&counts, 100).verdict, Verdict::Pass);
        counts[5] = 80;
        assert_eq!(report_from(&counts, 100).verdict, Verdict::Reject);
    }

    #[test]
    fn uniformity_failure_counts_as_failure() {
        let s = summary_from_counts("x", 100, 100, 1e-6, 0.01);
        assert!(s.proportion_ok);
        assert!(test_fails(&s));
    }

    #[test]
    fn insufficient_data() {
        let c = BatteryConfig {
            seq_len: 1000,
            seq_count: 20,
            ..BatteryConfig::default()
        };
        assert!(matches!(
            run_battery(&[0u8; 100], &c),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(19).validate().is_err());
        assert!(BatteryConfig {
            alpha: 0.0,
            ..cfg(20)
        }
        .validate()
        .is_err());
        assert!(BatteryConfig {
            alpha: 1.0,
            ..cfg(20)
        }
        .validate()
        .is_err());
        assert!(cfg(20).validate().is_ok());
    }
}
