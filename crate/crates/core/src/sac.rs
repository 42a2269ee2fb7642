//! Strict avalanche criterion of a cipher's tag.
//!
//! For each sample a base input is drawn, the tag is computed, and then
//! every bit of the chosen field is complemented in turn. Entry `[i][j]` of
//! the matrix is the fraction of samples in which tag bit `j` changed when
//! field bit `i` was flipped.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aead::{encrypt, extract_tag, Aead, AeadInputs};
use crate::error::{Error, Result};
use crate::rng::{streams, ReferenceRng};
use crate::stats::special::normal_cdf;
use crate::stream::{
    derive_key, plaintext_at, pmn_at, PmnMode, DEFAULT_ADATA_LEN, DEFAULT_PLAINTEXT_LEN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SacField {
    Plaintext,
    Pmn,
    Key,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SacConfig {
    pub field: SacField,
    /// Draw a fresh random key, PMN and plaintext for every sample. When
    /// false the key is fixed by `seed`, the plaintext is the sample's
    /// even-weight counter value and the PMN follows `pmn_mode`.
    pub fresh_context: bool,
    pub pmn_mode: PmnMode,
    pub samples: usize,
    pub seed: u64,
    pub plaintext_len: usize,
}

impl SacConfig {
    pub fn new(field: SacField, fresh_context: bool, samples: usize, seed: u64) -> Self {
        Self {
            field,
            fresh_context,
            pmn_mode: PmnMode::Zero,
            samples,
            seed,
            plaintext_len: DEFAULT_PLAINTEXT_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvalancheMatrix {
    pub input_bits: usize,
    pub output_bits: usize,
    pub samples: usize,
    /// Row-major, `input_bits * output_bits` entries.
    pub entries: Vec<f64>,
}

impl AvalancheMatrix {
    pub fn from_rows(rows: &[Vec<f64>], samples: usize) -> Self {
        let input_bits = rows.len();
        let output_bits = rows.first().map_or(0, Vec::len);
        Self {
            input_bits,
            output_bits,
            samples,
            entries: rows.concat(),
        }
    }

    pub fn get(&self, input_bit: usize, output_bit: usize) -> f64 {
        self.entries[input_bit * self.output_bits + output_bit]
    }

    pub fn row(&self, input_bit: usize) -> &[f64] {
        &self.entries[input_bit * self.output_bits..(input_bit + 1) * self.output_bits]
    }

    /// CSV with one row per input bit and tag-bit indices as the header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "input_bit")?;
        for j in 0..self.output_bits {
            write!(w, ",{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.input_bits {
            write!(w, "{i}")?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Bit `i` of a byte string, MSB-first within each byte.
fn flip_bit(bytes: &mut [u8], i: usize) {
    bytes[i / 8] ^= 0x80 >> (i % 8);
}

fn tag_bits_differ(a: &[u8], b: &[u8], counts: &mut [u32]) {
    for (byte_idx, (x, y)) in a.iter().zip(b).enumerate() {
        let mut diff = x ^ y;
        while diff != 0 {
            let lead = diff.leading_zeros() as usize;
            counts[byte_idx * 8 + lead] += 1;
            diff &= !(0x80 >> lead);
        }
    }
}

/// The `index`-th even-weight integer, in increasing order. Flipping one bit
/// of an even-weight plaintext never yields another base plaintext, so no
/// tag pair is counted twice within a row.
pub fn even_weight(index: u64) -> u64 {
    (index << 1) | (index.count_ones() & 1) as u64
}

struct SampleInputs {
    key: Vec<u8>,
    pmn: Vec<u8>,
    plaintext: Vec<u8>,
}

fn sample_inputs(
    cipher: &dyn Aead,
    config: &SacConfig,
    fixed_key: &[u8],
    index: usize,
) -> Result<SampleInputs> {
    let spec = cipher.spec();
    if config.fresh_context {
        let mut rng = ReferenceRng::new(config.seed, streams::SAC_INPUTS);
        let per_sample = (spec.key_len + spec.pmn_len + config.plaintext_len) as u64;
        rng.seek(index as u64 * per_sample);
        Ok(SampleInputs {
            key: rng.bytes(spec.key_len),
            pmn: rng.bytes(spec.pmn_len),
            plaintext: rng.bytes(config.plaintext_len),
        })
    } else {
        Ok(SampleInputs {
            key: fixed_key.to_vec(),
            pmn: pmn_at(config.pmn_mode, index as u64, spec.pmn_len, config.seed)?,
            plaintext: plaintext_at(even_weight(index as u64), config.plaintext_len)?,
        })
    }
}

fn tag_of(cipher: &dyn Aead, s: &SampleInputs, smn: &[u8], adata: &[u8]) -> Result<Vec<u8>> {
    let out = encrypt(
        cipher,
        &AeadInputs {
            key: &s.key,
            smn,
            pmn: &s.pmn,
            adata,
            plaintext: &s.plaintext,
        },
    )?;
    Ok(extract_tag(&out, s.plaintext.len(), cipher.spec().tag_len)?.to_vec())
}

pub fn avalanche_matrix(cipher: &dyn Aead, config: &SacConfig) -> Result<AvalancheMatrix> {
    if config.samples == 0 {
        return Err(Error::InvalidConfig("SAC needs at least one sample".into()));
    }
    let spec = cipher.spec().clone();
    let field_len = match config.field {
        SacField::Plaintext => config.plaintext_len,
        SacField::Pmn => spec.pmn_len,
        SacField::Key => spec.key_len,
    };
    if field_len == 0 {
        return Err(Error::InvalidConfig("SAC field has zero length".into()));
    }
    let in_bits = field_len * 8;
    let out_bits = spec.tag_len * 8;
    let fixed_key = derive_key(config.seed, spec.key_len);
    let smn = vec![0u8; spec.smn_len];
    let adata = vec![0u8; DEFAULT_ADATA_LEN];

    const CHUNK: usize = 256;
    let n_chunks = config.samples.div_ceil(CHUNK);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u32>> {
            let mut counts = vec![0u32; in_bits * out_bits];
            for index in c * CHUNK..((c + 1) * CHUNK).min(config.samples) {
                let base = sample_inputs(cipher, config, &fixed_key, index)?;
                let base_tag = tag_of(cipher, &base, &smn, &adata)?;
                for i in 0..in_bits {
                    let mut flipped = SampleInputs {
                        key: base.key.clone(),
                        pmn: base.pmn.clone(),
                        plaintext: base.plaintext.clone(),
                    };
                    let field = match config.field {
                        SacField::Plaintext => &mut flipped.plaintext,
                        SacField::Pmn => &mut flipped.pmn,
                        SacField::Key => &mut flipped.key,
                    };
                    flip_bit(field, i);
                    let tag = tag_of(cipher, &flipped, &smn, &adata)?;
                    tag_bits_differ(
                        &base_tag,
                        &tag,
                        &mut counts[i * out_bits..(i + 1) * out_bits],
                    );
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u32; in_bits * out_bits],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let n = config.samples as f64;
    Ok(AvalancheMatrix {
        input_bits: in_bits,
        output_bits: out_bits,
        samples: config.samples,
        entries: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

/// Largest distance of any entry from one half.
pub fn sac_deviation(matrix: &AvalancheMatrix) -> f64 {
    matrix
        .entries
        .iter()
        .map(|e| (e - 0.5).abs())
        .fold(0.0, f64::max)
}

/// True iff the deviation does not exceed `tolerance` (boundary inclusive).
pub fn sac_pass(matrix: &AvalancheMatrix, tolerance: f64) -> bool {
    assert!(tolerance > 0.0, "SAC tolerance must be positive");
    // Absorbs rounding in |entry - 0.5| so that 0.48 sits exactly on 0.02.
    sac_deviation(matrix) <= tolerance + 1e-12
}

/// Tolerance that an ideal cipher exceeds with probability at most `alpha`
/// over all `entries` cells: a Bonferroni-corrected two-sided normal bound
/// on a Binomial(samples, 1/2) proportion.
pub fn sac_tolerance(samples: usize, entries: usize, alpha: f64) -> f64 {
    let tail = alpha / (2.0 * entries as f64);
    // Bisection on the upper normal tail.
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - normal_cdf(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi * 0.5 / (samples as f64).sqrt()
}
