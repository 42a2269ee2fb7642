//! Authentication-tag streams under the three public-message-number
//! policies.
//!
//! Tag `i` of a stream is the tag of
//! `F(plaintext = counter(i), adata = zeros, key = K, smn = zeros, pmn = pmn(i))`
//! where `K` is drawn once from the master seed. Both counters are
//! little-endian: byte 0 holds the least significant byte.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aead::{encrypt, extract_tag, AeadInputs, Registry};
use crate::error::{Error, Result};
use crate::rng::{streams, ReferenceRng};

pub const DEFAULT_ADATA_LEN: usize = 2;
pub const DEFAULT_PLAINTEXT_LEN: usize = 16;
pub const ENDIANNESS: &str = "little";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmnMode {
    Zero,
    Counter,
    Random,
}

impl PmnMode {
    pub const ALL: [PmnMode; 3] = [PmnMode::Zero, PmnMode::Counter, PmnMode::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            PmnMode::Zero => "zero",
            PmnMode::Counter => "counter",
            PmnMode::Random => "random",
        }
    }
}

impl fmt::Display for PmnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PmnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(PmnMode::Zero),
            "counter" => Ok(PmnMode::Counter),
            "random" => Ok(PmnMode::Random),
            other => Err(Error::Parse(format!("unknown PMN mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub cipher: String,
    pub mode: PmnMode,
    pub num_tags: usize,
    pub master_seed: u64,
    pub adata_len: usize,
    pub plaintext_len: usize,
}

impl StreamConfig {
    pub fn new(
        cipher: impl Into<String>,
        mode: PmnMode,
        num_tags: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            cipher: cipher.into(),
            mode,
            num_tags,
            master_seed,
            adata_len: DEFAULT_ADATA_LEN,
            plaintext_len: DEFAULT_PLAINTEXT_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    pub bytes: Vec<u8>,
    pub tags_emitted: usize,
    pub tag_len: usize,
    pub config_echo: StreamConfig,
}

/// Writes `index` as a little-endian counter of `len` bytes.
fn le_counter(index: u64, len: usize) -> Result<Vec<u8>> {
    if len < 8 && index >> (8 * len) != 0 {
        return Err(Error::Overflow { index, len });
    }
    let mut out = vec![0u8; len];
    let bytes = index.to_le_bytes();
    let n = len.min(8);
    out[..n].copy_from_slice(&bytes[..n]);
    Ok(out)
}

pub fn plaintext_at(index: u64, plaintext_len: usize) -> Result<Vec<u8>> {
    le_counter(index, plaintext_len)
}

/// Public message number for tag `index`.
///
/// RANDOM values come from the seeded generator's PMN substream. For
/// `pmn_len >= 8` value `i` is simply bytes `[i*len, (i+1)*len)` of that
/// substream; shorter values are drawn sequentially with duplicates skipped,
/// so this call costs O(index) for them.
pub fn pmn_at(mode: PmnMode, index: u64, pmn_len: usize, seed: u64) -> Result<Vec<u8>> {
    match mode {
        PmnMode::Zero => Ok(vec![0u8; pmn_len]),
        PmnMode::Counter => le_counter(index, pmn_len),
        PmnMode::Random if pmn_len >= 8 => {
            let mut rng = ReferenceRng::new(seed, streams::RANDOM_PMN);
            rng.seek(index * pmn_len as u64);
            Ok(rng.bytes(pmn_len))
        }
        PmnMode::Random => {
            let mut seq = PmnSequence::new(mode, pmn_len, seed);
            let mut value = Vec::new();
            for _ in 0..=index {
                value = seq.next_value()?;
            }
            Ok(value)
        }
    }
}

/// Sequential PMN generator equivalent to calling [`pmn_at`] for 0, 1, 2, ...
pub struct PmnSequence {
    mode: PmnMode,
    pmn_len: usize,
    index: u64,
    rng: ReferenceRng,
    seen: Option<HashSet<Vec<u8>>>,
}

impl PmnSequence {
    pub fn new(mode: PmnMode, pmn_len: usize, seed: u64) -> Self {
        let seen = (mode == PmnMode::Random && pmn_len < 8).then(HashSet::new);
        Self {
            mode,
            pmn_len,
            index: 0,
            rng: ReferenceRng::new(seed, streams::RANDOM_PMN),
            seen,
        }
    }

    pub fn next_value(&mut self) -> Result<Vec<u8>> {
        let index = self.index;
        let value = match (self.mode, self.seen.as_mut()) {
            (PmnMode::Random, Some(seen)) => {
                let space = 1u64 << (8 * self.pmn_len);
                if index >= space {
                    return Err(Error::UniquenessExhausted {
                        index,
                        len: self.pmn_len,
                    });
                }
                loop {
                    let candidate = self.rng.bytes(self.pmn_len);
                    if seen.insert(candidate.clone()) {
                        break candidate;
                    }
                }
            }
            (PmnMode::Random, None) => self.rng.bytes(self.pmn_len),
            (mode, _) => pmn_at(mode, index, self.pmn_len, 0)?,
        };
        self.index += 1;
        Ok(value)
    }
}

/// The fixed cipher key of a stream: the first `key_len` bytes of the key
/// substream of `master_seed`.
pub fn derive_key(master_seed: u64, key_len: usize) -> Vec<u8> {
    ReferenceRng::new(master_seed, streams::CIPHER_KEY).bytes(key_len)
}

pub fn generate_stream(registry: &Registry, config: &StreamConfig) -> Result<TagStream> {
    if config.num_tags == 0 {
        return Err(Error::InvalidConfig("num_tags must be at least 1".into()));
    }
    let cipher = registry.get(&config.cipher)?;
    let spec = cipher.spec().clone();
    let key = derive_key(config.master_seed, spec.key_len);
    let smn = vec![0u8; spec.smn_len];
    let adata = vec![0u8; config.adata_len];
    let tag_len = spec.tag_len;

    // Sequential PMN draws are only needed for short random PMNs.
    let pmns: Option<Vec<Vec<u8>>> = if config.mode == PmnMode::Random && spec.pmn_len < 8 {
        let mut seq = PmnSequence::new(config.mode, spec.pmn_len, config.master_seed);
        Some(
            (0..config.num_tags)
                .map(|_| seq.next_value())
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    let mut bytes = vec![0u8; config.num_tags * tag_len];
    const CHUNK: usize = 4096;
    bytes
        .par_chunks_mut(CHUNK * tag_len)
        .enumerate()
        .try_for_each(|(chunk_idx, out)| -> Result<()> {
            let first = chunk_idx * CHUNK;
            for (j, slot) in out.chunks_mut(tag_len).enumerate() {
                let i = (first + j) as u64;
                let plaintext = plaintext_at(i, config.plaintext_len)?;
                let pmn = match &pmns {
                    Some(list) => list[i as usize].clone(),
                    None => pmn_at(config.mode, i, spec.pmn_len, config.master_seed)?,
                };
                let inputs = AeadInputs {
                    key: &key,
                    smn: &smn,
                    pmn: &pmn,
                    adata: &adata,
                    plaintext: &plaintext,
                };
                let output = encrypt(cipher.as_ref(), &inputs)?;
                slot.copy_from_slice(extract_tag(&output, plaintext.len(), tag_len)?);
            }
            Ok(())
        })?;

    Ok(TagStream {
        bytes,
        tags_emitted: config.num_tags,
        tag_len,
        config_echo: config.clone(),
    })
}

/// Path of the metadata file that accompanies an exported stream.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".meta");
    PathBuf::from(name)
}

/// Writes the raw tag bytes to `path` and a `key: value` sidecar next to it.
pub fn export_stream(stream: &TagStream, path: &Path) -> Result<PathBuf> {
    fs::write(path, &stream.bytes)?;
    let meta = sidecar_path(path);
    let mut f = fs::File::create(&meta)?;
    let c = &stream.config_echo;
    writeln!(f, "cipher: {}", c.cipher)?;
    writeln!(f, "mode: {}", c.mode)?;
    writeln!(f, "num_tags: {}", c.num_tags)?;
    writeln!(f, "master_seed: {}", c.master_seed)?;
    writeln!(f, "adata_len: {}", c.adata_len)?;
    writeln!(f, "plaintext_len: {}", c.plaintext_len)?;
    writeln!(f, "tag_len: {}", stream.tag_len)?;
    writeln!(f, "endianness: {ENDIANNESS}")?;
    Ok(meta)
}

/// Parses a sidecar written by [`export_stream`].
pub fn read_sidecar(path: &Path) -> Result<StreamConfig> {
    let text = fs::read_to_string(path)?;
    let mut fields = std::collections::HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("malformed sidecar line `{line}`")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("sidecar missing `{k}`")))
    };
    let num = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|e| Error::Parse(format!("sidecar `{k}`: {e}")))
    };
    Ok(StreamConfig {
        cipher: get("cipher")?,
        mode: get("mode")?.parse()?,
        num_tags: num("num_tags")? as usize,
        master_seed: num("master_seed")?,
        adata_len: num("adata_len")? as usize,
        plaintext_len: num("plaintext_len")? as usize,
    })
}
