//! The five-input authenticated-cipher interface and the built-in ciphers.
//!
//! Every cipher is a function `F(plaintext, adata, key, smn, pmn)` returning
//! `ciphertext || tag`, matching the SUPERCOP `crypto_aead_encrypt` calling
//! convention. External implementations plug in through [`Aead`] and a
//! [`Registry`].

pub mod aes;
mod gcm;
mod prftag;
mod xortag;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{streams, ReferenceRng};

pub use gcm::AesGcm;
pub use prftag::PrfTag;
pub use xortag::XorTag;

/// Tag lengths accepted by [`CipherSpec`].
pub const TAG_LENGTHS: [usize; 5] = [2, 4, 8, 12, 16];

/// Parameter set of a registered cipher. All lengths are in bytes.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CipherSpec {
    pub name: String,
    pub key_len: usize,
    pub pmn_len: usize,
    pub smn_len: usize,
    pub tag_len: usize,
}

impl CipherSpec {
    pub fn new(
        name: impl Into<String>,
        key_len: usize,
        pmn_len: usize,
        smn_len: usize,
        tag_len: usize,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidSpec("empty cipher name".into()));
        }
        if key_len == 0 {
            return Err(Error::InvalidSpec(format!(
                "{name}: key_len must be at least 1"
            )));
        }
        if !TAG_LENGTHS.contains(&tag_len) {
            return Err(Error::InvalidSpec(format!(
                "{name}: tag_len {tag_len} not in {TAG_LENGTHS:?}"
            )));
        }
        Ok(Self {
            name,
            key_len,
            pmn_len,
            smn_len,
            tag_len,
        })
    }
}

/// The five arguments of an encryption call.
#[derive(Debug, Clone, Copy)]
pub struct AeadInputs<'a> {
    pub key: &'a [u8],
    pub smn: &'a [u8],
    pub pmn: &'a [u8],
    pub adata: &'a [u8],
    pub plaintext: &'a [u8],
}

impl AeadInputs<'_> {
    fn check(&self, spec: &CipherSpec) -> Result<()> {
        check_len("key", spec.key_len, self.key.len())?;
        check_len("smn", spec.smn_len, self.smn.len())?;
        check_len("pmn", spec.pmn_len, self.pmn.len())
    }
}

fn check_len(field: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            field,
            expected,
            actual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherOutput {
    pub ciphertext_with_tag: Vec<u8>,
}

/// A plug-in authenticated cipher.
///
/// Implementations receive inputs whose lengths already match [`Aead::spec`]
/// and must be pure: no state may survive between calls.
pub trait Aead: Send + Sync {
    fn spec(&self) -> &CipherSpec;

    /// Returns `ciphertext || tag`, exactly `plaintext.len() + tag_len` bytes.
    fn seal(&self, key: &[u8], smn: &[u8], pmn: &[u8], adata: &[u8], plaintext: &[u8]) -> Vec<u8>;

    /// Returns the plaintext, or `None` when the tag does not verify.
    fn open(
        &self,
        key: &[u8],
        smn: &[u8],
        pmn: &[u8],
        adata: &[u8],
        ciphertext_with_tag: &[u8],
    ) -> Option<Vec<u8>>;
}

pub fn encrypt(cipher: &dyn Aead, inputs: &AeadInputs<'_>) -> Result<CipherOutput> {
    let spec = cipher.spec();
    inputs.check(spec)?;
    let out = cipher.seal(
        inputs.key,
        inputs.smn,
        inputs.pmn,
        inputs.adata,
        inputs.plaintext,
    );
    // A plug-in that violates the length law is reported rather than trusted.
    check_len(
        "ciphertext_with_tag",
        inputs.plaintext.len() + spec.tag_len,
        out.len(),
    )?;
    Ok(CipherOutput {
        ciphertext_with_tag: out,
    })
}

pub fn decrypt(
    cipher: &dyn Aead,
    key: &[u8],
    smn: &[u8],
    pmn: &[u8],
    adata: &[u8],
    ciphertext_with_tag: &[u8],
) -> Result<Vec<u8>> {
    let spec = cipher.spec();
    check_len("key", spec.key_len, key.len())?;
    check_len("smn", spec.smn_len, smn.len())?;
    check_len("pmn", spec.pmn_len, pmn.len())?;
    if ciphertext_with_tag.len() < spec.tag_len {
        return Err(Error::LengthMismatch {
            field: "ciphertext_with_tag",
            expected: spec.tag_len,
            actual: ciphertext_with_tag.len(),
        });
    }
    cipher
        .open(key, smn, pmn, adata, ciphertext_with_tag)
        .ok_or(Error::AuthFailure)
}

/// The trailing `tag_len` bytes of an output whose plaintext was
/// `plaintext_len` bytes long.
pub fn extract_tag(output: &CipherOutput, plaintext_len: usize, tag_len: usize) -> Result<&[u8]> {
    let bytes = &output.ciphertext_with_tag;
    check_len("ciphertext_with_tag", plaintext_len + tag_len, bytes.len())?;
    Ok(&bytes[plaintext_len..])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Fail { trial: usize, reason: String },
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }
}

/// Encrypt-decrypt sanity test over random inputs, including a single-bit
/// tag modification per trial that must be rejected.
pub fn roundtrip_check(cipher: &dyn Aead, trials: usize, seed: u64) -> CheckOutcome {
    assert!(trials >= 1, "roundtrip_check needs at least one trial");
    let spec = cipher.spec().clone();
    let mut rng = ReferenceRng::new(seed, streams::ROUNDTRIP);
    for trial in 0..trials {
        let key = rng.bytes(spec.key_len);
        let smn = rng.bytes(spec.smn_len);
        let pmn = rng.bytes(spec.pmn_len);
        let adata_len = rng.random_range(0..=32);
        let adata = rng.bytes(adata_len);
        let pt_len = rng.random_range(0..=64);
        let plaintext = rng.bytes(pt_len);
        let inputs = AeadInputs {
            key: &key,
            smn: &smn,
            pmn: &pmn,
            adata: &adata,
            plaintext: &plaintext,
        };
        let fail = |reason: String| CheckOutcome::Fail { trial, reason };
        let out = match encrypt(cipher, &inputs) {
            Ok(out) => out,
            Err(e) => return fail(format!("encrypt: {e}")),
        };
        match decrypt(cipher, &key, &smn, &pmn, &adata, &out.ciphertext_with_tag) {
            Ok(pt) if pt == plaintext => {}
            Ok(_) => return fail("decrypt returned a different plaintext".into()),
            Err(e) => return fail(format!("decrypt: {e}")),
        }
        let mut tampered = out.ciphertext_with_tag.clone();
        let bit = rng.random_range(0..spec.tag_len * 8);
        tampered[pt_len + bit / 8] ^= 1 << (bit % 8);
        match decrypt(cipher, &key, &smn, &pmn, &adata, &tampered) {
            Err(Error::AuthFailure) => {}
            Ok(_) => return fail(format!("tampered tag bit {bit} accepted")),
            Err(e) => return fail(format!("tampered decrypt: {e}")),
        }
    }
    CheckOutcome::Pass
}

/// Runtime registry of ciphers keyed by name.
#[derive(Clone, Default)]
pub struct Registry {
    ciphers: BTreeMap<String, Arc<dyn Aead>>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ciphers.keys()).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The four built-in ciphers: AES-128/256-GCM and the two controls.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [Arc<dyn Aead>; 4] = [
            Arc::new(AesGcm::aes128()),
            Arc::new(AesGcm::aes256()),
            Arc::new(XorTag::new()),
            Arc::new(PrfTag::new()),
        ];
        for c in builtins {
            r.register(c).expect("builtin names are distinct");
        }
        r
    }

    pub fn register(&mut self, cipher: Arc<dyn Aead>) -> Result<()> {
        let name = cipher.spec().name.clone();
        if self.ciphers.contains_key(&name) {
            return Err(Error::DuplicateCipher(name));
        }
        self.ciphers.insert(name, cipher);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Aead>> {
        self.ciphers
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownCipher(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ciphers.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ciphers.keys().map(String::as_str)
    }
}
