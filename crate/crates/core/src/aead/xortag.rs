//! Negative control: a deliberately linear "cipher".
//!
//! ciphertext = plaintext XOR key (key repeated), and
//! tag = first 16 bytes of plaintext XOR key XOR the 8-byte PMN, each
//! zero-padded to 16 bytes. The upper half of every tag is the key itself
//! whenever the plaintext fits in 8 bytes of counter, so no PMN policy can
//! make the tag stream look random.

use super::{Aead, CipherSpec};

#[derive(Debug, Clone)]
pub struct XorTag {
    spec: CipherSpec,
}

impl XorTag {
    pub fn new() -> Self {
        Self {
            spec: CipherSpec::new("xortag", 16, 8, 0, 16).expect("valid spec"),
        }
    }

    fn tag(key: &[u8], pmn: &[u8], plaintext: &[u8]) -> [u8; 16] {
        let mut tag = [0u8; 16];
        tag.copy_from_slice(key);
        for (t, p) in tag.iter_mut().zip(plaintext) {
            *t ^= p;
        }
        for (t, n) in tag.iter_mut().zip(pmn) {
            *t ^= n;
        }
        tag
    }

    fn xor_key(key: &[u8], data: &mut [u8]) {
        for (b, k) in data.iter_mut().zip(key.iter().cycle()) {
            *b ^= k;
        }
    }
}

impl Default for XorTag {
    fn default() -> Self {
        Self::new()
    }
}

impl Aead for XorTag {
    fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    fn seal(
        &self,
        key: &[u8],
        _smn: &[u8],
        pmn: &[u8],
        _adata: &[u8],
        plaintext: &[u8],
    ) -> Vec<u8> {
        let mut out = plaintext.to_vec();
        Self::xor_key(key, &mut out);
        out.extend_from_slice(&Self::tag(key, pmn, plaintext));
        out
    }

    fn open(
        &self,
        key: &[u8],
        _smn: &[u8],
        pmn: &[u8],
        _adata: &[u8],
        ciphertext_with_tag: &[u8],
    ) -> Option<Vec<u8>> {
        let split = ciphertext_with_tag.len().checked_sub(16)?;
        let (ct, tag) = ciphertext_with_tag.split_at(split);
        let mut pt = ct.to_vec();
        Self::xor_key(key, &mut pt);
        (Self::tag(key, pmn, &pt)[..] == *tag).then_some(pt)
    }
}
