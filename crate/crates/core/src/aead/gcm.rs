//! AES-GCM as specified in NIST SP 800-38D, with 96-bit nonces and full
//! 128-bit tags.

use super::aes::Aes;
use super::{Aead, CipherSpec};

const R: u128 = 0xe1 << 120;

/// Multiplication in GF(2^128) using GCM's reflected bit order: the most
/// significant bit of the big-endian block is the coefficient of x^0.
pub(crate) fn gf_mul(x: u128, y: u128) -> u128 {
    let mut z = 0u128;
    let mut v = y;
    for i in (0..128).rev() {
        let mask = 0u128.wrapping_sub((x >> i) & 1);
        z ^= v & mask;
        let carry = 0u128.wrapping_sub(v & 1);
        v = (v >> 1) ^ (R & carry);
    }
    z
}

struct Ghash {
    h: u128,
    acc: u128,
}

impl Ghash {
    fn new(h: u128) -> Self {
        Self { h, acc: 0 }
    }

    fn update_padded(&mut self, data: &[u8]) {
        for chunk in data.chunks(16) {
            let mut block = [0u8; 16];
            block[..chunk.len()].copy_from_slice(chunk);
            self.acc = gf_mul(self.acc ^ u128::from_be_bytes(block), self.h);
        }
    }

    fn finish(mut self, adata_len: usize, ct_len: usize) -> u128 {
        let lens = ((adata_len as u128 * 8) << 64) | (ct_len as u128 * 8);
        self.acc = gf_mul(self.acc ^ lens, self.h);
        self.acc
    }
}

/// AES-GCM keyed state: the expanded key and hash subkey.
struct GcmKey {
    aes: Aes,
    h: u128,
}

impl GcmKey {
    fn new(key: &[u8]) -> Self {
        let aes = Aes::new(key).expect("key length validated by CipherSpec");
        let h = u128::from_be_bytes(aes.encrypt_block(&[0u8; 16]));
        Self { aes, h }
    }

    fn counter_block(nonce: &[u8], counter: u32) -> [u8; 16] {
        let mut block = [0u8; 16];
        block[..12].copy_from_slice(nonce);
        block[12..].copy_from_slice(&counter.to_be_bytes());
        block
    }

    fn ctr_xor(&self, nonce: &[u8], data: &mut [u8]) {
        for (i, chunk) in data.chunks_mut(16).enumerate() {
            let ks = self
                .aes
                .encrypt_block(&Self::counter_block(nonce, (i as u32).wrapping_add(2)));
            chunk.iter_mut().zip(ks).for_each(|(b, k)| *b ^= k);
        }
    }

    fn tag(&self, nonce: &[u8], adata: &[u8], ct: &[u8]) -> [u8; 16] {
        let mut ghash = Ghash::new(self.h);
        ghash.update_padded(adata);
        ghash.update_padded(ct);
        let s = ghash.finish(adata.len(), ct.len());
        let ek_j0 = u128::from_be_bytes(self.aes.encrypt_block(&Self::counter_block(nonce, 1)));
        (s ^ ek_j0).to_be_bytes()
    }
}

/// AES-GCM with a 12-byte public message number and 16-byte tag.
#[derive(Debug, Clone)]
pub struct AesGcm {
    spec: CipherSpec,
}

impl AesGcm {
    pub fn aes128() -> Self {
        Self {
            spec: CipherSpec::new("aes128gcm", 16, 12, 0, 16).expect("valid spec"),
        }
    }

    pub fn aes256() -> Self {
        Self {
            spec: CipherSpec::new("aes256gcm", 32, 12, 0, 16).expect("valid spec"),
        }
    }
}

impl Aead for AesGcm {
    fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    fn seal(&self, key: &[u8], _smn: &[u8], pmn: &[u8], adata: &[u8], plaintext: &[u8]) -> Vec<u8> {
        let gk = GcmKey::new(key);
        let mut out = Vec::with_capacity(plaintext.len() + 16);
        out.extend_from_slice(plaintext);
        gk.ctr_xor(pmn, &mut out);
        let tag = gk.tag(pmn, adata, &out);
        out.extend_from_slice(&tag);
        out
    }

    fn open(
        &self,
        key: &[u8],
        _smn: &[u8],
        pmn: &[u8],
        adata: &[u8],
        ciphertext_with_tag: &[u8],
    ) -> Option<Vec<u8>> {
        let split = ciphertext_with_tag.len().checked_sub(16)?;
        let (ct, tag) = ciphertext_with_tag.split_at(split);
        let gk = GcmKey::new(key);
        let expected = gk.tag(pmn, adata, ct);
        let diff = expected
            .iter()
            .zip(tag)
            .fold(0u8, |acc, (a, b)| acc | (a ^ b));
        if diff != 0 {
            return None;
        }
        let mut pt = ct.to_vec();
        gk.ctr_xor(pmn, &mut pt);
        Some(pt)
    }
}
