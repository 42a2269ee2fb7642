//! Positive control: a keyed sponge over Keccak-f[1600].
//!
//! The keystream is squeezed from (key, smn, pmn) and the tag from
//! (key, smn, pmn, adata, plaintext). Every field is length-prefixed, so the
//! tag behaves as a PRF of all five inputs and any single-bit change in any
//! of them re-randomizes it.

use super::{Aead, CipherSpec};

const RATE: usize = 136;
const DOMAIN_KEYSTREAM: u8 = 0x01;
const DOMAIN_TAG: u8 = 0x02;

struct Sponge {
    state: [u64; 25],
    pos: usize,
}

impl Sponge {
    fn new() -> Self {
        Self {
            state: [0; 25],
            pos: 0,
        }
    }

    fn xor_byte(&mut self, idx: usize, b: u8) {
        self.state[idx / 8] ^= (b as u64) << (8 * (idx % 8));
    }

    fn absorb(&mut self, data: &[u8]) {
        for &b in data {
            self.xor_byte(self.pos, b);
            self.pos += 1;
            if self.pos == RATE {
                keccak::f1600(&mut self.state);
                self.pos = 0;
            }
        }
    }

    fn absorb_field(&mut self, field: &[u8]) {
        self.absorb(&(field.len() as u64).to_le_bytes());
        self.absorb(field);
    }

    fn squeeze(mut self, out: &mut [u8]) {
        self.xor_byte(self.pos, 0x06);
        self.xor_byte(RATE - 1, 0x80);
        keccak::f1600(&mut self.state);
        let mut pos = 0;
        for b in out.iter_mut() {
            if pos == RATE {
                keccak::f1600(&mut self.state);
                pos = 0;
            }
            *b = (self.state[pos / 8] >> (8 * (pos % 8))) as u8;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrfTag {
    spec: CipherSpec,
}

impl PrfTag {
    pub fn new() -> Self {
        Self {
            spec: CipherSpec::new("prftag", 16, 16, 0, 16).expect("valid spec"),
        }
    }

    fn keystream(key: &[u8], smn: &[u8], pmn: &[u8], len: usize) -> Vec<u8> {
        let mut sponge = Sponge::new();
        sponge.absorb(&[DOMAIN_KEYSTREAM]);
        for field in [key, smn, pmn] {
            sponge.absorb_field(field);
        }
        let mut out = vec![0u8; len];
        sponge.squeeze(&mut out);
        out
    }

    fn tag(key: &[u8], smn: &[u8], pmn: &[u8], adata: &[u8], plaintext: &[u8]) -> [u8; 16] {
        let mut sponge = Sponge::new();
        sponge.absorb(&[DOMAIN_TAG]);
        for field in [key, smn, pmn, adata, plaintext] {
            sponge.absorb_field(field);
        }
        let mut out = [0u8; 16];
        sponge.squeeze(&mut out);
        out
    }
}

impl Default for PrfTag {
    fn default() -> Self {
        Self::new()
    }
}

impl Aead for PrfTag {
    fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    fn seal(&self, key: &[u8], smn: &[u8], pmn: &[u8], adata: &[u8], plaintext: &[u8]) -> Vec<u8> {
        let ks = Self::keystream(key, smn, pmn, plaintext.len());
        let mut out: Vec<u8> = plaintext.iter().zip(&ks).map(|(p, k)| p ^ k).collect();
        out.extend_from_slice(&Self::tag(key, smn, pmn, adata, plaintext));
        out
    }

    fn open(
        &self,
        key: &[u8],
        smn: &[u8],
        pmn: &[u8],
        adata: &[u8],
        ciphertext_with_tag: &[u8],
    ) -> Option<Vec<u8>> {
        let split = ciphertext_with_tag.len().checked_sub(16)?;
        let (ct, tag) = ciphertext_with_tag.split_at(split);
        let ks = Self::keystream(key, smn, pmn, ct.len());
        let pt: Vec<u8> = ct.iter().zip(&ks).map(|(c, k)| c ^ k).collect();
        let expected = Self::tag(key, smn, pmn, adata, &pt);
        let diff = expected
            .iter()
            .zip(tag)
            .fold(0u8, |acc, (a, b)| acc | (a ^ b));
        (diff == 0).then_some(pt)
    }
}
