//! Keyed pseudorandom primitives shared by both ends of the channel.
//!
//! Everything here is bit-exact: a decoder written in another language must
//! reproduce [`prf64`] and the [`RandomStream`] draws exactly, otherwise the
//! replayed `r_t` values diverge and decoding degrades to coin flips.

use sha2::{Digest, Sha256};

use crate::config::SecretKey;
use crate::error::{Error, Result};

/// Domain-separation prefix for the shared random stream.
pub const PRG_DOMAIN: &[u8] = b"prg";
/// Domain-separation prefix for vocabulary partition labels.
pub const PARTITION_DOMAIN: &[u8] = b"part";

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// First 8 bytes, big-endian, of `SHA-256(key ‖ data)`.
///
/// ```
/// let a = acf_core::prf64(b"key", b"data").unwrap();
/// let b = acf_core::prf64(b"key", b"data").unwrap();
/// assert_eq!(a, b);
/// assert!(acf_core::prf64(b"", b"data").is_err());
/// ```
pub fn prf64(key: &[u8], data: &[u8]) -> Result<u64> {
    if key.is_empty() {
        return Err(Error::Config("prf key must be non-empty".into()));
    }
    Ok(prf64_parts(key, &[data]))
}

/// `prf64` over the concatenation of `parts`, for callers that already hold
/// a validated non-empty key.
pub(crate) fn prf64_parts(key: &[u8], parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(key);
    for p in parts {
        h.update(p);
    }
    let out = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&out[..8]);
    u64::from_be_bytes(first)
}

/// `prf64(key, prefix ‖ i_be32)` for `i in 0..n`, appended to `out`.
///
/// The key and prefix are absorbed once; each index then costs one
/// finalisation of a cloned hasher.
pub(crate) fn prf64_indexed(key: &[u8], prefix: &[u8], n: u32, out: &mut Vec<u64>) {
    let mut base = Sha256::new();
    base.update(key);
    base.update(prefix);
    out.reserve(n as usize);
    for i in 0..n {
        let mut h = base.clone();
        h.update(i.to_be_bytes());
        let d = h.finalize();
        let mut first = [0u8; 8];
        first.copy_from_slice(&d[..8]);
        out.push(u64::from_be_bytes(first));
    }
}

/// Maps a 64-bit word onto `[0, 1)`.
#[inline]
pub fn unit_interval(x: u64) -> f64 {
    // f64 rounding can land exactly on 1.0 for words close to 2^64.
    let r = x as f64 / TWO_POW_64;
    if r >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        r
    }
}

/// Sequential cursor over the shared stream `r_t = prf64(sk, "prg" ‖ session ‖ t) / 2^64`.
///
/// Cloning a stream at some counter gives an independent cursor that will
/// replay the same values.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: SecretKey,
    session_id: Vec<u8>,
    counter: u64,
}

impl RandomStream {
    pub const MAX_COUNTER: u64 = 1 << 63;

    pub fn new(key: SecretKey, session_id: impl Into<Vec<u8>>) -> Self {
        Self::at(key, session_id, 0)
    }

    pub fn at(key: SecretKey, session_id: impl Into<Vec<u8>>, counter: u64) -> Self {
        RandomStream {
            key,
            session_id: session_id.into(),
            counter,
        }
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn session_id(&self) -> &[u8] {
        &self.session_id
    }

    /// The draw at an arbitrary position, without moving the cursor.
    pub fn peek_at(&self, counter: u64) -> Result<f64> {
        if counter >= Self::MAX_COUNTER {
            return Err(Error::StreamExhausted(counter));
        }
        let word = prf64_parts(
            self.key.as_bytes(),
            &[PRG_DOMAIN, &self.session_id, &counter.to_be_bytes()],
        );
        Ok(unit_interval(word))
    }

    pub fn next_r(&mut self) -> Result<f64> {
        let r = self.peek_at(self.counter)?;
        self.counter += 1;
        Ok(r)
    }
}
