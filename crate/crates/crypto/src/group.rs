//! The prime-order group used by commitments, proofs and secret sharing:
//! ristretto255 (order ~2^252, 128-bit security).

use std::sync::{Arc, Mutex};

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoBasepointTable, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::RngCore;
use sha2::{Digest, Sha512};

use crate::codec::Encode;
use crate::CryptoError;

/// Number of challenge bits that fit in one scalar block, floor(log2 q) - 1.
pub const CHALLENGE_BLOCK_BITS: usize = 251;

pub fn g() -> RistrettoPoint {
    RISTRETTO_BASEPOINT_POINT
}

pub fn identity() -> RistrettoPoint {
    RistrettoPoint::identity()
}

/// Derives a group element nobody knows the discrete log of.
pub fn hash_to_group(label: &str, context: &[u8]) -> RistrettoPoint {
    let mut h = Sha512::new();
    h.update(b"agora-hash-to-group");
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    h.update((context.len() as u32).to_be_bytes());
    h.update(context);
    let wide: [u8; 64] = h.finalize().into();
    RistrettoPoint::from_uniform_bytes(&wide)
}

pub fn random_scalar<R: RngCore>(rng: &mut R) -> Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    Scalar::from_bytes_mod_order_wide(&wide)
}

/// Fixed-base multiplication. The handful of bases an election reuses
/// millions of times (the commitment pair, the Pedersen pair) get radix-16
/// tables built on first sight and cached; the canonical basepoint uses the
/// library's static table. A base outside the cache still computes
/// correctly, it just pays the generic price once while its table builds.
pub fn mul_fixed(base: &RistrettoPoint, s: &Scalar) -> RistrettoPoint {
    if *base == RISTRETTO_BASEPOINT_POINT {
        return RISTRETTO_BASEPOINT_TABLE * s;
    }
    static CACHE: Mutex<Vec<(RistrettoPoint, Arc<RistrettoBasepointTable>)>> =
        Mutex::new(Vec::new());
    let table = {
        let mut cache = CACHE.lock().unwrap();
        match cache.iter().position(|(p, _)| p == base) {
            Some(i) => {
                let hit = cache.remove(i);
                let t = hit.1.clone();
                cache.push(hit);
                t
            }
            None => {
                let t = Arc::new(RistrettoBasepointTable::create(base));
                if cache.len() >= 8 {
                    cache.remove(0);
                }
                cache.push((*base, t.clone()));
                t
            }
        }
    };
    &*table * s
}

pub fn scalar_to_be_bytes(s: &Scalar) -> [u8; 32] {
    let mut b = s.to_bytes();
    b.reverse();
    b
}

pub fn scalar_from_be_bytes(bytes: &[u8; 32]) -> Result<Scalar, CryptoError> {
    let mut le = *bytes;
    le.reverse();
    Option::<Scalar>::from(Scalar::from_canonical_bytes(le)).ok_or(CryptoError::BadScalar)
}

/// Reads back a small integer that was embedded into a scalar, failing if
/// the scalar does not fit the claimed width.
pub fn scalar_to_u64(s: &Scalar) -> Result<u64, CryptoError> {
    let b = s.to_bytes();
    if b[8..].iter().any(|&x| x != 0) {
        return Err(CryptoError::BadScalar);
    }
    Ok(u64::from_le_bytes(b[..8].try_into().unwrap()))
}

pub fn scalar_to_u128(s: &Scalar) -> Result<u128, CryptoError> {
    let b = s.to_bytes();
    if b[16..].iter().any(|&x| x != 0) {
        return Err(CryptoError::BadScalar);
    }
    Ok(u128::from_le_bytes(b[..16].try_into().unwrap()))
}

pub fn point_from_bytes(bytes: &[u8; 32]) -> Result<RistrettoPoint, CryptoError> {
    CompressedRistretto(*bytes)
        .decompress()
        .ok_or(CryptoError::BadPoint)
}

/// Finds x in [0, max] with base^x == target by linear scan. Tallies are
/// bounded by the number of counted ballots, so the scan is tiny.
pub fn bounded_dlog(
    base: &RistrettoPoint,
    target: &RistrettoPoint,
    max: u64,
) -> Result<u64, CryptoError> {
    let mut acc = RistrettoPoint::identity();
    for x in 0..=max {
        if acc == *target {
            return Ok(x);
        }
        acc += base;
    }
    Err(CryptoError::DlogOutOfRange(max))
}

impl Encode for Scalar {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&scalar_to_be_bytes(self));
    }
}

impl Encode for RistrettoPoint {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.compress().as_bytes());
    }
}
