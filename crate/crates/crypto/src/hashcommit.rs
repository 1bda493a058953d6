//! Salted hash commitments: digest = SHA-256(payload || salt).
//!
//! Used by vote collectors to check a submitted vote code against a ballot
//! without storing the code itself.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::Encode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HashCommitment(#[serde(with = "hex::serde")] pub [u8; 32]);

pub fn commit(payload: &[u8], salt: u64) -> HashCommitment {
    let mut h = Sha256::new();
    h.update(payload);
    h.update(salt.to_be_bytes());
    HashCommitment(h.finalize().into())
}

pub fn matches(commitment: &HashCommitment, payload: &[u8], salt: u64) -> bool {
    commit(payload, salt) == *commitment
}

impl Encode for HashCommitment {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_vector() {
        // Frozen from an independent SHA-256 implementation.
        let code = hex::decode("00112233445566778899aabbccddeeff").unwrap();
        let salt = 0x0123456789abcdef_u64;
        let c = commit(&code, salt);
        assert_eq!(
            hex::encode(c.0),
            "de6722e2f9d981ca00f0186de7a2b3417373c439218e8609d9a5735391090bcb"
        );
        assert!(matches(&c, &code, salt));
    }

    #[test]
    fn different_salt_or_payload_mismatches() {
        let c = commit(b"payload", 1);
        assert!(!matches(&c, b"payload", 2));
        assert!(!matches(&c, b"payloae", 1));
    }
}
