//! Signatures (Ed25519). Deterministic signing keeps simulation replays
//! byte-identical.

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::CryptoError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyPair {
    key: SigningKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey(VerifyingKey);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature(ed25519_dalek::Signature);

impl KeyPair {
    pub fn generate<R: RngCore>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        KeyPair { key: SigningKey::from_bytes(&seed) }
    }

    pub fn public(&self) -> PublicKey {
        PublicKey(self.key.verifying_key())
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.key.sign(message))
    }
}

impl PublicKey {
    pub fn verify(&self, message: &[u8], sig: &Signature) -> Result<(), CryptoError> {
        self.0
            .verify(message, &sig.0)
            .map_err(|_| CryptoError::BadSignature)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }
}

impl PartialOrd for PublicKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PublicKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_bytes().cmp(&other.to_bytes())
    }
}

impl Encode for PublicKey {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bytes());
    }
}

impl Encode for Signature {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_bytes());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prf;

    #[test]
    fn sign_verify_roundtrip() {
        let kp = KeyPair::generate(&mut Prf::from_u64(3).rng());
        let sig = kp.sign(b"hello");
        assert!(kp.public().verify(b"hello", &sig).is_ok());
        assert_eq!(
            kp.public().verify(b"tampered", &sig),
            Err(CryptoError::BadSignature)
        );
    }

    #[test]
    fn wrong_key_rejects() {
        let a = KeyPair::generate(&mut Prf::from_u64(4).rng());
        let b = KeyPair::generate(&mut Prf::from_u64(5).rng());
        let sig = a.sign(b"msg");
        assert!(b.public().verify(b"msg", &sig).is_err());
    }

    #[test]
    fn signing_is_deterministic() {
        let kp = KeyPair::generate(&mut Prf::from_u64(6).rng());
        assert_eq!(kp.sign(b"m").encoded(), kp.sign(b"m").encoded());
    }
}
