//! Additively homomorphic vector commitments: lifted ElGamal over
//! ristretto255, one ciphertext per coordinate.
//!
//! Com(v; r) = (g^r, h^r g^v) is perfectly binding, computationally hiding
//! while nobody knows log_g h, and componentwise multiplication adds the
//! committed vectors. Ballot options are committed as unit vectors and the
//! election tally is one homomorphic fold plus a bounded discrete log.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::group::{bounded_dlog, identity, mul_fixed, random_scalar};
use crate::CryptoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitKey {
    pub g: RistrettoPoint,
    pub h: RistrettoPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ciphertext {
    pub a: RistrettoPoint,
    pub b: RistrettoPoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorCommitment(pub Vec<Ciphertext>);

/// The committed vector together with the per-coordinate randomness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorOpening {
    pub values: Vec<u64>,
    pub randomness: Vec<Scalar>,
}

pub fn commit_coordinate(key: &CommitKey, value: u64, r: &Scalar) -> Ciphertext {
    let a = mul_fixed(&key.g, r);
    let mut b = mul_fixed(&key.h, r);
    match value {
        0 => {}
        1 => b += key.g,
        v => b += mul_fixed(&key.g, &Scalar::from(v)),
    }
    Ciphertext { a, b }
}

pub fn commit_vector<R: RngCore>(
    key: &CommitKey,
    values: &[u64],
    rng: &mut R,
) -> (VectorCommitment, VectorOpening) {
    let randomness: Vec<Scalar> = values.iter().map(|_| random_scalar(rng)).collect();
    let cipher = values
        .iter()
        .zip(&randomness)
        .map(|(v, r)| commit_coordinate(key, *v, r))
        .collect();
    (
        VectorCommitment(cipher),
        VectorOpening { values: values.to_vec(), randomness },
    )
}

pub fn commit_unit_vector<R: RngCore>(
    key: &CommitKey,
    m: usize,
    which: usize,
    rng: &mut R,
) -> (VectorCommitment, VectorOpening) {
    assert!(which < m, "unit index out of range");
    let values: Vec<u64> = (0..m).map(|i| u64::from(i == which)).collect();
    commit_vector(key, &values, rng)
}

impl VectorCommitment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise product, i.e. commitment to the coordinate-wise sum.
    pub fn add(&self, other: &VectorCommitment) -> Result<VectorCommitment, CryptoError> {
        if self.len() != other.len() {
            return Err(CryptoError::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(VectorCommitment(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| Ciphertext { a: x.a + y.a, b: x.b + y.b })
                .collect(),
        ))
    }
}

/// Commitment to the zero vector with zero randomness: the fold identity.
pub fn identity_commitment(m: usize) -> VectorCommitment {
    VectorCommitment(vec![Ciphertext { a: identity(), b: identity() }; m])
}

pub fn fold(commitments: &[&VectorCommitment], m: usize) -> Result<VectorCommitment, CryptoError> {
    let mut acc = identity_commitment(m);
    for c in commitments {
        acc = acc.add(c)?;
    }
    Ok(acc)
}

/// Checks that `opening` is exactly the witness behind `commitment`.
pub fn verify_opening(
    key: &CommitKey,
    commitment: &VectorCommitment,
    opening: &VectorOpening,
) -> bool {
    commitment.len() == opening.values.len()
        && commitment.len() == opening.randomness.len()
        && commitment
            .0
            .iter()
            .zip(opening.values.iter().zip(&opening.randomness))
            .all(|(c, (v, r))| *c == commit_coordinate(key, *v, r))
}

/// Recovers the committed vector given only the randomness, searching each
/// exponent in [0, max_value].
pub fn open_with_randomness(
    key: &CommitKey,
    commitment: &VectorCommitment,
    randomness: &[Scalar],
    max_value: u64,
) -> Result<Vec<u64>, CryptoError> {
    if commitment.len() != randomness.len() {
        return Err(CryptoError::DimensionMismatch {
            expected: commitment.len(),
            got: randomness.len(),
        });
    }
    commitment
        .0
        .iter()
        .zip(randomness)
        .map(|(c, r)| {
            if c.a != mul_fixed(&key.g, r) {
                return Err(CryptoError::BadOpening);
            }
            bounded_dlog(&key.g, &(c.b - mul_fixed(&key.h, r)), max_value)
        })
        .collect()
}

impl Encode for Ciphertext {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.a.encode_into(out);
        self.b.encode_into(out);
    }
}

impl Encode for VectorCommitment {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}
