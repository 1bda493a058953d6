//! Threshold secret sharing over the ristretto255 scalar field.
//!
//! Two flavors are used by the protocol:
//! - plain Shamir dealings whose shares are authenticated by a dealer
//!   signature at the protocol layer (receipt and master-key shares), and
//! - Pedersen verifiable sharing for trustee opening shares, where every
//!   share can be checked against published coefficient commitments and
//!   shares of different secrets combine linearly.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::group::{mul_fixed, random_scalar};
use crate::CryptoError;

/// Evaluates f at x=index where coeffs[0] is the free term.
fn poly_eval(coeffs: &[Scalar], index: u32) -> Scalar {
    let x = Scalar::from(index as u64);
    let mut acc = Scalar::ZERO;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn random_poly<R: RngCore>(secret: Scalar, k: usize, rng: &mut R) -> Vec<Scalar> {
    let mut coeffs = Vec::with_capacity(k);
    coeffs.push(secret);
    for _ in 1..k {
        coeffs.push(random_scalar(rng));
    }
    coeffs
}

fn check_shares(indices: &[u32], k: usize) -> Result<(), CryptoError> {
    if indices.len() < k {
        return Err(CryptoError::NotEnoughShares { have: indices.len(), need: k });
    }
    for (i, idx) in indices.iter().enumerate() {
        if *idx == 0 {
            return Err(CryptoError::BadShare(0));
        }
        if indices[..i].contains(idx) {
            return Err(CryptoError::DuplicateShareIndex(*idx));
        }
    }
    Ok(())
}

/// Lagrange coefficients at x=0 for the given share indices.
fn lagrange_at_zero(indices: &[u32]) -> Vec<Scalar> {
    indices
        .iter()
        .map(|&i| {
            let xi = Scalar::from(i as u64);
            let mut num = Scalar::ONE;
            let mut den = Scalar::ONE;
            for &j in indices {
                if j != i {
                    let xj = Scalar::from(j as u64);
                    num *= xj;
                    den *= xj - xi;
                }
            }
            num * den.invert()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub index: u32,
    pub value: Scalar,
}

/// Deals shares of `secret` to indices 1..=n with threshold k.
pub fn deal<R: RngCore>(secret: Scalar, k: usize, n: usize, rng: &mut R) -> Vec<Share> {
    assert!(k >= 1 && n >= k, "invalid sharing parameters");
    let coeffs = random_poly(secret, k, rng);
    (1..=n as u32)
        .map(|index| Share { index, value: poly_eval(&coeffs, index) })
        .collect()
}

/// Reconstructs the secret from at least k distinct shares.
pub fn reconstruct(shares: &[Share], k: usize) -> Result<Scalar, CryptoError> {
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    check_shares(&indices, k)?;
    let lambda = lagrange_at_zero(&indices);
    Ok(shares
        .iter()
        .zip(lambda)
        .map(|(s, l)| s.value * l)
        .sum())
}

/// Lagrange coefficients at x=0 for these share indices, validated once and
/// reusable across every reconstruction from the same holders: the secret is
/// the coefficient-weighted sum of the share values.
pub fn lagrange_coefficients(indices: &[u32], k: usize) -> Result<Vec<Scalar>, CryptoError> {
    check_shares(indices, k)?;
    Ok(lagrange_at_zero(indices))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedersenParams {
    pub g: RistrettoPoint,
    pub h: RistrettoPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedersenShare {
    pub index: u32,
    pub value: Scalar,
    pub blind: Scalar,
}

/// Per-coefficient commitments C_j = g^{f_j} h^{b_j}; index 0 commits the
/// secret itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedersenCommitments(pub Vec<RistrettoPoint>);

#[derive(Clone, Debug)]
pub struct PedersenDealing {
    pub commitments: PedersenCommitments,
    pub shares: Vec<PedersenShare>,
}

pub fn pedersen_deal<R: RngCore>(
    params: &PedersenParams,
    secret: Scalar,
    k: usize,
    n: usize,
    rng: &mut R,
) -> PedersenDealing {
    assert!(k >= 1 && n >= k, "invalid sharing parameters");
    let f = random_poly(secret, k, rng);
    let b = random_poly(random_scalar(rng), k, rng);
    let commitments = PedersenCommitments(
        f.iter()
            .zip(&b)
            .map(|(fj, bj)| mul_fixed(&params.g, fj) + mul_fixed(&params.h, bj))
            .collect(),
    );
    let shares = (1..=n as u32)
        .map(|index| PedersenShare {
            index,
            value: poly_eval(&f, index),
            blind: poly_eval(&b, index),
        })
        .collect();
    PedersenDealing { commitments, shares }
}

pub fn pedersen_verify(
    params: &PedersenParams,
    commitments: &PedersenCommitments,
    share: &PedersenShare,
) -> bool {
    if share.index == 0 || commitments.0.is_empty() {
        return false;
    }
    let lhs = mul_fixed(&params.g, &share.value) + mul_fixed(&params.h, &share.blind);
    let x = Scalar::from(share.index as u64);
    let mut rhs = crate::group::identity();
    for c in commitments.0.iter().rev() {
        rhs = rhs * x + c;
    }
    lhs == rhs
}

/// Checks many (commitments, share) pairs in one multiscalar multiplication,
/// folding each verification equation in with an independent 128-bit weight
/// drawn from `seed`. A passing batch implies every pair passes
/// `pedersen_verify` except with probability 2^-128 per bad pair, provided
/// the seed is bound to data the dealer fixed before learning the weights.
pub fn pedersen_verify_batch_with_seed(
    seed: &[u8; 32],
    params: &PedersenParams,
    items: &[(&PedersenCommitments, &PedersenShare)],
) -> bool {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let mut scalars: Vec<Scalar> = vec![Scalar::ZERO, Scalar::ZERO];
    let mut points: Vec<RistrettoPoint> = vec![params.g, params.h];
    for (commitments, share) in items {
        if share.index == 0 || commitments.0.is_empty() {
            return false;
        }
        let mut buf = [0u8; 16];
        rng.fill_bytes(&mut buf);
        let w = Scalar::from(u128::from_le_bytes(buf));
        scalars[0] += w * share.value;
        scalars[1] += w * share.blind;
        let x = Scalar::from(share.index as u64);
        let mut xj = Scalar::ONE;
        for c in &commitments.0 {
            scalars.push(-(w * xj));
            points.push(*c);
            xj *= x;
        }
    }
    RistrettoPoint::vartime_multiscalar_mul(scalars, points) == RistrettoPoint::identity()
}

pub fn pedersen_reconstruct(
    shares: &[PedersenShare],
    k: usize,
) -> Result<(Scalar, Scalar), CryptoError> {
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    check_shares(&indices, k)?;
    let lambda = lagrange_at_zero(&indices);
    let mut secret = Scalar::ZERO;
    let mut blind = Scalar::ZERO;
    for (s, l) in shares.iter().zip(lambda) {
        secret += s.value * l;
        blind += s.blind * l;
    }
    Ok((secret, blind))
}

/// Coefficient-wise product of commitments: the verification data for the
/// sum of the underlying secrets.
pub fn pedersen_combine(parts: &[&PedersenCommitments]) -> PedersenCommitments {
    assert!(!parts.is_empty());
    let k = parts[0].0.len();
    let mut acc = vec![crate::group::identity(); k];
    for p in parts {
        assert_eq!(p.0.len(), k, "mismatched commitment degree");
        for (a, c) in acc.iter_mut().zip(&p.0) {
            *a += c;
        }
    }
    PedersenCommitments(acc)
}

impl Encode for Share {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.index.encode_into(out);
        self.value.encode_into(out);
    }
}

impl Encode for PedersenShare {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.index.encode_into(out);
        self.value.encode_into(out);
        self.blind.encode_into(out);
    }
}

impl Encode for PedersenCommitments {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

/// Share-wise sum for one holder across many dealings of the same scheme.
pub fn pedersen_share_sum(shares: &[&PedersenShare]) -> PedersenShare {
    assert!(!shares.is_empty());
    let index = shares[0].index;
    let mut value = Scalar::ZERO;
    let mut blind = Scalar::ZERO;
    for s in shares {
        assert_eq!(s.index, index, "mixing share indices");
        value += s.value;
        blind += s.blind;
    }
    PedersenShare { index, value, blind }
}
