//! Sigma proofs that a vector commitment encodes a unit vector: every
//! coordinate commits 0 or 1 (disjunctive Chaum-Pedersen) and the
//! coordinates sum to 1.
//!
//! The verifier challenge is not chosen by the prover or a hash; it is the
//! string of voter coin flips collected during the election. A challenge of
//! n bits is split into kappa = ceil(n/251) blocks, each interpreted as a
//! scalar, and the proof carries an independent transcript per block, which
//! multiplies the soundness error down to 2^-n at n honest coins.
//!
//! Proving is split in two: `prove_first` runs at setup time and outputs the
//! public first moves plus a `ProverState` of secret scalars; the final move
//! for challenge block c is an affine function of those scalars, so the state
//! can be secret-shared and the final move reconstructed later from shares
//! without anyone learning the committed vector (see `evaluate_state`).

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::commit::{CommitKey, VectorCommitment, VectorOpening};
use crate::group::{mul_fixed, random_scalar, CHALLENGE_BLOCK_BITS};
use crate::CryptoError;

/// Number of challenge blocks for a coin string of `nbits` bits.
pub fn kappa_for_bits(nbits: usize) -> usize {
    std::cmp::max(1, nbits.div_ceil(CHALLENGE_BLOCK_BITS))
}

/// Packs coin bits into challenge scalars, one per 251-bit block, low bit
/// first. Missing trailing bits are zero.
pub fn challenge_blocks(bits: &[bool]) -> Vec<Scalar> {
    let kappa = kappa_for_bits(bits.len());
    (0..kappa)
        .map(|blk| {
            let mut le = [0u8; 32];
            for (t, bit) in bits
                .iter()
                .skip(blk * CHALLENGE_BLOCK_BITS)
                .take(CHALLENGE_BLOCK_BITS)
                .enumerate()
            {
                if *bit {
                    le[t / 8] |= 1 << (t % 8);
                }
            }
            Scalar::from_canonical_bytes(le).expect("251-bit value is canonical")
        })
        .collect()
}

/// First move of one disjunctive proof branch: (t_a, t_b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchFirst {
    pub ta: RistrettoPoint,
    pub tb: RistrettoPoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFirstMove {
    /// Per coordinate: branch 0 ("commits 0") and branch 1 ("commits 1").
    pub coords: Vec<[BranchFirst; 2]>,
    /// First move of the proof that the coordinates sum to 1.
    pub sum: BranchFirst,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofFirstMoves {
    pub blocks: Vec<BlockFirstMove>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordFinal {
    pub c0: Scalar,
    pub z0: Scalar,
    pub c1: Scalar,
    pub z1: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFinalMove {
    pub coords: Vec<CoordFinal>,
    pub sum_z: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofFinalMoves {
    pub blocks: Vec<BlockFinalMove>,
}

/// Secret prover state: coefficients of the affine maps challenge -> final
/// move. Layout per block, per coordinate, per branch: (alpha, beta, gamma,
/// eta) meaning c_b = alpha + beta*c and z_b = gamma + eta*c, then (gamma,
/// eta) for the sum proof's z.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverState {
    pub m: usize,
    pub scalars: Vec<Scalar>,
}

pub const SCALARS_PER_COORD: usize = 8;

pub fn state_scalars_per_block(m: usize) -> usize {
    m * SCALARS_PER_COORD + 2
}

pub fn state_scalar_count(m: usize, kappa: usize) -> usize {
    kappa * state_scalars_per_block(m)
}

pub fn finals_per_block(m: usize) -> usize {
    m * 4 + 1
}

/// Produces first moves for `kappa` blocks. The opening is taken at face
/// value; a dishonest opening yields transcripts that fail verification,
/// which is exactly the soundness experiment.
pub fn prove_first<R: RngCore>(
    key: &CommitKey,
    commitment: &VectorCommitment,
    opening: &VectorOpening,
    kappa: usize,
    rng: &mut R,
) -> (ProofFirstMoves, ProverState) {
    let m = commitment.len();
    assert_eq!(opening.values.len(), m);
    assert_eq!(opening.randomness.len(), m);
    assert!(kappa >= 1);
    let mut blocks = Vec::with_capacity(kappa);
    let mut scalars = Vec::with_capacity(state_scalar_count(m, kappa));
    for _ in 0..kappa {
        let mut coords = Vec::with_capacity(m);
        for j in 0..m {
            let r = opening.randomness[j];
            let real = usize::from(opening.values[j] != 0);
            let sim = 1 - real;
            let c_sim = random_scalar(rng);
            let z_sim = random_scalar(rng);
            let w = random_scalar(rng);
            // Branch b claims (cipher.a, cipher.b - b*g) is a DH pair. The
            // simulated first move is z*g - c*a and z*h - c*(b - sim*g);
            // substituting a = r*g and b = r*h + v*g turns both into
            // fixed-base products, which is much cheaper than multiplying
            // by the cipher points.
            let u = z_sim - c_sim * r;
            let d = c_sim * (Scalar::from(opening.values[j]) - Scalar::from(sim as u64));
            let t_sim = BranchFirst {
                ta: mul_fixed(&key.g, &u),
                tb: mul_fixed(&key.h, &u) - mul_fixed(&key.g, &d),
            };
            let t_real = BranchFirst { ta: mul_fixed(&key.g, &w), tb: mul_fixed(&key.h, &w) };
            let mut pair = [t_sim; 2];
            pair[real] = t_real;
            pair[sim] = t_sim;
            coords.push(pair);
            // Affine maps: simulated branch is constant, real branch gets
            // the remainder challenge c - c_sim.
            let mut per_branch = [[Scalar::ZERO; 4]; 2];
            per_branch[sim] = [c_sim, Scalar::ZERO, z_sim, Scalar::ZERO];
            per_branch[real] = [-c_sim, Scalar::ONE, w - c_sim * r, r];
            for b in per_branch {
                scalars.extend_from_slice(&b);
            }
        }
        let w_sum = random_scalar(rng);
        blocks.push(BlockFirstMove {
            coords,
            sum: BranchFirst {
                ta: mul_fixed(&key.g, &w_sum),
                tb: mul_fixed(&key.h, &w_sum),
            },
        });
        let r_total: Scalar = opening.randomness.iter().sum();
        scalars.push(w_sum);
        scalars.push(r_total);
    }
    (ProofFirstMoves { blocks }, ProverState { m, scalars })
}

/// Evaluates the affine maps at the challenge blocks. Works identically on
/// the master state and on any single holder's Shamir shares of it, which is
/// what lets trustees post final-move shares.
pub fn evaluate_state(
    m: usize,
    state_scalars: &[Scalar],
    challenge: &[Scalar],
) -> Result<Vec<Scalar>, CryptoError> {
    let kappa = challenge.len();
    let expected = state_scalar_count(m, kappa);
    if state_scalars.len() != expected {
        return Err(CryptoError::DimensionMismatch {
            expected,
            got: state_scalars.len(),
        });
    }
    let per_block = state_scalars_per_block(m);
    let mut out = Vec::with_capacity(kappa * finals_per_block(m));
    for (blk, c) in challenge.iter().enumerate() {
        let base = blk * per_block;
        for j in 0..m {
            let cb = base + j * SCALARS_PER_COORD;
            // branch 0 then branch 1: (alpha + beta*c, gamma + eta*c)
            out.push(state_scalars[cb] + state_scalars[cb + 1] * c);
            out.push(state_scalars[cb + 2] + state_scalars[cb + 3] * c);
            out.push(state_scalars[cb + 4] + state_scalars[cb + 5] * c);
            out.push(state_scalars[cb + 6] + state_scalars[cb + 7] * c);
        }
        let sb = base + m * SCALARS_PER_COORD;
        out.push(state_scalars[sb] + state_scalars[sb + 1] * c);
    }
    Ok(out)
}

/// Reassembles evaluated scalars (master or reconstructed from shares) into
/// structured final moves.
pub fn final_moves_from_scalars(
    m: usize,
    kappa: usize,
    scalars: &[Scalar],
) -> Result<ProofFinalMoves, CryptoError> {
    let per_block = finals_per_block(m);
    if scalars.len() != kappa * per_block {
        return Err(CryptoError::DimensionMismatch {
            expected: kappa * per_block,
            got: scalars.len(),
        });
    }
    let blocks = (0..kappa)
        .map(|blk| {
            let base = blk * per_block;
            let coords = (0..m)
                .map(|j| {
                    let cb = base + j * 4;
                    CoordFinal {
                        c0: scalars[cb],
                        z0: scalars[cb + 1],
                        c1: scalars[cb + 2],
                        z1: scalars[cb + 3],
                    }
                })
                .collect();
            BlockFinalMove { coords, sum_z: scalars[base + m * 4] }
        })
        .collect();
    Ok(ProofFinalMoves { blocks })
}

pub fn finalize(
    state: &ProverState,
    challenge: &[Scalar],
) -> Result<ProofFinalMoves, CryptoError> {
    let evaluated = evaluate_state(state.m, &state.scalars, challenge)?;
    final_moves_from_scalars(state.m, challenge.len(), &evaluated)
}

fn verify_branch(
    key: &CommitKey,
    a: &RistrettoPoint,
    b: &RistrettoPoint,
    t: &BranchFirst,
    c: &Scalar,
    z: &Scalar,
) -> bool {
    RistrettoPoint::vartime_multiscalar_mul([*z, -*c], [key.g, *a]) == t.ta
        && RistrettoPoint::vartime_multiscalar_mul([*z, -*c], [key.h, *b]) == t.tb
}

/// Verifies every block of a unit-vector proof against the challenge.
pub fn verify(
    key: &CommitKey,
    commitment: &VectorCommitment,
    first: &ProofFirstMoves,
    challenge: &[Scalar],
    finals: &ProofFinalMoves,
) -> bool {
    let m = commitment.len();
    let kappa = challenge.len();
    if kappa == 0
        || first.blocks.len() != kappa
        || finals.blocks.len() != kappa
        || m == 0
    {
        return false;
    }
    let sum_a: RistrettoPoint = commitment.0.iter().map(|c| c.a).sum();
    let sum_b: RistrettoPoint =
        commitment.0.iter().map(|c| c.b).sum::<RistrettoPoint>() - key.g;
    for ((fm, c), fin) in first.blocks.iter().zip(challenge).zip(&finals.blocks) {
        if fm.coords.len() != m || fin.coords.len() != m {
            return false;
        }
        for (j, (t, f)) in fm.coords.iter().zip(&fin.coords).enumerate() {
            let cipher = &commitment.0[j];
            if f.c0 + f.c1 != *c {
                return false;
            }
            if !verify_branch(key, &cipher.a, &cipher.b, &t[0], &f.c0, &f.z0) {
                return false;
            }
            let b1 = cipher.b - key.g;
            if !verify_branch(key, &cipher.a, &b1, &t[1], &f.c1, &f.z1) {
                return false;
            }
        }
        if !verify_branch(key, &sum_a, &sum_b, &fm.sum, c, &fin.sum_z) {
            return false;
        }
    }
    true
}

/// One proof in a batch: the commitment it speaks about plus both transcript
/// halves. All proofs in a batch share one challenge.
#[derive(Clone, Copy)]
pub struct ProofToVerify<'a> {
    pub commitment: &'a VectorCommitment,
    pub first: &'a ProofFirstMoves,
    pub finals: &'a ProofFinalMoves,
}

/// Checks a batch of unit-vector proofs in one multiscalar multiplication:
/// every verification equation is folded in with an independent 128-bit
/// weight, so a batch that passes here passes `verify` proof by proof except
/// with probability 2^-128 per forged equation.
///
/// The weights are drawn from `seed`, so the check is deterministic. The
/// caller must derive the seed from data fixed before the prover could see
/// it, i.e. bind it to the published transcripts; weights predictable at
/// proving time would let a cheat in one equation cancel a cheat in another.
pub fn verify_many_with_seed(
    seed: &[u8; 32],
    key: &CommitKey,
    items: &[ProofToVerify<'_>],
    challenge: &[Scalar],
) -> bool {
    let kappa = challenge.len();
    if kappa == 0 {
        return false;
    }
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let mut weight = || {
        let mut buf = [0u8; 16];
        rng.fill_bytes(&mut buf);
        Scalar::from(u128::from_le_bytes(buf))
    };
    let mut scalars: Vec<Scalar> = vec![Scalar::ZERO, Scalar::ZERO];
    let mut points: Vec<RistrettoPoint> = vec![key.g, key.h];
    let mut coef_g = Scalar::ZERO;
    let mut coef_h = Scalar::ZERO;
    for item in items {
        let m = item.commitment.len();
        if m == 0 || item.first.blocks.len() != kappa || item.finals.blocks.len() != kappa {
            return false;
        }
        let cipher_base = points.len();
        for cipher in &item.commitment.0 {
            points.push(cipher.a);
            points.push(cipher.b);
            scalars.push(Scalar::ZERO);
            scalars.push(Scalar::ZERO);
        }
        for ((fm, c), fin) in item.first.blocks.iter().zip(challenge).zip(&item.finals.blocks) {
            if fm.coords.len() != m || fin.coords.len() != m {
                return false;
            }
            for (j, (t, f)) in fm.coords.iter().zip(&fin.coords).enumerate() {
                if f.c0 + f.c1 != *c {
                    return false;
                }
                let (u1, u2, u3, u4) = (weight(), weight(), weight(), weight());
                // Branch 0: z0*g - c0*a = ta0, z0*h - c0*b = tb0.
                // Branch 1: same with c1, z1 and b shifted by -g.
                coef_g += u1 * f.z0 + u3 * f.z1 + u4 * f.c1;
                coef_h += u2 * f.z0 + u4 * f.z1;
                scalars[cipher_base + 2 * j] -= u1 * f.c0 + u3 * f.c1;
                scalars[cipher_base + 2 * j + 1] -= u2 * f.c0 + u4 * f.c1;
                scalars.extend_from_slice(&[-u1, -u2, -u3, -u4]);
                points.extend_from_slice(&[t[0].ta, t[0].tb, t[1].ta, t[1].tb]);
            }
            // Sum proof over (sum a_j, sum b_j - g): distribute the challenge
            // weight across the per-coordinate cipher points.
            let (u5, u6) = (weight(), weight());
            coef_g += u5 * fin.sum_z + u6 * c;
            coef_h += u6 * fin.sum_z;
            for j in 0..m {
                scalars[cipher_base + 2 * j] -= u5 * c;
                scalars[cipher_base + 2 * j + 1] -= u6 * c;
            }
            scalars.extend_from_slice(&[-u5, -u6]);
            points.extend_from_slice(&[fm.sum.ta, fm.sum.tb]);
        }
    }
    scalars[0] = coef_g;
    scalars[1] = coef_h;
    RistrettoPoint::vartime_multiscalar_mul(scalars, points) == RistrettoPoint::identity()
}

impl Encode for BranchFirst {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.ta.encode_into(out);
        self.tb.encode_into(out);
    }
}

impl Encode for BlockFirstMove {
    fn encode_into(&self, out: &mut Vec<u8>) {
        (self.coords.len() as u32).encode_into(out);
        for pair in &self.coords {
            pair[0].encode_into(out);
            pair[1].encode_into(out);
        }
        self.sum.encode_into(out);
    }
}

impl Encode for ProofFirstMoves {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.blocks.encode_into(out);
    }
}

impl Encode for CoordFinal {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.c0.encode_into(out);
        self.z0.encode_into(out);
        self.c1.encode_into(out);
        self.z1.encode_into(out);
    }
}

impl Encode for BlockFinalMove {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.coords.encode_into(out);
        self.sum_z.encode_into(out);
    }
}

impl Encode for ProofFinalMoves {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.blocks.encode_into(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commit::{commit_unit_vector, commit_vector};
    use crate::group::{g, hash_to_group};
    use crate::rng::Prf;
    use crate::vss;
    use rand::Rng;

    fn test_key() -> CommitKey {
        CommitKey { g: g(), h: hash_to_group("zkp-test-h", b"") }
    }

    fn random_bits<R: Rng>(n: usize, rng: &mut R) -> Vec<bool> {
        (0..n).map(|_| rng.gen()).collect()
    }

    #[test]
    fn honest_proofs_verify_across_block_counts() {
        let key = test_key();
        let mut rng = Prf::from_u64(40).rng();
        for nbits in [1usize, 8, 251, 252, 600] {
            let kappa = kappa_for_bits(nbits);
            let (c, o) = commit_unit_vector(&key, 3, 1, &mut rng);
            let (first, state) = prove_first(&key, &c, &o, kappa, &mut rng);
            let challenge = challenge_blocks(&random_bits(nbits, &mut rng));
            assert_eq!(challenge.len(), kappa);
            let finals = finalize(&state, &challenge).unwrap();
            assert!(verify(&key, &c, &first, &challenge, &finals));
        }
    }

    #[test]
    fn non_unit_vectors_are_rejected() {
        let key = test_key();
        let mut rng = Prf::from_u64(41).rng();
        for values in [vec![2u64, 0, 0], vec![1, 1, 0], vec![0, 0, 0]] {
            let (c, o) = commit_vector(&key, &values, &mut rng);
            let (first, state) = prove_first(&key, &c, &o, 1, &mut rng);
            let challenge = challenge_blocks(&random_bits(64, &mut rng));
            let finals = finalize(&state, &challenge).unwrap();
            assert!(
                !verify(&key, &c, &first, &challenge, &finals),
                "accepted a proof for {values:?}"
            );
        }
    }

    #[test]
    fn kappa_and_block_packing() {
        assert_eq!(kappa_for_bits(0), 1);
        assert_eq!(kappa_for_bits(251), 1);
        assert_eq!(kappa_for_bits(252), 2);
        assert_eq!(kappa_for_bits(1000), 4);
        // bit 0 is the low bit of block 0; bit 251 is the low bit of block 1
        let mut bits = vec![false; 252];
        bits[0] = true;
        bits[251] = true;
        let blocks = challenge_blocks(&bits);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0], Scalar::ONE);
        assert_eq!(blocks[1], Scalar::ONE);
        assert_eq!(challenge_blocks(&[true, true])[0], Scalar::from(3u64));
    }

    #[test]
    fn tampered_transcripts_fail() {
        let key = test_key();
        let mut rng = Prf::from_u64(42).rng();
        let (c, o) = commit_unit_vector(&key, 2, 0, &mut rng);
        let (first, state) = prove_first(&key, &c, &o, 1, &mut rng);
        let challenge = challenge_blocks(&random_bits(32, &mut rng));
        let good = finalize(&state, &challenge).unwrap();
        assert!(verify(&key, &c, &first, &challenge, &good));

        let mut bad = good.clone();
        bad.blocks[0].coords[0].z0 += Scalar::ONE;
        assert!(!verify(&key, &c, &first, &challenge, &bad));

        let mut bad = good.clone();
        bad.blocks[0].sum_z += Scalar::ONE;
        assert!(!verify(&key, &c, &first, &challenge, &bad));

        let other = challenge_blocks(&random_bits(32, &mut rng));
        assert_ne!(challenge, other);
        assert!(!verify(&key, &c, &first, &other, &good));
    }

    #[test]
    fn batch_verification_matches_per_proof_verification() {
        let key = test_key();
        let mut rng = Prf::from_u64(45).rng();
        let challenge = challenge_blocks(&random_bits(300, &mut rng));
        let kappa = challenge.len();
        let mut proofs = Vec::new();
        for i in 0..5 {
            let (c, o) = commit_unit_vector(&key, 4, i % 4, &mut rng);
            let (first, state) = prove_first(&key, &c, &o, kappa, &mut rng);
            let finals = finalize(&state, &challenge).unwrap();
            proofs.push((c, first, finals));
        }
        let items: Vec<ProofToVerify> = proofs
            .iter()
            .map(|(c, first, finals)| ProofToVerify { commitment: c, first, finals })
            .collect();
        let seed = [7u8; 32];
        assert!(verify_many_with_seed(&seed, &key, &items, &challenge));
        assert!(verify_many_with_seed(&seed, &key, &[], &challenge));

        // Any single corrupted scalar sinks the whole batch.
        let mut bad = proofs.clone();
        bad[3].2.blocks[kappa - 1].coords[2].z1 += Scalar::ONE;
        let bad_items: Vec<ProofToVerify> = bad
            .iter()
            .map(|(c, first, finals)| ProofToVerify { commitment: c, first, finals })
            .collect();
        assert!(!verify_many_with_seed(&seed, &key, &bad_items, &challenge));

        let mut bad = proofs.clone();
        bad[0].2.blocks[0].sum_z += Scalar::ONE;
        let bad_items: Vec<ProofToVerify> = bad
            .iter()
            .map(|(c, first, finals)| ProofToVerify { commitment: c, first, finals })
            .collect();
        assert!(!verify_many_with_seed(&seed, &key, &bad_items, &challenge));

        // A proof for a non-unit vector fails in a batch like it does alone.
        let (c, o) = commit_vector(&key, &[1, 0, 1, 0], &mut rng);
        let (first, state) = prove_first(&key, &c, &o, kappa, &mut rng);
        let finals = finalize(&state, &challenge).unwrap();
        let one = [ProofToVerify { commitment: &c, first: &first, finals: &finals }];
        assert!(!verify_many_with_seed(&seed, &key, &one, &challenge));
    }

    #[test]
    fn shared_state_reconstructs_the_same_final_move() {
        // Shamir-share every state scalar, evaluate the shares at the
        // challenge, reconstruct the final move from every 2-subset of 3
        // holders and compare with the direct finalize.
        let key = test_key();
        let mut rng = Prf::from_u64(43).rng();
        let m = 3;
        let (c, o) = commit_unit_vector(&key, m, 2, &mut rng);
        let kappa = 2;
        let (first, state) = prove_first(&key, &c, &o, kappa, &mut rng);
        let challenge = challenge_blocks(&random_bits(300, &mut rng));
        let direct = finalize(&state, &challenge).unwrap();

        let dealings: Vec<Vec<vss::Share>> = state
            .scalars
            .iter()
            .map(|s| vss::deal(*s, 2, 3, &mut rng))
            .collect();
        let holder_states: Vec<Vec<Scalar>> = (0..3)
            .map(|holder| dealings.iter().map(|d| d[holder].value).collect())
            .collect();
        let holder_evals: Vec<Vec<Scalar>> = holder_states
            .iter()
            .map(|hs| evaluate_state(m, hs, &challenge).unwrap())
            .collect();

        for pair in [[0usize, 1], [0, 2], [1, 2]] {
            let n_finals = holder_evals[0].len();
            let combined: Vec<Scalar> = (0..n_finals)
                .map(|i| {
                    let shares: Vec<vss::Share> = pair
                        .iter()
                        .map(|&h| vss::Share {
                            index: h as u32 + 1,
                            value: holder_evals[h][i],
                        })
                        .collect();
                    vss::reconstruct(&shares, 2).unwrap()
                })
                .collect();
            let rebuilt = final_moves_from_scalars(m, kappa, &combined).unwrap();
            assert_eq!(rebuilt, direct);
            assert!(verify(&key, &c, &first, &challenge, &rebuilt));
        }
    }

    #[test]
    fn forged_first_moves_rejected() {
        let key = test_key();
        let mut rng = Prf::from_u64(44).rng();
        let (c, _) = commit_vector(&key, &[1, 1], &mut rng);
        // Random transcript forgery: random first moves and finals.
        let first = ProofFirstMoves {
            blocks: vec![BlockFirstMove {
                coords: (0..2)
                    .map(|_| {
                        [BranchFirst {
                            ta: g() * random_scalar(&mut rng),
                            tb: g() * random_scalar(&mut rng),
                        }; 2]
                    })
                    .collect(),
                sum: BranchFirst {
                    ta: g() * random_scalar(&mut rng),
                    tb: g() * random_scalar(&mut rng),
                },
            }],
        };
        let challenge = challenge_blocks(&random_bits(100, &mut rng));
        let finals = ProofFinalMoves {
            blocks: vec![BlockFinalMove {
                coords: (0..2)
                    .map(|_| CoordFinal {
                        c0: random_scalar(&mut rng),
                        z0: random_scalar(&mut rng),
                        c1: random_scalar(&mut rng),
                        z1: random_scalar(&mut rng),
                    })
                    .collect(),
                sum_z: random_scalar(&mut rng),
            }],
        };
        assert!(!verify(&key, &c, &first, &challenge, &finals));
    }
}
