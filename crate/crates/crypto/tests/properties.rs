//! Property tests for the algebraic contracts the protocol leans on.

use agora_crypto::commit::{
    commit_vector, open_with_randomness, verify_opening, CommitKey, VectorOpening,
};
use agora_crypto::group::{g, hash_to_group, scalar_from_be_bytes, scalar_to_be_bytes};
use agora_crypto::hashcommit;
use agora_crypto::rng::Prf;
use agora_crypto::vss;
use agora_crypto::zkp;
use curve25519_dalek::scalar::Scalar;
use proptest::prelude::*;

fn key() -> CommitKey {
    CommitKey { g: g(), h: hash_to_group("prop-h", b"") }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commitment_addition_is_vector_addition(
        seed in any::<u64>(),
        a in prop::collection::vec(0u64..50, 1..6),
    ) {
        let mut rng = Prf::from_u64(seed).rng();
        let b: Vec<u64> = a.iter().map(|x| (x * 3 + 1) % 50).collect();
        let (ca, oa) = commit_vector(&key(), &a, &mut rng);
        let (cb, ob) = commit_vector(&key(), &b, &mut rng);
        let sum = ca.add(&cb).unwrap();
        let values: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let randomness: Vec<Scalar> = oa.randomness.iter().zip(&ob.randomness)
            .map(|(x, y)| x + y).collect();
        let opening = VectorOpening {
            values: values.clone(),
            randomness: randomness.clone(),
        };
        prop_assert!(verify_opening(&key(), &sum, &opening));
        prop_assert_eq!(
            open_with_randomness(&key(), &sum, &randomness, 100).unwrap(),
            values
        );
    }

    #[test]
    fn shamir_threshold_is_exact(
        seed in any::<u64>(),
        secret in any::<u64>(),
        k in 1usize..5,
        extra in 0usize..4,
    ) {
        let n = k + extra;
        let mut rng = Prf::from_u64(seed).rng();
        let shares = vss::deal(Scalar::from(secret), k, n, &mut rng);
        prop_assert_eq!(vss::reconstruct(&shares[..k], k).unwrap(), Scalar::from(secret));
        prop_assert_eq!(vss::reconstruct(&shares, k).unwrap(), Scalar::from(secret));
        if k > 1 {
            prop_assert!(vss::reconstruct(&shares[..k - 1], k).is_err());
        }
    }

    #[test]
    fn hash_commitments_bind_payload_and_salt(
        payload in prop::collection::vec(any::<u8>(), 0..64),
        salt in any::<u64>(),
        flip in any::<u64>(),
    ) {
        let c = hashcommit::commit(&payload, salt);
        prop_assert!(hashcommit::matches(&c, &payload, salt));
        if flip != 0 {
            prop_assert!(!hashcommit::matches(&c, &payload, salt ^ flip));
        }
        let mut other = payload.clone();
        other.push(0);
        prop_assert!(!hashcommit::matches(&c, &other, salt));
    }

    #[test]
    fn scalar_be_encoding_roundtrips(seed in any::<u64>()) {
        let mut rng = Prf::from_u64(seed).rng();
        let s = agora_crypto::group::random_scalar(&mut rng);
        prop_assert_eq!(scalar_from_be_bytes(&scalar_to_be_bytes(&s)).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unit_vector_proofs_verify_for_any_position(
        seed in any::<u64>(),
        m in 1usize..6,
        nbits in 1usize..600,
    ) {
        let mut rng = Prf::from_u64(seed).rng();
        let which = (seed as usize) % m;
        let (c, o) = agora_crypto::commit::commit_unit_vector(&key(), m, which, &mut rng);
        let kappa = zkp::kappa_for_bits(nbits);
        let (first, state) = zkp::prove_first(&key(), &c, &o, kappa, &mut rng);
        let bits: Vec<bool> = (0..nbits).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let challenge = zkp::challenge_blocks(&bits);
        let finals = zkp::finalize(&state, &challenge).unwrap();
        prop_assert!(zkp::verify(&key(), &c, &first, &challenge, &finals));
    }
}
