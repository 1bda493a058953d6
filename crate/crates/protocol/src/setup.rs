//! Election setup: the (trusted, offline) authority generates ballots and
//! the per-node initialization bundles, then erases its secrets.
//!
//! Each ballot has two interchangeable parts, A and B. A part carries one
//! row per election option in a per-part shuffled order; a row holds a fresh
//! vote code, a receipt, and (on the bulletin board) the encrypted code plus
//! a unit-vector commitment to the row's option with zero-knowledge first
//! moves. Vote collectors only ever see salted hashes of the codes and
//! threshold shares of the receipts; trustees hold shares of the commitment
//! openings and of the proof finalization state.

use std::collections::{BTreeMap, BTreeSet};

use agora_crypto::codec::{digest_bytes, Encode};
use agora_crypto::commit::{commit_unit_vector, VectorCommitment};
use agora_crypto::group::hash_to_group;
use agora_crypto::hashcommit::{self, HashCommitment};
use agora_crypto::rng::Prf;
use agora_crypto::sign::{KeyPair, Signature};
use agora_crypto::symenc::{self, SymCiphertext};
use agora_crypto::vss::{self, PedersenCommitments, PedersenParams, PedersenShare, Share};
use agora_crypto::zkp::{self, ProofFirstMoves};
use curve25519_dalek::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::{ElectionId, PartId, Serial, TrusteeId, VcId, VoteCode};
use crate::params::{ElectionSpec, PublicParams, SpecError};
use crate::sigmsg;

/// One row of a printed ballot part: what the voter holds in hand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintRow {
    pub code: VoteCode,
    pub option_index: u32,
    pub option_label: String,
    pub receipt: crate::ids::Receipt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintedBallot {
    pub serial: Serial,
    /// Parts A and B, rows in bulletin-board order.
    pub parts: [Vec<PrintRow>; 2],
}

impl PrintedBallot {
    pub fn part(&self, part: PartId) -> &[PrintRow] {
        &self.parts[part.index() as usize]
    }
}

/// Vote collector view of one row: enough to validate a code and reveal a
/// receipt share, nothing that identifies the option.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcRow {
    pub code_hash: HashCommitment,
    pub salt: u64,
    pub receipt_share: Share,
    pub receipt_share_sig: Signature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcBallot {
    pub parts: [Vec<VcRow>; 2],
}

impl VcBallot {
    pub fn part(&self, part: PartId) -> &[VcRow] {
        &self.parts[part.index() as usize]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VcBundle {
    pub node: VcId,
    pub ballots: BTreeMap<Serial, VcBallot>,
    pub msk_share: Share,
    pub msk_share_sig: Signature,
}

/// Bulletin board view of one row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BbRow {
    pub enc_code: SymCiphertext,
    pub commitment: VectorCommitment,
    pub zk_first: ProofFirstMoves,
    /// Pedersen verification data for the opening-randomness shares, one
    /// commitment vector per ciphertext coordinate.
    pub opening_comms: Vec<PedersenCommitments>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BbBallot {
    pub parts: [Vec<BbRow>; 2],
}

impl BbBallot {
    pub fn part(&self, part: PartId) -> &[BbRow] {
        &self.parts[part.index() as usize]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BbInit {
    pub params: PublicParams,
    pub ballots: BTreeMap<Serial, BbBallot>,
    #[serde(skip)]
    digest_memo: std::sync::OnceLock<[u8; 32]>,
}

impl PartialEq for BbInit {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.ballots == other.ballots
    }
}

impl BbInit {
    pub fn new(params: PublicParams, ballots: BTreeMap<Serial, BbBallot>) -> BbInit {
        BbInit { params, ballots, digest_memo: std::sync::OnceLock::new() }
    }

    /// Canonical digest of the init section. Computed on first use and
    /// memoized, so every holder of the same shared instance pays for the
    /// encoding once.
    pub fn digest(&self) -> [u8; 32] {
        *self.digest_memo.get_or_init(|| {
            let mut buf = vec![crate::messages::SectionKind::Init.id()];
            self.encode_into(&mut buf);
            digest_bytes(&buf)
        })
    }
}

/// Trustee view of one row: a share of each opening randomness and shares
/// of the proof finalization scalars (`zkp::ProverState` layout).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrusteeRow {
    pub opening_shares: Vec<PedersenShare>,
    pub zk_state_shares: Vec<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrusteeBallot {
    pub parts: [Vec<TrusteeRow>; 2],
}

impl TrusteeBallot {
    pub fn part(&self, part: PartId) -> &[TrusteeRow] {
        &self.parts[part.index() as usize]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrusteeBundle {
    pub trustee: TrusteeId,
    pub ballots: BTreeMap<Serial, TrusteeBallot>,
    pub dealer_sig: Signature,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetupKeys {
    pub ea: KeyPair,
    pub vc: Vec<KeyPair>,
    pub bb: Vec<KeyPair>,
    pub trustees: Vec<KeyPair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElectionArtifacts {
    pub params: PublicParams,
    pub ballots: Vec<PrintedBallot>,
    pub vc_bundles: Vec<VcBundle>,
    pub bb_init: BbInit,
    pub trustee_bundles: Vec<TrusteeBundle>,
    pub keys: SetupKeys,
}

impl ElectionArtifacts {
    pub fn printed(&self, serial: Serial) -> Option<&PrintedBallot> {
        let offset = self.ballots.first()?.serial.0;
        let idx = serial.0.wrapping_sub(offset);
        self.ballots.get(idx as usize).filter(|b| b.serial == serial)
    }
}

pub fn generate_election(
    spec: &ElectionSpec,
    seed_prf: &Prf,
) -> Result<ElectionArtifacts, SpecError> {
    spec.validate()?;
    let m = spec.m();
    let n_vc = spec.n_vc as usize;
    let n_t = spec.n_trustee as usize;
    let h_t = spec.h_trustee as usize;
    let k_vc = spec.vc_share_threshold();
    let kappa = spec.kappa();

    let election = ElectionId(seed_prf.derive("election-id").value_u64());
    let mut key_rng = seed_prf.derive("keys").rng();
    let ea = KeyPair::generate(&mut key_rng);
    let vc_keys: Vec<KeyPair> = (0..n_vc).map(|_| KeyPair::generate(&mut key_rng)).collect();
    let bb_keys: Vec<KeyPair> =
        (0..spec.n_bb as usize).map(|_| KeyPair::generate(&mut key_rng)).collect();
    let trustee_keys: Vec<KeyPair> =
        (0..n_t).map(|_| KeyPair::generate(&mut key_rng)).collect();

    let election_ctx = election.0.to_be_bytes();
    let commit_key = agora_crypto::commit::CommitKey {
        g: agora_crypto::group::g(),
        h: hash_to_group("commitment-key", &election_ctx),
    };
    let pedersen = PedersenParams {
        g: agora_crypto::group::g(),
        h: hash_to_group("pedersen-vss", &election_ctx),
    };

    let mut ballot_rng = seed_prf.derive("ballots").rng();
    let msk: u128 = seed_prf.derive("msk").rng().gen();
    let msk_hash = digest_bytes(&msk.to_be_bytes());
    let msk_shares = vss::deal(Scalar::from(msk), k_vc, n_vc, &mut ballot_rng);

    let params = PublicParams {
        election,
        spec: spec.clone(),
        commit_key,
        pedersen,
        ea_pk: ea.public(),
        vc_pks: vc_keys.iter().map(|k| k.public()).collect(),
        bb_pks: bb_keys.iter().map(|k| k.public()).collect(),
        trustee_pks: trustee_keys.iter().map(|k| k.public()).collect(),
        msk_hash,
    };

    let serial_offset = seed_prf.derive("serial-offset").value_u64();
    let mut used_codes: BTreeSet<u128> = BTreeSet::new();
    let mut draw_code = |rng: &mut agora_crypto::rng::ChaCha20Rng| -> VoteCode {
        loop {
            let c: u128 = rng.gen();
            if used_codes.insert(c) {
                return VoteCode(c);
            }
        }
    };

    let mut ballots = Vec::with_capacity(spec.n_ballots as usize);
    let mut vc_ballots: Vec<BTreeMap<Serial, VcBallot>> = vec![BTreeMap::new(); n_vc];
    let mut bb_ballots: BTreeMap<Serial, BbBallot> = BTreeMap::new();
    let mut trustee_ballots: Vec<BTreeMap<Serial, TrusteeBallot>> = vec![BTreeMap::new(); n_t];
    let option_indices: Vec<u32> = (0..m as u32).collect();

    for i in 0..spec.n_ballots {
        let serial = Serial(serial_offset.wrapping_add(i));
        let mut printed_parts: Vec<Vec<PrintRow>> = Vec::with_capacity(2);
        let mut vc_parts: Vec<Vec<Vec<VcRow>>> = vec![Vec::with_capacity(2); n_vc];
        let mut bb_parts: Vec<Vec<BbRow>> = Vec::with_capacity(2);
        let mut trustee_parts: Vec<Vec<Vec<TrusteeRow>>> = vec![Vec::with_capacity(2); n_t];

        for part in PartId::both() {
            let mut order = option_indices.clone();
            order.shuffle(&mut ballot_rng);
            let mut printed_rows = Vec::with_capacity(m);
            let mut vc_rows: Vec<Vec<VcRow>> = vec![Vec::with_capacity(m); n_vc];
            let mut bb_rows = Vec::with_capacity(m);
            let mut trustee_rows: Vec<Vec<TrusteeRow>> = vec![Vec::with_capacity(m); n_t];

            for (row, &opt) in order.iter().enumerate() {
                let code = draw_code(&mut ballot_rng);
                let salt: u64 = ballot_rng.gen();
                let receipt = crate::ids::Receipt(ballot_rng.gen());
                let code_hash = hashcommit::commit(&code.bytes(), salt);
                let enc_code = symenc::encrypt(msk, &code.bytes(), &mut ballot_rng);

                let receipt_shares =
                    vss::deal(Scalar::from(receipt.0), k_vc, n_vc, &mut ballot_rng);
                for (node, share) in receipt_shares.iter().enumerate() {
                    let sig = ea.sign(&sigmsg::receipt_share(
                        election, serial, part, row as u32, share,
                    ));
                    vc_rows[node].push(VcRow {
                        code_hash,
                        salt,
                        receipt_share: *share,
                        receipt_share_sig: sig,
                    });
                }

                let (commitment, opening) =
                    commit_unit_vector(&commit_key, m, opt as usize, &mut ballot_rng);
                let (zk_first, zk_state) =
                    zkp::prove_first(&commit_key, &commitment, &opening, kappa, &mut ballot_rng);

                let mut opening_comms = Vec::with_capacity(m);
                let mut trustee_opening: Vec<Vec<PedersenShare>> = vec![Vec::new(); n_t];
                for r_j in &opening.randomness {
                    let dealing = vss::pedersen_deal(&pedersen, *r_j, h_t, n_t, &mut ballot_rng);
                    opening_comms.push(dealing.commitments);
                    for (t, share) in dealing.shares.iter().enumerate() {
                        trustee_opening[t].push(*share);
                    }
                }

                let mut trustee_zk: Vec<Vec<Scalar>> =
                    vec![Vec::with_capacity(zk_state.scalars.len()); n_t];
                for s in &zk_state.scalars {
                    let shares = vss::deal(*s, h_t, n_t, &mut ballot_rng);
                    for (t, share) in shares.iter().enumerate() {
                        trustee_zk[t].push(share.value);
                    }
                }

                printed_rows.push(PrintRow {
                    code,
                    option_index: opt,
                    option_label: spec.options[opt as usize].clone(),
                    receipt,
                });
                bb_rows.push(BbRow { enc_code, commitment, zk_first, opening_comms });
                for t in 0..n_t {
                    trustee_rows[t].push(TrusteeRow {
                        opening_shares: std::mem::take(&mut trustee_opening[t]),
                        zk_state_shares: std::mem::take(&mut trustee_zk[t]),
                    });
                }
            }

            printed_parts.push(printed_rows);
            bb_parts.push(bb_rows);
            for node in 0..n_vc {
                vc_parts[node].push(std::mem::take(&mut vc_rows[node]));
            }
            for t in 0..n_t {
                trustee_parts[t].push(std::mem::take(&mut trustee_rows[t]));
            }
        }

        ballots.push(PrintedBallot {
            serial,
            parts: printed_parts.try_into().expect("two parts"),
        });
        bb_ballots.insert(
            serial,
            BbBallot { parts: bb_parts.try_into().expect("two parts") },
        );
        for node in 0..n_vc {
            vc_ballots[node].insert(
                serial,
                VcBallot {
                    parts: std::mem::take(&mut vc_parts[node]).try_into().expect("two parts"),
                },
            );
        }
        for t in 0..n_t {
            trustee_ballots[t].insert(
                serial,
                TrusteeBallot {
                    parts: std::mem::take(&mut trustee_parts[t])
                        .try_into()
                        .expect("two parts"),
                },
            );
        }
    }

    let vc_bundles = vc_ballots
        .into_iter()
        .enumerate()
        .map(|(node, ballots)| {
            let msk_share = msk_shares[node];
            let msk_share_sig = ea.sign(&sigmsg::msk_share(election, &msk_share));
            VcBundle { node: VcId(node as u32), ballots, msk_share, msk_share_sig }
        })
        .collect();

    let trustee_bundles = trustee_ballots
        .into_iter()
        .enumerate()
        .map(|(t, ballots)| {
            let trustee = TrusteeId(t as u32);
            let d = trustee_ballots_digest(&ballots);
            let dealer_sig = ea.sign(&sigmsg::trustee_bundle(election, trustee, &d));
            TrusteeBundle { trustee, ballots, dealer_sig }
        })
        .collect();

    let bb_init = BbInit::new(params.clone(), bb_ballots);
    Ok(ElectionArtifacts {
        params,
        ballots,
        vc_bundles,
        bb_init,
        trustee_bundles,
        keys: SetupKeys { ea, vc: vc_keys, bb: bb_keys, trustees: trustee_keys },
    })
}

pub fn trustee_ballots_digest(ballots: &BTreeMap<Serial, TrusteeBallot>) -> [u8; 32] {
    let mut buf = Vec::new();
    (ballots.len() as u32).encode_into(&mut buf);
    for (serial, ballot) in ballots {
        serial.encode_into(&mut buf);
        for part in PartId::both() {
            for row in ballot.part(part) {
                row.opening_shares.encode_into(&mut buf);
                row.zk_state_shares.encode_into(&mut buf);
            }
        }
    }
    digest_bytes(&buf)
}

/// One deliberate mis-association planted by a corrupt authority: within a
/// ballot part, the bulletin-board payloads of two rows are swapped while
/// the printed ballot and the collectors' data stay put, so each swapped
/// vote code now points at the other row's option encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperSwap {
    pub serial: Serial,
    pub part: PartId,
    pub row_a: usize,
    pub row_b: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperPlan {
    pub swaps: Vec<TamperSwap>,
}

/// Applies the tamper plan to otherwise honest artifacts. Every commitment
/// stays a valid unit vector with valid proofs and consistent trustee
/// shares; only the printed-ballot association is broken, which is exactly
/// what a part-audit can catch.
pub fn forge_malicious_setup(artifacts: &mut ElectionArtifacts, plan: &TamperPlan) {
    for swap in &plan.swaps {
        let p = swap.part.index() as usize;
        let bb = artifacts
            .bb_init
            .ballots
            .get_mut(&swap.serial)
            .expect("tampered serial exists");
        let rows = &mut bb.parts[p];
        let (a, b) = (swap.row_a, swap.row_b);
        assert!(a != b && a < rows.len() && b < rows.len(), "bad tamper rows");
        // The encrypted vote code stays with its row; the option payload
        // (commitment, proofs, opening data) moves.
        let tmp = rows[a].commitment.clone();
        rows[a].commitment = rows[b].commitment.clone();
        rows[b].commitment = tmp;
        let tmp = rows[a].zk_first.clone();
        rows[a].zk_first = rows[b].zk_first.clone();
        rows[b].zk_first = tmp;
        let tmp = rows[a].opening_comms.clone();
        rows[a].opening_comms = rows[b].opening_comms.clone();
        rows[b].opening_comms = tmp;
        for bundle in &mut artifacts.trustee_bundles {
            let ballot = bundle.ballots.get_mut(&swap.serial).expect("serial");
            ballot.parts[p].swap(a, b);
        }
    }
    // Tampering invalidates the dealer signatures over trustee bundles; a
    // corrupt authority re-signs them.
    for bundle in &mut artifacts.trustee_bundles {
        let d = trustee_ballots_digest(&bundle.ballots);
        bundle.dealer_sig = artifacts.keys.ea.sign(&sigmsg::trustee_bundle(
            artifacts.params.election,
            bundle.trustee,
            &d,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use agora_crypto::codec::digest_bytes;
    use agora_crypto::group::{scalar_to_u128, scalar_to_u64};

    fn spec() -> ElectionSpec {
        ElectionSpec {
            options: vec!["alpha".into(), "beta".into()],
            n_ballots: 4,
            n_vc: 4,
            f_vc: 1,
            n_bb: 3,
            f_bb: 1,
            n_trustee: 3,
            h_trustee: 2,
            t_end: 40,
            t_barrier: 52,
        }
    }

    fn artifacts() -> ElectionArtifacts {
        generate_election(&spec(), &Prf::from_u64(1000)).unwrap()
    }

    #[test]
    fn regenerating_from_the_same_seed_is_identical() {
        let a = artifacts();
        let b = generate_election(&spec(), &Prf::from_u64(1000)).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.ballots, b.ballots);
        assert_eq!(a.bb_init, b.bb_init);
        for (x, y) in a.trustee_bundles.iter().zip(&b.trustee_bundles) {
            assert_eq!(
                trustee_ballots_digest(&x.ballots),
                trustee_ballots_digest(&y.ballots)
            );
        }
        let c = generate_election(&spec(), &Prf::from_u64(1001)).unwrap();
        assert_ne!(a.params.election, c.params.election);
    }

    #[test]
    fn printed_lookup_by_serial() {
        let a = artifacts();
        for b in &a.ballots {
            assert_eq!(a.printed(b.serial).unwrap().serial, b.serial);
        }
        let last = a.ballots.last().unwrap().serial;
        assert!(a.printed(Serial(last.0.wrapping_add(1))).is_none());
    }

    #[test]
    fn codes_are_unique_and_parts_cover_all_options() {
        let a = artifacts();
        let mut seen = BTreeSet::new();
        for b in &a.ballots {
            for part in PartId::both() {
                let rows = b.part(part);
                assert_eq!(rows.len(), spec().m());
                let mut opts: Vec<u32> = rows.iter().map(|r| r.option_index).collect();
                opts.sort_unstable();
                assert_eq!(opts, vec![0, 1]);
                for r in rows {
                    assert!(seen.insert(r.code), "vote code reused");
                    assert_eq!(
                        r.option_label,
                        spec().options[r.option_index as usize]
                    );
                }
            }
        }
    }

    #[test]
    fn collector_rows_hash_and_reconstruct_the_printed_data() {
        let a = artifacts();
        let k = spec().vc_share_threshold();
        for b in &a.ballots {
            for part in PartId::both() {
                for (row, pr) in b.part(part).iter().enumerate() {
                    let per_node: Vec<&VcRow> = a
                        .vc_bundles
                        .iter()
                        .map(|vb| &vb.ballots[&b.serial].part(part)[row])
                        .collect();
                    for (node, vr) in per_node.iter().enumerate() {
                        assert!(hashcommit::matches(&vr.code_hash, &pr.code.bytes(), vr.salt));
                        assert_eq!(vr.receipt_share.index, node as u32 + 1);
                        a.params
                            .ea_pk
                            .verify(
                                &sigmsg::receipt_share(
                                    a.params.election,
                                    b.serial,
                                    part,
                                    row as u32,
                                    &vr.receipt_share,
                                ),
                                &vr.receipt_share_sig,
                            )
                            .unwrap();
                    }
                    // Any k-subset of shares reconstructs the printed receipt.
                    let shares: Vec<Share> =
                        per_node.iter().map(|vr| vr.receipt_share).collect();
                    let r = vss::reconstruct(&shares[..k], k).unwrap();
                    assert_eq!(scalar_to_u64(&r).unwrap(), pr.receipt.0);
                    let r = vss::reconstruct(&shares[1..], k).unwrap();
                    assert_eq!(scalar_to_u64(&r).unwrap(), pr.receipt.0);
                }
            }
        }
    }

    #[test]
    fn master_key_shares_decrypt_the_posted_codes() {
        let a = artifacts();
        let k = spec().vc_share_threshold();
        for vb in &a.vc_bundles {
            a.params
                .ea_pk
                .verify(
                    &sigmsg::msk_share(a.params.election, &vb.msk_share),
                    &vb.msk_share_sig,
                )
                .unwrap();
        }
        let shares: Vec<Share> = a.vc_bundles.iter().map(|v| v.msk_share).collect();
        let msk = scalar_to_u128(&vss::reconstruct(&shares[..k], k).unwrap()).unwrap();
        assert_eq!(digest_bytes(&msk.to_be_bytes()), a.params.msk_hash);
        for b in &a.ballots {
            let bb = &a.bb_init.ballots[&b.serial];
            for part in PartId::both() {
                for (row, pr) in b.part(part).iter().enumerate() {
                    let pt = symenc::decrypt(msk, &bb.part(part)[row].enc_code).unwrap();
                    assert_eq!(pt, pr.code.bytes());
                }
            }
        }
    }

    #[test]
    fn trustee_shares_open_every_commitment_to_its_printed_option() {
        let a = artifacts();
        let h = spec().h_trustee as usize;
        let m = spec().m();
        for b in &a.ballots {
            let bb = &a.bb_init.ballots[&b.serial];
            for part in PartId::both() {
                for (row, pr) in b.part(part).iter().enumerate() {
                    let bbrow = &bb.part(part)[row];
                    let mut randomness = Vec::with_capacity(m);
                    for coord in 0..m {
                        let shares: Vec<PedersenShare> = a
                            .trustee_bundles
                            .iter()
                            .map(|tb| {
                                let s = tb.ballots[&b.serial].part(part)[row]
                                    .opening_shares[coord];
                                assert!(vss::pedersen_verify(
                                    &a.params.pedersen,
                                    &bbrow.opening_comms[coord],
                                    &s,
                                ));
                                s
                            })
                            .collect();
                        let (r, _) = vss::pedersen_reconstruct(&shares[..h], h).unwrap();
                        randomness.push(r);
                    }
                    let opened = agora_crypto::commit::open_with_randomness(
                        &a.params.commit_key,
                        &bbrow.commitment,
                        &randomness,
                        1,
                    )
                    .unwrap();
                    let expect: Vec<u64> =
                        (0..m).map(|i| u64::from(i as u32 == pr.option_index)).collect();
                    assert_eq!(opened, expect);
                }
            }
        }
    }

    #[test]
    fn trustee_proof_shares_finalize_into_verifying_transcripts() {
        let a = artifacts();
        let m = spec().m();
        let h = spec().h_trustee as usize;
        let kappa = spec().kappa();
        let bits = [true, false, true, true];
        let challenge = zkp::challenge_blocks(&bits);
        assert_eq!(challenge.len(), kappa);
        let b = &a.ballots[2];
        let bb = &a.bb_init.ballots[&b.serial];
        for part in PartId::both() {
            for row in 0..m {
                let bbrow = &bb.part(part)[row];
                // Each trustee evaluates its shares at the public challenge;
                // any h of the evaluations recombine into the exact finals.
                let evals: Vec<(u32, Vec<Scalar>)> = a
                    .trustee_bundles
                    .iter()
                    .map(|tb| {
                        let trow = &tb.ballots[&b.serial].part(part)[row];
                        let e = zkp::evaluate_state(m, &trow.zk_state_shares, &challenge)
                            .unwrap();
                        (tb.trustee.0 + 1, e)
                    })
                    .collect();
                for drop in 0..=a.trustee_bundles.len() - h {
                    let subset = &evals[drop..drop + h];
                    let n_finals = subset[0].1.len();
                    let combined: Vec<Scalar> = (0..n_finals)
                        .map(|j| {
                            let shares: Vec<Share> = subset
                                .iter()
                                .map(|(idx, e)| Share { index: *idx, value: e[j] })
                                .collect();
                            vss::reconstruct(&shares, h).unwrap()
                        })
                        .collect();
                    let finals =
                        zkp::final_moves_from_scalars(m, kappa, &combined).unwrap();
                    assert!(zkp::verify(
                        &a.params.commit_key,
                        &bbrow.commitment,
                        &bbrow.zk_first,
                        &challenge,
                        &finals,
                    ));
                }
            }
        }
    }

    #[test]
    fn tampering_swaps_the_option_payload_and_nothing_else() {
        let mut a = artifacts();
        let before = a.clone();
        let serial = a.ballots[1].serial;
        let plan = TamperPlan {
            swaps: vec![TamperSwap { serial, part: PartId::A, row_a: 0, row_b: 1 }],
        };
        forge_malicious_setup(&mut a, &plan);

        let h = spec().h_trustee as usize;
        let m = spec().m();
        let printed = a.printed(serial).unwrap().clone();
        for row in 0..m {
            let bbrow = &a.bb_init.ballots[&serial].part(PartId::A)[row];
            let mut randomness = Vec::with_capacity(m);
            for coord in 0..m {
                let shares: Vec<PedersenShare> = a
                    .trustee_bundles
                    .iter()
                    .take(h)
                    .map(|tb| tb.ballots[&serial].part(PartId::A)[row].opening_shares[coord])
                    .collect();
                randomness.push(vss::pedersen_reconstruct(&shares, h).unwrap().0);
            }
            let opened = agora_crypto::commit::open_with_randomness(
                &a.params.commit_key,
                &bbrow.commitment,
                &randomness,
                1,
            )
            .unwrap();
            // The commitment behind row 0 now encodes row 1's option.
            let other = printed.part(PartId::A)[1 - row].option_index;
            let expect: Vec<u64> = (0..m).map(|i| u64::from(i as u32 == other)).collect();
            assert_eq!(opened, expect);
        }

        // Codes, receipts and collector data are untouched, and the re-signed
        // dealer signatures still verify.
        assert_eq!(a.ballots, before.ballots);
        for (x, y) in a.vc_bundles.iter().zip(&before.vc_bundles) {
            assert_eq!(x.ballots, y.ballots);
        }
        let bb = &a.bb_init.ballots[&serial];
        let old = &before.bb_init.ballots[&serial];
        assert_eq!(bb.part(PartId::A)[0].enc_code, old.part(PartId::A)[0].enc_code);
        for tb in &a.trustee_bundles {
            let d = trustee_ballots_digest(&tb.ballots);
            a.params
                .ea_pk
                .verify(
                    &sigmsg::trustee_bundle(a.params.election, tb.trustee, &d),
                    &tb.dealer_sig,
                )
                .unwrap();
        }
    }
}
