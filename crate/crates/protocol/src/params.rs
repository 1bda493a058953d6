//! Election parameters: the operator-chosen spec and the public parameters
//! derived from it at setup time.

use agora_crypto::codec::Encode;
use agora_crypto::commit::CommitKey;
use agora_crypto::sign::PublicKey;
use agora_crypto::vss::PedersenParams;
use agora_crypto::zkp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ElectionId, Tick};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionSpec {
    pub options: Vec<String>,
    pub n_ballots: u64,
    pub n_vc: u32,
    pub f_vc: u32,
    pub n_bb: u32,
    pub f_bb: u32,
    pub n_trustee: u32,
    pub h_trustee: u32,
    /// End of voting, in ticks since election start.
    pub t_end: Tick,
    /// Synchronization barrier for the IC protocol variant.
    pub t_barrier: Tick,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("need at least one option")]
    NoOptions,
    #[error("need at least one ballot")]
    NoBallots,
    #[error("vote collectors: need n >= 3f+1, got n={n} f={f}")]
    VcThreshold { n: u32, f: u32 },
    #[error("bulletin boards: need n >= 2f+1, got n={n} f={f}")]
    BbThreshold { n: u32, f: u32 },
    #[error("trustees: need 1 <= h <= n, got n={n} h={h}")]
    TrusteeThreshold { n: u32, h: u32 },
    #[error("t_barrier must be after t_end")]
    BarrierBeforeEnd,
}

impl ElectionSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.options.is_empty() {
            return Err(SpecError::NoOptions);
        }
        if self.n_ballots == 0 {
            return Err(SpecError::NoBallots);
        }
        if self.n_vc < 3 * self.f_vc + 1 {
            return Err(SpecError::VcThreshold { n: self.n_vc, f: self.f_vc });
        }
        if self.n_bb < 2 * self.f_bb + 1 {
            return Err(SpecError::BbThreshold { n: self.n_bb, f: self.f_bb });
        }
        if self.h_trustee == 0 || self.h_trustee > self.n_trustee {
            return Err(SpecError::TrusteeThreshold {
                n: self.n_trustee,
                h: self.h_trustee,
            });
        }
        if self.t_barrier <= self.t_end {
            return Err(SpecError::BarrierBeforeEnd);
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.options.len()
    }

    /// Shares needed to reconstruct a receipt or the master key.
    pub fn vc_share_threshold(&self) -> usize {
        (self.n_vc - self.f_vc) as usize
    }

    /// Identical vote sets a bulletin board waits for.
    pub fn bb_finalize_threshold(&self) -> usize {
        (self.f_vc + 1) as usize
    }

    /// Matching responses a reader needs from bulletin board replicas.
    pub fn read_threshold(&self) -> usize {
        (self.f_bb + 1) as usize
    }

    /// Slot count threshold for a code to win the cross-tabulation.
    pub fn cross_tab_threshold(&self) -> usize {
        (self.n_vc - 2 * self.f_vc) as usize
    }

    pub fn kappa(&self) -> usize {
        zkp::kappa_for_bits(self.n_ballots as usize)
    }
}

/// Everything public that every actor learns at setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicParams {
    pub election: ElectionId,
    pub spec: ElectionSpec,
    pub commit_key: CommitKey,
    pub pedersen: PedersenParams,
    pub ea_pk: PublicKey,
    pub vc_pks: Vec<PublicKey>,
    pub bb_pks: Vec<PublicKey>,
    pub trustee_pks: Vec<PublicKey>,
    /// Hash of the vote-code master key, checked at reconstruction.
    pub msk_hash: [u8; 32],
}

impl Encode for ElectionSpec {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.options.encode_into(out);
        self.n_ballots.encode_into(out);
        self.n_vc.encode_into(out);
        self.f_vc.encode_into(out);
        self.n_bb.encode_into(out);
        self.f_bb.encode_into(out);
        self.n_trustee.encode_into(out);
        self.h_trustee.encode_into(out);
        self.t_end.encode_into(out);
        self.t_barrier.encode_into(out);
    }
}

impl Encode for PublicParams {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.election.encode_into(out);
        self.spec.encode_into(out);
        self.commit_key.g.encode_into(out);
        self.commit_key.h.encode_into(out);
        self.pedersen.g.encode_into(out);
        self.pedersen.h.encode_into(out);
        self.ea_pk.encode_into(out);
        self.vc_pks.encode_into(out);
        self.bb_pks.encode_into(out);
        self.trustee_pks.encode_into(out);
        self.msk_hash.encode_into(out);
    }
}
