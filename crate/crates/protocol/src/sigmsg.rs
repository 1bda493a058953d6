//! Canonical byte strings for every signature in the system. Each context
//! has a distinct domain tag, so no signature can be replayed in another
//! role.

use agora_crypto::codec::Message;
use agora_crypto::vss::{PedersenShare, Share};

use crate::ids::{ElectionId, PartId, Serial, TrusteeId, VcId, VoteCode};

pub fn receipt_share(
    election: ElectionId,
    serial: Serial,
    part: PartId,
    row: u32,
    share: &Share,
) -> Vec<u8> {
    Message::new("receipt-share")
        .push(&election)
        .push(&serial)
        .push(&part)
        .push(&row)
        .push(share)
        .bytes()
}

pub fn msk_share(election: ElectionId, share: &Share) -> Vec<u8> {
    Message::new("msk-share").push(&election).push(share).bytes()
}

pub fn endorsement(election: ElectionId, serial: Serial, code: VoteCode) -> Vec<u8> {
    Message::new("endorsement")
        .push(&election)
        .push(&serial)
        .push(&code)
        .bytes()
}

pub fn vote_set(election: ElectionId, vc: VcId, set_digest: &[u8; 32]) -> Vec<u8> {
    Message::new("vote-set")
        .push(&election)
        .push(&vc)
        .push(set_digest)
        .bytes()
}

pub fn ic_value(election: ElectionId, slot: VcId, payload_digest: &[u8; 32]) -> Vec<u8> {
    Message::new("ic-value")
        .push(&election)
        .push(&slot)
        .push(payload_digest)
        .bytes()
}

pub fn trustee_post(
    election: ElectionId,
    trustee: TrusteeId,
    post_digest: &[u8; 32],
) -> Vec<u8> {
    Message::new("trustee-post")
        .push(&election)
        .push(&trustee)
        .push(post_digest)
        .bytes()
}

pub fn trustee_bundle(
    election: ElectionId,
    trustee: TrusteeId,
    bundle_digest: &[u8; 32],
) -> Vec<u8> {
    Message::new("trustee-bundle")
        .push(&election)
        .push(&trustee)
        .push(bundle_digest)
        .bytes()
}

pub fn bb_section(
    election: ElectionId,
    replica: u32,
    section: u8,
    data_digest: &[u8; 32],
) -> Vec<u8> {
    Message::new("bb-section")
        .push(&election)
        .push(&replica)
        .push(&section)
        .push(data_digest)
        .bytes()
}

pub fn opening_share_bundle(
    election: ElectionId,
    trustee: TrusteeId,
    serial: Serial,
    part: PartId,
    row: u32,
    shares: &[PedersenShare],
) -> Vec<u8> {
    Message::new("opening-shares")
        .push(&election)
        .push(&trustee)
        .push(&serial)
        .push(&part)
        .push(&row)
        .push(&shares.to_vec())
        .bytes()
}
