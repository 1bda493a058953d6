//! Agreement building blocks: reliable broadcast and binary consensus.

pub mod binary;
pub mod rbc;

pub use binary::Binary;
pub use rbc::{Rbc, RbcOut};

use agora_crypto::codec::Message;
use agora_crypto::rng::Prf;

use crate::ids::ElectionId;
use crate::messages::BcInstance;

/// The common coin seed for one consensus instance. Derived from public
/// election data so every node computes the same coin stream.
pub fn instance_coin(election: ElectionId, instance: BcInstance) -> Prf {
    let mut m = Message::new("bc-coin").push(&election);
    match instance {
        BcInstance::Ballot(serial) => m = m.push(&0u8).push(&serial),
        BcInstance::Slot(vc) => m = m.push(&1u8).push(&vc),
    }
    Prf::from_bytes(m.digest())
}
