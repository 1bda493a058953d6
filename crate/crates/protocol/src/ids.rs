//! Identifiers and small value types shared across the protocol.

use agora_crypto::codec::Encode;
use serde::{Deserialize, Serialize};

/// Logical time in simulation ticks.
pub type Tick = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElectionId(pub u64);

/// Ballot serial number. Sequential underneath, but offset by a random
/// 64-bit value so serials do not leak generation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Serial(pub u64);

/// 128-bit vote code, unique across the whole election.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoteCode(pub u128);

impl VoteCode {
    pub fn bytes(&self) -> [u8; 16] {
        self.0.to_be_bytes()
    }
}

/// 64-bit receipt printed on the ballot next to each vote code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Receipt(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartId {
    A,
    B,
}

impl PartId {
    pub fn other(&self) -> PartId {
        match self {
            PartId::A => PartId::B,
            PartId::B => PartId::A,
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            PartId::A => 0,
            PartId::B => 1,
        }
    }

    pub fn both() -> [PartId; 2] {
        [PartId::A, PartId::B]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VcId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BbId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrusteeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoterId(pub u32);

/// Which of the two collection protocols the election runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Ic,
    Async,
}

impl Encode for ElectionId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for Serial {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for VoteCode {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for Receipt {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for PartId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.index().encode_into(out);
    }
}

impl Encode for VcId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for BbId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for TrusteeId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for VoterId {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }
}

impl Encode for Mode {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(match self {
            Mode::Ic => 0,
            Mode::Async => 1,
        });
    }
}
