//! Rules every transcript consumer applies identically once the final vote
//! set and the decrypted code table are public: which ballots count, which
//! part and row a published code points at, and the proof challenge that
//! the voters collectively rolled by choosing parts.
//!
//! Keeping these in one place matters. The board replicas, the trustees and
//! any third-party auditor all recompute them from the same public data and
//! must land on byte-identical answers.

use curve25519_dalek::scalar::Scalar;

use agora_crypto::zkp;

use crate::ids::{PartId, Serial, VoteCode};
use crate::messages::CodeTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallotClass {
    /// The published code sits in this row of this part.
    Voted { part: PartId, row: u32 },
    Unvoted,
    /// The final set names a code the code table does not contain. Honest
    /// setups never produce this; it means the transcript is corrupt.
    Inconsistent,
}

pub fn classify(final_code: Option<VoteCode>, parts: &[Vec<VoteCode>; 2]) -> BallotClass {
    let Some(code) = final_code else {
        return BallotClass::Unvoted;
    };
    for part in PartId::both() {
        if let Some(row) = parts[part.index() as usize].iter().position(|c| *c == code) {
            return BallotClass::Voted { part, row: row as u32 };
        }
    }
    BallotClass::Inconsistent
}

/// Classifies every ballot in the code table against the final vote set.
/// Both inputs are serial-sorted; the output follows the table's order.
pub fn classify_all(
    final_set: &[(Serial, VoteCode)],
    codes: &CodeTable,
) -> Vec<(Serial, BallotClass)> {
    codes
        .rows
        .iter()
        .map(|(serial, parts)| {
            let cast = final_set
                .binary_search_by_key(serial, |(s, _)| *s)
                .ok()
                .map(|i| final_set[i].1);
            (*serial, classify(cast, parts))
        })
        .collect()
}

/// One bit per ballot in serial order: set iff the ballot was voted with a
/// part B code. Unvoted and inconsistent ballots contribute a zero.
pub fn challenge_bits(classes: &[(Serial, BallotClass)]) -> Vec<bool> {
    classes
        .iter()
        .map(|(_, c)| matches!(c, BallotClass::Voted { part: PartId::B, .. }))
        .collect()
}

/// The challenge as field elements, one per proof block.
pub fn challenge_scalars(classes: &[(Serial, BallotClass)]) -> Vec<Scalar> {
    zkp::challenge_blocks(&challenge_bits(classes))
}
