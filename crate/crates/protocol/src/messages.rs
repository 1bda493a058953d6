//! Wire messages for every channel in the system, plus the outbox through
//! which protocol state machines emit effects. The simulator owns actual
//! delivery; handlers stay pure.

use std::collections::BTreeMap;
use std::sync::Arc;

use agora_crypto::codec::{digest_bytes, Encode};
use agora_crypto::sign::Signature;
use agora_crypto::vss::Share;
use curve25519_dalek::ristretto::RistrettoPoint;
use serde::{Deserialize, Serialize};

use crate::ids::{BbId, ElectionId, PartId, Serial, Tick, TrusteeId, VcId, VoteCode, VoterId};
use crate::params::PublicParams;
use crate::setup::BbInit;
use crate::sigmsg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dest {
    Vc(VcId),
    Bb(BbId),
    Trustee(TrusteeId),
    Voter(VoterId),
    Auditor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: Dest,
    pub to: Dest,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimerKind {
    ElectionEnd,
    Barrier,
    Retransmit,
    Poll,
    VoterPatience,
}

/// Effects a handler wants performed: messages to send and local-clock
/// timers to arm.
#[derive(Debug, Default)]
pub struct Outbox {
    pub sends: Vec<(Dest, Payload)>,
    pub timers: Vec<(Tick, TimerKind)>,
}

impl Outbox {
    pub fn send(&mut self, to: Dest, payload: Payload) {
        self.sends.push((to, payload));
    }

    pub fn timer_at(&mut self, local_tick: Tick, kind: TimerKind) {
        self.timers.push((local_tick, kind));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Voter -> collector.
    Vote(VoteSubmit),
    /// Collector -> voter.
    Feedback(VoteFeedback),
    /// Collector <-> collector.
    Peer(PeerMsg),
    /// Collector or trustee -> bulletin board.
    BbWrite(BbWrite),
    /// Reader -> bulletin board.
    BbRead(SectionKind),
    /// Bulletin board -> reader.
    BbPage(SectionPage),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteSubmit {
    pub serial: Serial,
    pub code: VoteCode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteFeedback {
    Receipt { serial: Serial, receipt: crate::ids::Receipt },
}

/// Uniqueness certificate: n_vc - f_vc distinct collector signatures over
/// one (serial, vote code) pair. At most one can exist per ballot because
/// honest collectors endorse a single code per ballot, ever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ucert {
    pub serial: Serial,
    pub code: VoteCode,
    /// Collector index -> signature.
    pub sigs: BTreeMap<u32, Signature>,
}

impl Ucert {
    pub fn verify(&self, params: &PublicParams) -> bool {
        if self.sigs.len() < params.spec.vc_share_threshold() {
            return false;
        }
        let msg = sigmsg::endorsement(params.election, self.serial, self.code);
        self.sigs.iter().all(|(node, sig)| {
            params
                .vc_pks
                .get(*node as usize)
                .is_some_and(|pk| pk.verify(&msg, sig).is_ok())
        })
    }
}

/// A receipt share revealed in response to a vote (the VOTE_P message).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteShare {
    pub serial: Serial,
    pub code: VoteCode,
    pub share: Share,
    pub share_sig: Signature,
    /// Present in the asynchronous protocol; never in IC.
    pub ucert: Option<Ucert>,
}

/// One certified claim inside an announce batch. Ballots a node holds no
/// certificate for are simply absent from its batch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announce {
    pub serial: Serial,
    pub code: VoteCode,
    pub ucert: Ucert,
}

/// Key of one binary consensus instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BcInstance {
    /// Async mode: was a certified code announced for this ballot.
    Ballot(Serial),
    /// IC mode: was this collector's vote set commonly received.
    Slot(VcId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcMsg {
    BVal { round: u32, value: bool },
    Aux { round: u32, value: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PeerMsg {
    VoteShare(VoteShare),
    Endorse { serial: Serial, code: VoteCode },
    Endorsement { serial: Serial, code: VoteCode, sig: Signature },
    AnnounceBatch(Vec<Announce>),
    RecoverRequest { serials: Vec<Serial> },
    RecoverResponse(Vec<(Serial, VoteCode, Ucert)>),
    ConsensusBatch(Vec<(BcInstance, BcMsg)>),
    /// Reliable-broadcast legs for IC vote-set dissemination. The payload is
    /// the canonical vote-set encoding signed by the slot owner.
    IcValue { slot: VcId, payload: Vec<u8>, sig: Signature },
    IcEcho { slot: VcId, payload: Vec<u8>, sig: Signature },
    IcReady { slot: VcId, digest: [u8; 32] },
}

/// Canonical encoding of a vote set: sorted (serial, code) pairs.
pub fn vote_set_bytes(entries: &[(Serial, VoteCode)]) -> Vec<u8> {
    let mut buf = Vec::new();
    (entries.len() as u32).encode_into(&mut buf);
    for (s, c) in entries {
        s.encode_into(&mut buf);
        c.encode_into(&mut buf);
    }
    buf
}

pub fn vote_set_digest(entries: &[(Serial, VoteCode)]) -> [u8; 32] {
    digest_bytes(&vote_set_bytes(entries))
}

/// Parses and validates the canonical vote-set encoding: strictly
/// ascending serials, one code each.
pub fn parse_vote_set(bytes: &[u8]) -> Option<Vec<(Serial, VoteCode)>> {
    if bytes.len() < 4 {
        return None;
    }
    let count = u32::from_be_bytes(bytes[..4].try_into().ok()?) as usize;
    if bytes.len() != 4 + count * 24 {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    let mut prev: Option<u64> = None;
    for i in 0..count {
        let base = 4 + i * 24;
        let serial = u64::from_be_bytes(bytes[base..base + 8].try_into().ok()?);
        let code = u128::from_be_bytes(bytes[base + 8..base + 24].try_into().ok()?);
        if prev.is_some_and(|p| p >= serial) {
            return None;
        }
        prev = Some(serial);
        out.push((Serial(serial), VoteCode(code)));
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteSetUpload {
    pub vc: VcId,
    pub entries: Vec<(Serial, VoteCode)>,
    pub sig: Signature,
    pub msk_share: Share,
    pub msk_share_sig: Signature,
}

/// What one trustee posts for one row that must be opened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpeningPost {
    pub serial: Serial,
    pub part: PartId,
    pub row: u32,
    /// One share per ciphertext coordinate.
    pub shares: Vec<agora_crypto::vss::PedersenShare>,
}

/// What one trustee posts for one row that stays hidden: its shares of the
/// proof final move, already evaluated at the public challenge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZkSharePost {
    pub serial: Serial,
    pub part: PartId,
    pub row: u32,
    pub evaluated: Vec<curve25519_dalek::scalar::Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrusteePost {
    pub trustee: TrusteeId,
    pub openings: Vec<OpeningPost>,
    pub zk_shares: Vec<ZkSharePost>,
    /// Per-coordinate share of the tally opening: the sum of this trustee's
    /// opening shares over every counted row.
    pub tally_shares: Vec<agora_crypto::vss::PedersenShare>,
    pub sig: Signature,
}

impl TrusteePost {
    /// Digest over everything except the signature itself.
    pub fn content_digest(&self) -> [u8; 32] {
        let mut buf = Vec::new();
        self.trustee.encode_into(&mut buf);
        (self.openings.len() as u32).encode_into(&mut buf);
        for o in &self.openings {
            o.serial.encode_into(&mut buf);
            o.part.encode_into(&mut buf);
            o.row.encode_into(&mut buf);
            o.shares.encode_into(&mut buf);
        }
        (self.zk_shares.len() as u32).encode_into(&mut buf);
        for z in &self.zk_shares {
            z.serial.encode_into(&mut buf);
            z.part.encode_into(&mut buf);
            z.row.encode_into(&mut buf);
            z.evaluated.encode_into(&mut buf);
        }
        self.tally_shares.encode_into(&mut buf);
        digest_bytes(&buf)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BbWrite {
    VoteSet(VoteSetUpload),
    TrusteePost(TrusteePost),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    Init,
    VoteSet,
    Codes,
    Openings,
    ZkProofs,
    Tally,
    Flags,
}

impl SectionKind {
    pub fn id(&self) -> u8 {
        match self {
            SectionKind::Init => 0,
            SectionKind::VoteSet => 1,
            SectionKind::Codes => 2,
            SectionKind::Openings => 3,
            SectionKind::ZkProofs => 4,
            SectionKind::Tally => 5,
            SectionKind::Flags => 6,
        }
    }

    pub fn all() -> [SectionKind; 7] {
        [
            SectionKind::Init,
            SectionKind::VoteSet,
            SectionKind::Codes,
            SectionKind::Openings,
            SectionKind::ZkProofs,
            SectionKind::Tally,
            SectionKind::Flags,
        ]
    }
}

/// The agreed vote set. Equivocating collectors are reported through each
/// replica's flags section instead: replicas can legitimately observe
/// different equivocators, and this section must digest identically
/// everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalVoteSet {
    pub entries: Vec<(Serial, VoteCode)>,
}

/// Decrypted vote codes for every row, published once the master key is
/// reconstructed. Outer order mirrors the init data (sorted serials).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeTable {
    pub rows: Vec<(Serial, [Vec<VoteCode>; 2])>,
}

impl CodeTable {
    pub fn for_serial(&self, serial: Serial) -> Option<&[Vec<VoteCode>; 2]> {
        self.rows
            .binary_search_by_key(&serial, |(s, _)| *s)
            .ok()
            .map(|i| &self.rows[i].1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowOpening {
    pub serial: Serial,
    pub part: PartId,
    pub row: u32,
    pub values: Vec<u64>,
    pub randomness: Vec<curve25519_dalek::scalar::Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowProof {
    pub serial: Serial,
    pub part: PartId,
    pub row: u32,
    pub finals: agora_crypto::zkp::ProofFinalMoves,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TallyRecord {
    pub e_sum: agora_crypto::commit::VectorCommitment,
    /// Opened randomness of e_sum, one scalar per option.
    pub randomness: Vec<curve25519_dalek::scalar::Scalar>,
    pub counts: Vec<u64>,
    pub counted_ballots: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoardFlags {
    pub equivocators: Vec<VcId>,
    /// Set when all collectors submitted but no vote set reached the
    /// finalization threshold; only possible past the fault bound.
    pub finalize_threshold_violation: bool,
    pub alarms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SectionData {
    Init(Arc<BbInit>),
    VoteSet(FinalVoteSet),
    Codes(CodeTable),
    Openings(Vec<RowOpening>),
    ZkProofs(Vec<RowProof>),
    Tally(TallyRecord),
    Flags(BoardFlags),
}

impl SectionData {
    pub fn kind(&self) -> SectionKind {
        match self {
            SectionData::Init(_) => SectionKind::Init,
            SectionData::VoteSet(_) => SectionKind::VoteSet,
            SectionData::Codes(_) => SectionKind::Codes,
            SectionData::Openings(_) => SectionKind::Openings,
            SectionData::ZkProofs(_) => SectionKind::ZkProofs,
            SectionData::Tally(_) => SectionKind::Tally,
            SectionData::Flags(_) => SectionKind::Flags,
        }
    }

    pub fn compute_digest(&self) -> [u8; 32] {
        // The init section is by far the largest and gets hashed by every
        // replica and reader; BbInit memoizes its digest.
        if let SectionData::Init(init) = self {
            return init.digest();
        }
        let mut buf = vec![self.kind().id()];
        match self {
            SectionData::Init(init) => init.encode_into(&mut buf),
            SectionData::VoteSet(v) => {
                buf.extend_from_slice(&vote_set_bytes(&v.entries));
            }
            SectionData::Codes(t) => {
                (t.rows.len() as u32).encode_into(&mut buf);
                for (s, parts) in &t.rows {
                    s.encode_into(&mut buf);
                    parts[0].encode_into(&mut buf);
                    parts[1].encode_into(&mut buf);
                }
            }
            SectionData::Openings(rows) => {
                (rows.len() as u32).encode_into(&mut buf);
                for r in rows {
                    r.serial.encode_into(&mut buf);
                    r.part.encode_into(&mut buf);
                    r.row.encode_into(&mut buf);
                    r.values.encode_into(&mut buf);
                    r.randomness.encode_into(&mut buf);
                }
            }
            SectionData::ZkProofs(rows) => {
                (rows.len() as u32).encode_into(&mut buf);
                for r in rows {
                    r.serial.encode_into(&mut buf);
                    r.part.encode_into(&mut buf);
                    r.row.encode_into(&mut buf);
                    r.finals.encode_into(&mut buf);
                }
            }
            SectionData::Tally(t) => {
                t.e_sum.encode_into(&mut buf);
                t.randomness.encode_into(&mut buf);
                t.counts.encode_into(&mut buf);
                t.counted_ballots.encode_into(&mut buf);
            }
            SectionData::Flags(f) => {
                f.equivocators.encode_into(&mut buf);
                f.finalize_threshold_violation.encode_into(&mut buf);
                f.alarms.encode_into(&mut buf);
            }
        }
        digest_bytes(&buf)
    }
}

/// A bulletin-board reply to a section read. `data` is None while the
/// section is not yet published.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPage {
    pub replica: BbId,
    pub section: SectionKind,
    pub digest: [u8; 32],
    pub data: Option<SectionData>,
    pub sig: Signature,
}

impl Encode for BbInit {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.params.encode_into(out);
        (self.ballots.len() as u32).encode_into(out);
        // Compressing points one at a time dominates the cost of encoding
        // this section at realistic ballot counts, so gather every point and
        // compress them in one batch sharing a single field inversion. The
        // batch encodes each point P as the canonical bytes of 2P; doubling
        // is a bijection in a prime-order group, so the stream pins each
        // point just as firmly.
        let mut points: Vec<&RistrettoPoint> = Vec::new();
        for ballot in self.ballots.values() {
            for part in PartId::both() {
                for row in ballot.part(part) {
                    for c in &row.commitment.0 {
                        points.push(&c.a);
                        points.push(&c.b);
                    }
                    for blk in &row.zk_first.blocks {
                        for pair in &blk.coords {
                            for t in pair {
                                points.push(&t.ta);
                                points.push(&t.tb);
                            }
                        }
                        points.push(&blk.sum.ta);
                        points.push(&blk.sum.tb);
                    }
                    for pc in &row.opening_comms {
                        for p in &pc.0 {
                            points.push(p);
                        }
                    }
                }
            }
        }
        let compressed = RistrettoPoint::double_and_compress_batch(points);
        let mut it = compressed.iter();
        let mut put = |out: &mut Vec<u8>, n: usize| {
            for _ in 0..n {
                out.extend_from_slice(it.next().expect("batch covers every point").as_bytes());
            }
        };
        for (serial, ballot) in &self.ballots {
            serial.encode_into(out);
            for part in PartId::both() {
                let rows = ballot.part(part);
                (rows.len() as u32).encode_into(out);
                for row in rows {
                    row.enc_code.encode_into(out);
                    (row.commitment.0.len() as u32).encode_into(out);
                    put(out, row.commitment.0.len() * 2);
                    (row.zk_first.blocks.len() as u32).encode_into(out);
                    for blk in &row.zk_first.blocks {
                        (blk.coords.len() as u32).encode_into(out);
                        put(out, blk.coords.len() * 4 + 2);
                    }
                    (row.opening_comms.len() as u32).encode_into(out);
                    for pc in &row.opening_comms {
                        (pc.0.len() as u32).encode_into(out);
                        put(out, pc.0.len());
                    }
                }
            }
        }
    }
}

pub fn section_sig_msg(
    election: ElectionId,
    replica: BbId,
    section: SectionKind,
    digest: &[u8; 32],
) -> Vec<u8> {
    sigmsg::bb_section(election, replica.0, section.id(), digest)
}
