//! Third-party election auditing. Works entirely from the public
//! transcript (board sections read off an f_b+1 majority) plus, optionally,
//! audit bundles volunteered by voters: the unused half of a printed ballot
//! and the cast vote code. The checks are designed so that any way of
//! miscounting a ballot trips at least one of them, with the single
//! exception the protocol accepts: a setup authority that forged the row a
//! voter actually used, which each voter's own part choice catches with
//! probability one half.

use std::collections::BTreeMap;
use std::sync::Arc;

use agora_crypto::codec::{digest_bytes, Encode};
use agora_crypto::commit::{self, VectorOpening};
use agora_crypto::zkp;
use serde::{Deserialize, Serialize};

use crate::count::{self, BallotClass};
use crate::ids::{PartId, Serial, VoteCode};
use crate::messages::{CodeTable, RowOpening, RowProof, SectionData, TallyRecord};
use crate::setup::{BbInit, PrintRow, PrintedBallot};

/// The public election record, one entry per board section that matters
/// for verification.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub init: Arc<BbInit>,
    pub final_set: Vec<(Serial, VoteCode)>,
    pub codes: CodeTable,
    pub openings: Vec<RowOpening>,
    pub proofs: Vec<RowProof>,
    pub tally: TallyRecord,
}

impl Transcript {
    /// Assembles a transcript from majority-read section payloads, in any
    /// order. Every section except Flags must be present.
    pub fn from_sections(sections: Vec<SectionData>) -> Result<Transcript, String> {
        let mut init = None;
        let mut final_set = None;
        let mut codes = None;
        let mut openings = None;
        let mut proofs = None;
        let mut tally = None;
        for s in sections {
            match s {
                SectionData::Init(i) => init = Some(i),
                SectionData::VoteSet(f) => final_set = Some(f.entries),
                SectionData::Codes(c) => codes = Some(c),
                SectionData::Openings(o) => openings = Some(o),
                SectionData::ZkProofs(p) => proofs = Some(p),
                SectionData::Tally(t) => tally = Some(t),
                SectionData::Flags(_) => {}
            }
        }
        Ok(Transcript {
            init: init.ok_or("missing init section")?,
            final_set: final_set.ok_or("missing vote set section")?,
            codes: codes.ok_or("missing code table section")?,
            openings: openings.ok_or("missing openings section")?,
            proofs: proofs.ok_or("missing proofs section")?,
            tally: tally.ok_or("missing tally section")?,
        })
    }
}

/// What a voter hands an auditor: her serial, the code she cast, and the
/// complete half of the ballot she did not use. Nothing in it links the
/// cast code to an option.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditBundle {
    pub serial: Serial,
    pub cast_code: VoteCode,
    pub unused_part: PartId,
    pub unused_rows: Vec<PrintRow>,
}

pub fn make_bundle(ballot: &PrintedBallot, voted_part: PartId, cast_code: VoteCode) -> AuditBundle {
    let unused = voted_part.other();
    AuditBundle {
        serial: ballot.serial,
        cast_code,
        unused_part: unused,
        unused_rows: ballot.part(unused).to_vec(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckId {
    /// Every vote code on a ballot is distinct across both parts.
    CodeUniqueness,
    /// The final vote set holds at most one code per ballot part.
    OneCodePerPart,
    /// No ballot has winning codes in both parts.
    OnePartPerBallot,
    /// Every final-set entry matches a row of its ballot's code table.
    VoteAttribution,
    /// Published openings are complete, correct, and exactly the rows the
    /// outcome calls for, each a unit vector, each part a permutation.
    OpeningValidity,
    /// Used parts carry complete, verifying proofs and nothing else does.
    ProofValidity,
    /// A voter's cast code appears in the published vote set.
    BundleCode,
    /// The published record of an unused part matches the printed ballot.
    BundlePart,
    /// Two bundles claim the same serial with different content.
    BundleClash,
    /// The homomorphic sum, its opening, and the counts agree.
    TallyConsistency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub check: CheckId,
    pub serial: Option<Serial>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub ballots: u64,
    pub voted: u64,
    pub bundles: u64,
    pub failures: Vec<AuditFailure>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, check: CheckId, serial: Option<Serial>, detail: impl Into<String>) {
        self.failures.push(AuditFailure { check, serial, detail: detail.into() });
    }
}

pub fn audit_election(t: &Transcript, bundles: &[AuditBundle]) -> AuditReport {
    let mut report = AuditReport::default();
    report.ballots = t.codes.rows.len() as u64;
    report.bundles = bundles.len() as u64;

    check_code_uniqueness(t, &mut report);
    check_final_set(t, &mut report);

    let classes = count::classify_all(&t.final_set, &t.codes);
    report.voted = classes
        .iter()
        .filter(|(_, c)| matches!(c, BallotClass::Voted { .. }))
        .count() as u64;

    check_openings(t, &classes, &mut report);
    check_proofs(t, &classes, &mut report);
    check_tally(t, &classes, &mut report);

    let mut seen: BTreeMap<Serial, &AuditBundle> = BTreeMap::new();
    for b in bundles {
        match seen.get(&b.serial) {
            Some(prev) if *prev != b => {
                report.fail(
                    CheckId::BundleClash,
                    Some(b.serial),
                    "two voters hold conflicting ballots with this serial",
                );
            }
            _ => {
                seen.insert(b.serial, b);
            }
        }
        for f in check_bundle(t, b) {
            report.failures.push(f);
        }
    }
    report
}

fn check_code_uniqueness(t: &Transcript, report: &mut AuditReport) {
    for (serial, parts) in &t.codes.rows {
        let mut all: Vec<VoteCode> = parts.iter().flatten().copied().collect();
        let total = all.len();
        all.sort();
        all.dedup();
        if all.len() != total {
            report.fail(CheckId::CodeUniqueness, Some(*serial), "ballot repeats a vote code");
        }
    }
}

fn check_final_set(t: &Transcript, report: &mut AuditReport) {
    let mut per_ballot: BTreeMap<Serial, Vec<PartId>> = BTreeMap::new();
    for (serial, code) in &t.final_set {
        let Some(parts) = t.codes.for_serial(*serial) else {
            report.fail(CheckId::VoteAttribution, Some(*serial), "winning serial not in the code table");
            continue;
        };
        let Some(part) = PartId::both()
            .into_iter()
            .find(|p| parts[p.index() as usize].contains(code))
        else {
            report.fail(
                CheckId::VoteAttribution,
                Some(*serial),
                format!("winning code {:x} matches no row of the ballot", code.0),
            );
            continue;
        };
        per_ballot.entry(*serial).or_default().push(part);
    }
    for (serial, parts) in per_ballot {
        for p in PartId::both() {
            if parts.iter().filter(|q| **q == p).count() > 1 {
                report.fail(CheckId::OneCodePerPart, Some(serial), "two winning codes in one part");
            }
        }
        if parts.contains(&PartId::A) && parts.contains(&PartId::B) {
            report.fail(CheckId::OnePartPerBallot, Some(serial), "both parts of the ballot voted");
        }
    }
}

/// Which (part, all-m-rows) groups the outcome obliges the trustees to
/// open: both parts of an unvoted ballot, the unused part of a voted one.
fn expected_open_parts(classes: &[(Serial, BallotClass)]) -> BTreeMap<(Serial, PartId), ()> {
    let mut expect = BTreeMap::new();
    for (serial, class) in classes {
        match class {
            BallotClass::Voted { part, .. } => {
                expect.insert((*serial, part.other()), ());
            }
            BallotClass::Unvoted => {
                expect.insert((*serial, PartId::A), ());
                expect.insert((*serial, PartId::B), ());
            }
            BallotClass::Inconsistent => {}
        }
    }
    expect
}

fn check_openings(t: &Transcript, classes: &[(Serial, BallotClass)], report: &mut AuditReport) {
    let key = &t.init.params.commit_key;
    let m = t.init.params.spec.m();
    let expect = expected_open_parts(classes);
    let mut by_part: BTreeMap<(Serial, PartId), BTreeMap<u32, &RowOpening>> = BTreeMap::new();

    for o in &t.openings {
        let Some(ballot) = t.init.ballots.get(&o.serial) else {
            report.fail(CheckId::OpeningValidity, Some(o.serial), "opening for unknown serial");
            continue;
        };
        if o.row as usize >= m {
            report.fail(CheckId::OpeningValidity, Some(o.serial), "opening row out of range");
            continue;
        }
        if !expect.contains_key(&(o.serial, o.part)) {
            report.fail(
                CheckId::OpeningValidity,
                Some(o.serial),
                "opening published for a part the outcome keeps sealed",
            );
            continue;
        }
        let row = &ballot.part(o.part)[o.row as usize];
        let opening = VectorOpening { values: o.values.clone(), randomness: o.randomness.clone() };
        if !commit::verify_opening(key, &row.commitment, &opening) {
            report.fail(
                CheckId::OpeningValidity,
                Some(o.serial),
                format!("row {} of part {:?} does not open to the published values", o.row, o.part),
            );
            continue;
        }
        if o.values.iter().sum::<u64>() != 1 || o.values.iter().any(|v| *v > 1) {
            report.fail(
                CheckId::OpeningValidity,
                Some(o.serial),
                format!("row {} of part {:?} is not a unit vector", o.row, o.part),
            );
            continue;
        }
        if by_part.entry((o.serial, o.part)).or_default().insert(o.row, o).is_some() {
            report.fail(CheckId::OpeningValidity, Some(o.serial), "duplicate opening for one row");
        }
    }

    for (serial, part) in expect.keys() {
        let rows = by_part.get(&(*serial, *part));
        let have = rows.map_or(0, |r| r.len());
        if have != m {
            report.fail(
                CheckId::OpeningValidity,
                Some(*serial),
                format!("part {part:?} opened {have} of {m} rows"),
            );
            continue;
        }
        // every option encoded exactly once across the part
        let mut seen = vec![false; m];
        for o in rows.unwrap().values() {
            let idx = o.values.iter().position(|v| *v == 1).unwrap();
            if seen[idx] {
                report.fail(
                    CheckId::OpeningValidity,
                    Some(*serial),
                    format!("part {:?} encodes one option twice", part),
                );
            }
            seen[idx] = true;
        }
    }
}

fn check_proofs(t: &Transcript, classes: &[(Serial, BallotClass)], report: &mut AuditReport) {
    let key = &t.init.params.commit_key;
    let m = t.init.params.spec.m();
    let challenge = count::challenge_scalars(classes);

    let mut voted_parts: BTreeMap<Serial, PartId> = BTreeMap::new();
    for (serial, class) in classes {
        if let BallotClass::Voted { part, .. } = class {
            voted_parts.insert(*serial, *part);
        }
    }

    let mut by_part: BTreeMap<(Serial, PartId), BTreeMap<u32, &RowProof>> = BTreeMap::new();
    for p in &t.proofs {
        if voted_parts.get(&p.serial) != Some(&p.part) {
            report.fail(
                CheckId::ProofValidity,
                Some(p.serial),
                "proof published for a part that did not vote",
            );
            continue;
        }
        if p.row as usize >= m {
            report.fail(CheckId::ProofValidity, Some(p.serial), "proof row out of range");
            continue;
        }
        if by_part.entry((p.serial, p.part)).or_default().insert(p.row, p).is_some() {
            report.fail(CheckId::ProofValidity, Some(p.serial), "duplicate proof for one row");
        }
    }

    let mut to_check = Vec::new();
    for (serial, part) in &voted_parts {
        let rows = by_part.get(&(*serial, *part));
        let have = rows.map_or(0, |r| r.len());
        if have != m {
            report.fail(
                CheckId::ProofValidity,
                Some(*serial),
                format!("used part carries {have} of {m} proofs"),
            );
            continue;
        }
        let ballot = &t.init.ballots[serial];
        for (row, proof) in rows.unwrap() {
            to_check.push((*serial, *row, &ballot.part(*part)[*row as usize], *proof));
        }
    }

    // One batched check covers the honest case; the per-proof loop only
    // runs to pin failures on ballots once the batch has failed.
    let items: Vec<zkp::ProofToVerify> = to_check
        .iter()
        .map(|(_, _, bb_row, proof)| zkp::ProofToVerify {
            commitment: &bb_row.commitment,
            first: &bb_row.zk_first,
            finals: &proof.finals,
        })
        .collect();
    if zkp::verify_many_with_seed(&proof_batch_seed(t), key, &items, &challenge) {
        return;
    }
    for (serial, row, bb_row, proof) in to_check {
        if !zkp::verify(key, &bb_row.commitment, &bb_row.zk_first, &challenge, &proof.finals) {
            report.fail(
                CheckId::ProofValidity,
                Some(serial),
                format!("proof for row {row} of the used part does not verify"),
            );
        }
    }
}

/// Weights for the batched proof check are drawn from a hash of everything
/// the provers authored: the setup section and the published proofs. That
/// keeps the weights unpredictable at publishing time while letting two
/// auditors of the same transcript agree on every intermediate value.
fn proof_batch_seed(t: &Transcript) -> [u8; 32] {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"proof-batch");
    buf.extend_from_slice(&t.init.digest());
    (t.proofs.len() as u32).encode_into(&mut buf);
    for r in &t.proofs {
        r.serial.encode_into(&mut buf);
        r.part.encode_into(&mut buf);
        r.row.encode_into(&mut buf);
        r.finals.encode_into(&mut buf);
    }
    digest_bytes(&buf)
}

fn check_tally(t: &Transcript, classes: &[(Serial, BallotClass)], report: &mut AuditReport) {
    let key = &t.init.params.commit_key;
    let m = t.init.params.spec.m();
    let mut counted = Vec::new();
    for (serial, class) in classes {
        if let BallotClass::Voted { part, row } = class {
            counted.push(&t.init.ballots[serial].part(*part)[*row as usize].commitment);
        }
    }
    let Ok(e_sum) = commit::fold(&counted, m) else {
        report.fail(CheckId::TallyConsistency, None, "counted commitments have mixed widths");
        return;
    };
    if e_sum != t.tally.e_sum {
        report.fail(
            CheckId::TallyConsistency,
            None,
            "published homomorphic sum differs from the sum of counted rows",
        );
    }
    if t.tally.counted_ballots != counted.len() as u64 {
        report.fail(
            CheckId::TallyConsistency,
            None,
            format!(
                "tally claims {} counted ballots, transcript shows {}",
                t.tally.counted_ballots,
                counted.len()
            ),
        );
    }
    if t.tally.counts.len() != m {
        report.fail(CheckId::TallyConsistency, None, "count vector has the wrong width");
        return;
    }
    if t.tally.counts.iter().sum::<u64>() != counted.len() as u64 {
        report.fail(CheckId::TallyConsistency, None, "counts do not add up to the counted ballots");
    }
    match commit::open_with_randomness(key, &t.tally.e_sum, &t.tally.randomness, counted.len() as u64) {
        Ok(opened) if opened == t.tally.counts => {}
        Ok(_) => report.fail(CheckId::TallyConsistency, None, "published counts are not the opened sum"),
        Err(_) => report.fail(CheckId::TallyConsistency, None, "published randomness does not open the sum"),
    }
}

/// The per-voter verification: her code made the set, and the half ballot
/// she kept sealed reads back exactly as printed. Returns the failures,
/// empty when her ballot checks out.
pub fn check_bundle(t: &Transcript, b: &AuditBundle) -> Vec<AuditFailure> {
    let mut fails = Vec::new();
    let m = t.init.params.spec.m();
    if t.final_set.binary_search(&(b.serial, b.cast_code)).is_err() {
        fails.push(AuditFailure {
            check: CheckId::BundleCode,
            serial: Some(b.serial),
            detail: "cast vote code missing from the published vote set".into(),
        });
    }
    let Some(parts) = t.codes.for_serial(b.serial) else {
        fails.push(AuditFailure {
            check: CheckId::BundlePart,
            serial: Some(b.serial),
            detail: "ballot serial missing from the code table".into(),
        });
        return fails;
    };
    let published_codes = &parts[b.unused_part.index() as usize];
    let printed_codes: Vec<VoteCode> = b.unused_rows.iter().map(|r| r.code).collect();
    if *published_codes != printed_codes {
        fails.push(AuditFailure {
            check: CheckId::BundlePart,
            serial: Some(b.serial),
            detail: "decrypted codes of the unused part differ from the printed ballot".into(),
        });
    }
    if b.unused_rows.len() != m {
        fails.push(AuditFailure {
            check: CheckId::BundlePart,
            serial: Some(b.serial),
            detail: "printed part does not list every option".into(),
        });
        return fails;
    }
    for (r, printed) in b.unused_rows.iter().enumerate() {
        let opened = t
            .openings
            .iter()
            .find(|o| o.serial == b.serial && o.part == b.unused_part && o.row == r as u32);
        let Some(opened) = opened else {
            fails.push(AuditFailure {
                check: CheckId::BundlePart,
                serial: Some(b.serial),
                detail: format!("row {r} of the unused part was never opened"),
            });
            continue;
        };
        let idx = opened.values.iter().position(|v| *v == 1);
        if idx != Some(printed.option_index as usize) {
            fails.push(AuditFailure {
                check: CheckId::BundlePart,
                serial: Some(b.serial),
                detail: format!(
                    "row {r} of the unused part opens to a different option than printed"
                ),
            });
        }
    }
    fails
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::Board;
    use crate::ids::{BbId, VcId};
    use crate::messages::{vote_set_digest, BbWrite, SectionKind, VoteSetUpload};
    use crate::params::ElectionSpec;
    use crate::setup::{
        forge_malicious_setup, generate_election, ElectionArtifacts, TamperPlan, TamperSwap,
    };
    use crate::sigmsg;
    use crate::trustee::Trustee;
    use agora_crypto::rng::Prf;

    fn spec(n: u64) -> ElectionSpec {
        ElectionSpec {
            options: vec!["ash".into(), "birch".into(), "cedar".into()],
            n_ballots: n,
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

    /// Runs the whole post-election pipeline on one board and reads the
    /// transcript back out of it.
    fn transcript(a: &ElectionArtifacts, entries: &[(Serial, VoteCode)]) -> Transcript {
        let mut board = Board::new(BbId(0), a.keys.bb[0].clone(), Arc::new(a.bb_init.clone()));
        for vc in 0..4u32 {
            let digest = vote_set_digest(entries);
            let sig = a.keys.vc[vc as usize]
                .sign(&sigmsg::vote_set(a.params.election, VcId(vc), &digest));
            board.handle_write(BbWrite::VoteSet(VoteSetUpload {
                vc: VcId(vc),
                entries: entries.to_vec(),
                sig,
                msk_share: a.vc_bundles[vc as usize].msk_share,
                msk_share_sig: a.vc_bundles[vc as usize].msk_share_sig,
            }));
        }
        let (final_set, codes) = {
            let Some(SectionData::VoteSet(f)) = board.section(SectionKind::VoteSet) else { panic!() };
            let Some(SectionData::Codes(c)) = board.section(SectionKind::Codes) else {
                panic!("{:?}", board.alarms())
            };
            (f.entries.clone(), c.clone())
        };
        for t in 0..3 {
            let trustee = Trustee::new(
                a.params.clone(),
                a.keys.trustees[t].clone(),
                a.trustee_bundles[t].clone(),
            );
            board.handle_write(BbWrite::TrusteePost(trustee.build_post(&final_set, &codes).unwrap()));
        }
        assert!(board.alarms().is_empty(), "{:?}", board.alarms());
        let sections = SectionKind::all()
            .into_iter()
            .filter_map(|k| board.section(k).cloned())
            .collect();
        Transcript::from_sections(sections).unwrap()
    }

    fn cast(a: &ElectionArtifacts, idx: usize, part: PartId, row: usize) -> (Serial, VoteCode) {
        (a.ballots[idx].serial, a.ballots[idx].part(part)[row].code)
    }

    #[test]
    fn an_honest_election_passes_every_check() {
        let a = generate_election(&spec(5), &Prf::from_u64(90)).unwrap();
        let mut entries = vec![
            cast(&a, 0, PartId::A, 0),
            cast(&a, 1, PartId::B, 1),
            cast(&a, 2, PartId::B, 2),
        ];
        entries.sort();
        let t = transcript(&a, &entries);
        let bundles: Vec<AuditBundle> = [(0usize, PartId::A), (1, PartId::B), (2, PartId::B)]
            .iter()
            .map(|(i, p)| {
                let serial = a.ballots[*i].serial;
                let (_, code) = *entries.iter().find(|(s, _)| *s == serial).unwrap();
                make_bundle(&a.ballots[*i], *p, code)
            })
            .collect();
        let report = audit_election(&t, &bundles);
        assert!(report.ok(), "{:#?}", report.failures);
        assert_eq!(report.voted, 3);
        assert_eq!(report.ballots, 5);
    }

    #[test]
    fn a_dropped_vote_fails_the_voters_bundle_check() {
        let a = generate_election(&spec(3), &Prf::from_u64(91)).unwrap();
        let kept = cast(&a, 0, PartId::A, 1);
        let t = transcript(&a, &[kept]);
        // ballot 1's voter cast part B row 0, but the collectors dropped it
        let dropped = cast(&a, 1, PartId::B, 0);
        let bundle = make_bundle(&a.ballots[1], PartId::B, dropped.1);
        let fails = check_bundle(&t, &bundle);
        assert!(fails.iter().any(|f| f.check == CheckId::BundleCode), "{fails:#?}");
    }

    #[test]
    fn a_forged_setup_is_caught_by_the_unused_part_audit() {
        let mut a = generate_election(&spec(3), &Prf::from_u64(92)).unwrap();
        let victim = a.ballots[0].serial;
        forge_malicious_setup(
            &mut a,
            &TamperPlan {
                swaps: vec![TamperSwap { serial: victim, part: PartId::A, row_a: 0, row_b: 2 }],
            },
        );
        // voter votes part B, so tampered part A is the audited one
        let entry = cast(&a, 0, PartId::B, 0);
        let t = transcript(&a, &[entry]);
        // without the bundle the transcript looks clean
        assert!(audit_election(&t, &[]).ok());
        let bundle = make_bundle(&a.ballots[0], PartId::B, entry.1);
        let fails = check_bundle(&t, &bundle);
        assert!(
            fails.iter().any(|f| f.check == CheckId::BundlePart
                && f.detail.contains("different option")),
            "{fails:#?}"
        );
        // had the voter used part A instead, her audit of part B sees nothing
        let entry_a = cast(&a, 0, PartId::A, 1);
        let t2 = transcript(&a, &[entry_a]);
        let bundle_b = make_bundle(&a.ballots[0], PartId::A, entry_a.1);
        assert!(check_bundle(&t2, &bundle_b).is_empty());
    }

    #[test]
    fn tampered_sections_trip_the_named_checks() {
        let a = generate_election(&spec(3), &Prf::from_u64(93)).unwrap();
        let entries = vec![cast(&a, 1, PartId::A, 2)];
        let honest = transcript(&a, &entries);

        // miscounted result
        let mut t = honest.clone();
        t.tally.counts[0] += 1;
        let report = audit_election(&t, &[]);
        assert!(report.failures.iter().all(|f| f.check == CheckId::TallyConsistency));
        assert!(!report.ok());

        // an opening replaced by another row's (still a valid unit vector)
        let mut t = honest.clone();
        let (i, j) = (0, 1);
        let vals = t.openings[i].values.clone();
        let rand = t.openings[i].randomness.clone();
        t.openings[i].values = t.openings[j].values.clone();
        t.openings[i].randomness = t.openings[j].randomness.clone();
        t.openings[j].values = vals;
        t.openings[j].randomness = rand;
        assert!(audit_election(&t, &[])
            .failures
            .iter()
            .any(|f| f.check == CheckId::OpeningValidity));

        // a proof transplanted between rows
        let mut t = honest.clone();
        t.proofs.swap(0, 1);
        let f0 = t.proofs[0].row;
        t.proofs[0].row = t.proofs[1].row;
        t.proofs[1].row = f0;
        assert!(audit_election(&t, &[])
            .failures
            .iter()
            .any(|f| f.check == CheckId::ProofValidity));

        // a second winning code smuggled into the final set
        let mut t = honest.clone();
        let other = cast(&a, 1, PartId::B, 0);
        t.final_set.push(other);
        t.final_set.sort();
        assert!(audit_election(&t, &[])
            .failures
            .iter()
            .any(|f| f.check == CheckId::OnePartPerBallot));

        // a vote for a code that no ballot row carries
        let mut t = honest.clone();
        t.final_set.push((a.ballots[0].serial, VoteCode(0xdead)));
        t.final_set.sort();
        assert!(audit_election(&t, &[])
            .failures
            .iter()
            .any(|f| f.check == CheckId::VoteAttribution));
    }

    #[test]
    fn clashing_bundles_for_one_serial_are_flagged() {
        let a = generate_election(&spec(3), &Prf::from_u64(94)).unwrap();
        let entry = cast(&a, 0, PartId::A, 0);
        let t = transcript(&a, &[entry]);
        let real = make_bundle(&a.ballots[0], PartId::A, entry.1);
        let mut clash = make_bundle(&a.ballots[1], PartId::A, entry.1);
        clash.serial = a.ballots[0].serial;
        let report = audit_election(&t, &[real, clash]);
        assert!(report.failures.iter().any(|f| f.check == CheckId::BundleClash));
    }
}
