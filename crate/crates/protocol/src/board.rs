//! A bulletin board replica. Replicas never talk to each other: each one
//! independently collects the collectors' signed vote sets, reconstructs
//! the code-table master key from the uploaded shares, and folds the
//! trustees' posts into the opened commitments, the finalized proofs and
//! the homomorphic tally. Readers get signed section pages and compare
//! digests across replicas; agreement between f+1 of them settles a read.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use agora_crypto::codec::digest_bytes;
use agora_crypto::commit::{self, VectorCommitment};
use agora_crypto::group::scalar_to_u128;
use agora_crypto::sign::KeyPair;
use agora_crypto::symenc;
use agora_crypto::vss::{self, PedersenShare, Share};
use agora_crypto::zkp;
use curve25519_dalek::scalar::Scalar;

use crate::count::{self, BallotClass};
use crate::ids::{BbId, PartId, Serial, TrusteeId, VcId, VoteCode};
use crate::messages::{
    section_sig_msg, vote_set_digest, BbWrite, BoardFlags, CodeTable, Dest, FinalVoteSet, Outbox,
    Payload, RowOpening, RowProof, SectionData, SectionKind, SectionPage, TallyRecord,
    TrusteePost, VoteSetUpload,
};
use crate::setup::{BbInit, BbRow};
use crate::sigmsg;

#[derive(Clone, Debug)]
pub struct Board {
    pub me: BbId,
    key: KeyPair,
    init: Arc<BbInit>,
    sections: BTreeMap<u8, (SectionData, [u8; 32])>,
    submissions: BTreeMap<u32, VoteSetUpload>,
    equivocators: BTreeSet<VcId>,
    finalize_violation: bool,
    final_set: Option<Vec<(Serial, VoteCode)>>,
    code_table: Option<CodeTable>,
    posts: BTreeMap<TrusteeId, TrusteePost>,
    pending_posts: Vec<TrusteePost>,
    derived: bool,
    alarms: Vec<String>,
}

impl Board {
    pub fn new(me: BbId, key: KeyPair, init: Arc<BbInit>) -> Self {
        let mut b = Board {
            me,
            key,
            init,
            sections: BTreeMap::new(),
            submissions: BTreeMap::new(),
            equivocators: BTreeSet::new(),
            finalize_violation: false,
            final_set: None,
            code_table: None,
            posts: BTreeMap::new(),
            pending_posts: Vec::new(),
            derived: false,
            alarms: Vec::new(),
        };
        b.publish(SectionData::Init(b.init.clone()));
        b.refresh_flags();
        b
    }

    pub fn section(&self, kind: SectionKind) -> Option<&SectionData> {
        self.sections.get(&kind.id()).map(|(d, _)| d)
    }

    pub fn section_digest(&self, kind: SectionKind) -> Option<[u8; 32]> {
        self.sections.get(&kind.id()).map(|(_, d)| *d)
    }

    pub fn alarms(&self) -> &[String] {
        &self.alarms
    }

    fn params(&self) -> &crate::params::PublicParams {
        &self.init.params
    }

    fn publish(&mut self, data: SectionData) {
        let digest = data.compute_digest();
        self.sections.insert(data.kind().id(), (data, digest));
    }

    fn refresh_flags(&mut self) {
        self.publish(SectionData::Flags(BoardFlags {
            equivocators: self.equivocators.iter().copied().collect(),
            finalize_threshold_violation: self.finalize_violation,
            alarms: self.alarms.clone(),
        }));
    }

    fn alarm(&mut self, text: String) {
        self.alarms.push(text);
        self.refresh_flags();
    }

    // ------------------------------------------------------------------
    // Writes
    // ------------------------------------------------------------------

    pub fn handle_write(&mut self, w: BbWrite) {
        match w {
            BbWrite::VoteSet(up) => self.accept_vote_set(up),
            BbWrite::TrusteePost(post) => self.accept_trustee_post(post),
        }
    }

    fn accept_vote_set(&mut self, up: VoteSetUpload) {
        let params = self.params();
        let Some(pk) = params.vc_pks.get(up.vc.0 as usize) else { return };
        let digest = vote_set_digest(&up.entries);
        if pk
            .verify(&sigmsg::vote_set(params.election, up.vc, &digest), &up.sig)
            .is_err()
        {
            return;
        }
        if !self.entries_well_formed(&up.entries) {
            return;
        }
        match self.submissions.get(&up.vc.0) {
            Some(first) if first.entries != up.entries => {
                self.equivocators.insert(up.vc);
                self.refresh_flags();
                return;
            }
            Some(_) => return,
            None => {
                self.submissions.insert(up.vc.0, up);
            }
        }
        self.try_finalize_vote_set();
        self.try_decode_codes();
        self.try_absorb_pending();
    }

    fn entries_well_formed(&self, entries: &[(Serial, VoteCode)]) -> bool {
        let mut last = None;
        for (s, _) in entries {
            if !self.init.ballots.contains_key(s) || last.is_some_and(|p| p >= *s) {
                return false;
            }
            last = Some(*s);
        }
        true
    }

    fn try_finalize_vote_set(&mut self) {
        if self.final_set.is_some() {
            return;
        }
        let threshold = self.params().spec.bb_finalize_threshold();
        let mut groups: BTreeMap<[u8; 32], Vec<u32>> = BTreeMap::new();
        for (vc, up) in &self.submissions {
            groups.entry(vote_set_digest(&up.entries)).or_default().push(*vc);
        }
        if let Some((_, members)) = groups.iter().find(|(_, m)| m.len() >= threshold) {
            let entries = self.submissions[&members[0]].entries.clone();
            self.final_set = Some(entries.clone());
            self.publish(SectionData::VoteSet(FinalVoteSet { entries }));
            return;
        }
        if self.submissions.len() == self.params().spec.n_vc as usize {
            self.finalize_violation = true;
            self.alarm("vote-set submissions exhausted without agreement".into());
        }
    }

    /// Reconstructs the code-table master key from the uploaded shares,
    /// trying share subsets until one matches the published key hash.
    fn try_decode_codes(&mut self) {
        if self.code_table.is_some() || self.final_set.is_none() {
            return;
        }
        let params = self.params();
        let k = params.spec.vc_share_threshold();
        let mut shares: Vec<Share> = Vec::new();
        for up in self.submissions.values() {
            let ok = params
                .ea_pk
                .verify(
                    &sigmsg::msk_share(params.election, &up.msk_share),
                    &up.msk_share_sig,
                )
                .is_ok();
            if ok && !shares.iter().any(|s| s.index == up.msk_share.index) {
                shares.push(up.msk_share);
            }
        }
        if shares.len() < k {
            return;
        }
        let msk_hash = params.msk_hash;
        let mut msk = None;
        for subset in k_subsets(shares.len(), k) {
            let picked: Vec<Share> = subset.iter().map(|&i| shares[i]).collect();
            let Ok(secret) = vss::reconstruct(&picked, k) else { continue };
            let Ok(candidate) = scalar_to_u128(&secret) else { continue };
            if digest_bytes(&candidate.to_be_bytes()) == msk_hash {
                msk = Some(candidate);
                break;
            }
        }
        let Some(msk) = msk else {
            self.alarm("no key-share subset matches the master key hash".into());
            return;
        };
        let init = self.init.clone();
        let mut rows = Vec::with_capacity(init.ballots.len());
        for (serial, ballot) in &init.ballots {
            let mut parts: [Vec<VoteCode>; 2] = [Vec::new(), Vec::new()];
            for part in PartId::both() {
                for row in ballot.part(part) {
                    match symenc::decrypt(msk, &row.enc_code) {
                        Ok(pt) if pt.len() == 16 => {
                            let mut b = [0u8; 16];
                            b.copy_from_slice(&pt);
                            parts[part.index() as usize].push(VoteCode(u128::from_be_bytes(b)));
                        }
                        _ => {
                            self.alarm(format!("undecryptable code for ballot {}", serial.0));
                            return;
                        }
                    }
                }
            }
            rows.push((*serial, parts));
        }
        let table = CodeTable { rows };
        self.code_table = Some(table.clone());
        self.publish(SectionData::Codes(table));
    }

    fn try_absorb_pending(&mut self) {
        if self.code_table.is_none() {
            return;
        }
        for post in std::mem::take(&mut self.pending_posts) {
            self.accept_trustee_post(post);
        }
    }

    // ------------------------------------------------------------------
    // Trustee posts
    // ------------------------------------------------------------------

    fn accept_trustee_post(&mut self, post: TrusteePost) {
        let params = self.params();
        let Some(pk) = params.trustee_pks.get(post.trustee.0 as usize) else { return };
        let msg = sigmsg::trustee_post(params.election, post.trustee, &post.content_digest());
        if pk.verify(&msg, &post.sig).is_err() {
            return;
        }
        if self.code_table.is_none() {
            // The trustee may have read the final set off faster replicas.
            self.pending_posts.push(post);
            return;
        }
        if self.posts.contains_key(&post.trustee) {
            return;
        }
        if let Err(why) = self.validate_post(&post) {
            self.alarm(format!("trustee {} post rejected: {why}", post.trustee.0));
            return;
        }
        self.posts.insert(post.trustee, post);
        self.try_derive_outputs();
    }

    fn classes(&self) -> Vec<(Serial, BallotClass)> {
        count::classify_all(
            self.final_set.as_deref().expect("final set before classes"),
            self.code_table.as_ref().expect("code table before classes"),
        )
    }

    /// Rows whose commitments enter the tally: the voted row of every
    /// cleanly classified voted ballot.
    fn counted_rows(&self) -> Vec<(Serial, PartId, u32)> {
        self.classes()
            .iter()
            .filter_map(|(s, c)| match c {
                BallotClass::Voted { part, row } => Some((*s, *part, *row)),
                _ => None,
            })
            .collect()
    }

    /// Rows the trustees must open outright: both parts of unvoted ballots
    /// and the unused part of voted ones.
    fn rows_to_open(&self) -> Vec<(Serial, PartId)> {
        let mut out = Vec::new();
        for (serial, class) in self.classes() {
            match class {
                BallotClass::Voted { part, .. } => out.push((serial, part.other())),
                BallotClass::Unvoted => {
                    out.push((serial, PartId::A));
                    out.push((serial, PartId::B));
                }
                BallotClass::Inconsistent => {}
            }
        }
        out
    }

    fn bb_row(&self, serial: Serial, part: PartId, row: u32) -> &BbRow {
        &self.init.ballots[&serial].part(part)[row as usize]
    }

    /// Seed for batched share verification. The weights must look random to
    /// whoever authored the shares, so the seed hashes in the setup section
    /// and every post the shares came from; changing any share changes the
    /// weights along with it.
    fn batch_seed(&self, label: &[u8], posts: &[&TrusteePost]) -> [u8; 32] {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(label);
        bytes.extend_from_slice(&self.section_digest(SectionKind::Init).expect("init section"));
        if let Some(d) = self.section_digest(SectionKind::VoteSet) {
            bytes.extend_from_slice(&d);
        }
        for p in posts {
            bytes.extend_from_slice(&p.content_digest());
        }
        digest_bytes(&bytes)
    }

    fn validate_post(&self, post: &TrusteePost) -> Result<(), String> {
        let params = self.params();
        let m = params.spec.m();
        let kappa = params.spec.kappa();
        let want_index = post.trustee.0 + 1;
        let seed = self.batch_seed(b"post-shares", &[post]);

        let mut share_batch: Vec<(&vss::PedersenCommitments, &PedersenShare)> = Vec::new();
        let mut open_have: BTreeSet<(Serial, PartId, u32)> = BTreeSet::new();
        for op in &post.openings {
            if op.shares.len() != m {
                return Err("opening share count".into());
            }
            let Some(ballot) = self.init.ballots.get(&op.serial) else {
                return Err("opening for unknown ballot".into());
            };
            if op.row as usize >= ballot.part(op.part).len() {
                return Err("opening row out of range".into());
            }
            let bb = self.bb_row(op.serial, op.part, op.row);
            for (coord, share) in op.shares.iter().enumerate() {
                if share.index != want_index {
                    return Err("opening share fails verification".into());
                }
                share_batch.push((&bb.opening_comms[coord], share));
            }
            open_have.insert((op.serial, op.part, op.row));
        }
        if !vss::pedersen_verify_batch_with_seed(&seed, &params.pedersen, &share_batch) {
            return Err("opening share fails verification".into());
        }
        for (serial, part) in self.rows_to_open() {
            for row in 0..m as u32 {
                if !open_have.contains(&(serial, part, row)) {
                    return Err(format!("missing opening for ballot {}", serial.0));
                }
            }
        }

        let mut zk_have: BTreeSet<(Serial, PartId, u32)> = BTreeSet::new();
        for zs in &post.zk_shares {
            if zs.evaluated.len() != kappa * zkp::finals_per_block(m) {
                return Err("proof share length".into());
            }
            zk_have.insert((zs.serial, zs.part, zs.row));
        }
        for (serial, part, _) in self.counted_rows() {
            for row in 0..m as u32 {
                if !zk_have.contains(&(serial, part, row)) {
                    return Err(format!("missing proof share for ballot {}", serial.0));
                }
            }
        }

        let counted = self.counted_rows();
        if counted.is_empty() {
            if !post.tally_shares.is_empty() {
                return Err("tally shares for an empty count".into());
            }
            return Ok(());
        }
        if post.tally_shares.len() != m {
            return Err("tally share count".into());
        }
        let mut combined = Vec::with_capacity(m);
        for (coord, share) in post.tally_shares.iter().enumerate() {
            if share.index != want_index {
                return Err("tally share index".into());
            }
            let comms: Vec<_> = counted
                .iter()
                .map(|(s, p, r)| &self.bb_row(*s, *p, *r).opening_comms[coord])
                .collect();
            combined.push(vss::pedersen_combine(&comms));
        }
        let tally_batch: Vec<(&vss::PedersenCommitments, &PedersenShare)> =
            combined.iter().zip(&post.tally_shares).collect();
        if !vss::pedersen_verify_batch_with_seed(&seed, &params.pedersen, &tally_batch) {
            return Err("tally share fails verification".into());
        }
        Ok(())
    }

    fn try_derive_outputs(&mut self) {
        let h = self.params().spec.h_trustee as usize;
        if self.derived || self.posts.len() < h {
            return;
        }
        let Some(openings) = self.derive_openings() else { return };
        let Some(zk) = self.derive_proofs() else { return };
        let Some(tally) = self.derive_tally() else { return };
        self.derived = true;
        self.publish(SectionData::Openings(openings));
        self.publish(SectionData::ZkProofs(zk));
        self.publish(SectionData::Tally(tally));
    }

    fn derive_openings(&mut self) -> Option<Vec<RowOpening>> {
        let params = self.params().clone();
        let h = params.spec.h_trustee as usize;
        let m = params.spec.m();
        let mut new_alarms = Vec::new();
        let mut failed = false;
        let mut out = Vec::new();
        {
            // Index each post's openings up front; scanning per row would be
            // quadratic in the number of ballots.
            let by_row: Vec<BTreeMap<(Serial, PartId, u32), &Vec<PedersenShare>>> = self
                .posts
                .values()
                .map(|p| {
                    p.openings
                        .iter()
                        .map(|o| ((o.serial, o.part, o.row), &o.shares))
                        .collect()
                })
                .collect();
            'rows: for (serial, part) in self.rows_to_open() {
                for row in 0..m as u32 {
                    let mut randomness = Vec::with_capacity(m);
                    for coord in 0..m {
                        let shares: Vec<PedersenShare> = by_row
                            .iter()
                            .filter_map(|post| post.get(&(serial, part, row)).map(|s| s[coord]))
                            .take(h)
                            .collect();
                        let Ok((secret, _)) = vss::pedersen_reconstruct(&shares, h) else {
                            new_alarms.push(format!("opening reconstruction failed for {}", serial.0));
                            failed = true;
                            break 'rows;
                        };
                        randomness.push(secret);
                    }
                    let bb = self.bb_row(serial, part, row);
                    match commit::open_with_randomness(&params.commit_key, &bb.commitment, &randomness, 1)
                    {
                        Ok(values) => out.push(RowOpening { serial, part, row, values, randomness }),
                        Err(_) => {
                            new_alarms.push(format!(
                                "commitment for ballot {} does not open under the posted shares",
                                serial.0
                            ));
                            out.push(RowOpening { serial, part, row, values: Vec::new(), randomness });
                        }
                    }
                }
            }
        }
        for a in new_alarms {
            self.alarm(a);
        }
        if failed {
            return None;
        }
        Some(out)
    }

    /// Rebuilds each finalized proof from the trustees' evaluated shares.
    /// The honest path reconstructs every proof from the first h posts and
    /// checks the lot in one batch; only when that fails does it fall back
    /// to trying holder subsets row by row until each proof verifies.
    fn derive_proofs(&mut self) -> Option<Vec<RowProof>> {
        let params = self.params().clone();
        let h = params.spec.h_trustee as usize;
        let m = params.spec.m();
        let kappa = params.spec.kappa();
        let challenge = count::challenge_scalars(&self.classes());
        let trustees: Vec<TrusteeId> = self.posts.keys().copied().collect();
        let n_scalars = kappa * zkp::finals_per_block(m);
        let mut rows: Vec<(Serial, PartId, u32)> = Vec::new();
        for (serial, part, _) in self.counted_rows() {
            for row in 0..m as u32 {
                rows.push((serial, part, row));
            }
        }
        let seed = self.batch_seed(b"derived-proofs", &self.posts.values().collect::<Vec<_>>());

        let mut new_alarms = Vec::new();
        let mut failed = false;
        let mut out = Vec::new();
        {
            let by_row: Vec<BTreeMap<(Serial, PartId, u32), &Vec<Scalar>>> = self
                .posts
                .values()
                .map(|p| {
                    p.zk_shares
                        .iter()
                        .map(|z| ((z.serial, z.part, z.row), &z.evaluated))
                        .collect()
                })
                .collect();
            let finals_for = |subset: &[usize], key: &(Serial, PartId, u32)| {
                let indices: Vec<u32> = subset.iter().map(|&t| trustees[t].0 + 1).collect();
                let lambda = vss::lagrange_coefficients(&indices, h).ok()?;
                let holders: Vec<&Vec<Scalar>> = subset.iter().map(|&t| by_row[t][key]).collect();
                let scalars: Vec<Scalar> = (0..n_scalars)
                    .map(|i| holders.iter().zip(&lambda).map(|(hv, l)| hv[i] * l).sum())
                    .collect();
                zkp::final_moves_from_scalars(m, kappa, &scalars).ok()
            };

            let first_subset: Vec<usize> = (0..h).collect();
            let fast: Option<Vec<zkp::ProofFinalMoves>> =
                rows.iter().map(|key| finals_for(&first_subset, key)).collect();
            if let Some(fast) = fast {
                let items: Vec<zkp::ProofToVerify> = rows
                    .iter()
                    .zip(&fast)
                    .map(|(&(s, p, r), finals)| {
                        let bb = self.bb_row(s, p, r);
                        zkp::ProofToVerify { commitment: &bb.commitment, first: &bb.zk_first, finals }
                    })
                    .collect();
                if zkp::verify_many_with_seed(&seed, &params.commit_key, &items, &challenge) {
                    out = rows
                        .iter()
                        .zip(fast)
                        .map(|(&(serial, part, row), finals)| RowProof { serial, part, row, finals })
                        .collect();
                }
            }

            if out.len() != rows.len() {
                out.clear();
                for key in &rows {
                    let mut found = None;
                    for subset in k_subsets(trustees.len(), h) {
                        let Some(finals) = finals_for(&subset, key) else { continue };
                        let bb = self.bb_row(key.0, key.1, key.2);
                        if zkp::verify(&params.commit_key, &bb.commitment, &bb.zk_first, &challenge, &finals)
                        {
                            found = Some(finals);
                            break;
                        }
                    }
                    match found {
                        Some(finals) => {
                            out.push(RowProof { serial: key.0, part: key.1, row: key.2, finals });
                        }
                        None => {
                            new_alarms
                                .push(format!("no proof-share subset verifies for ballot {}", key.0 .0));
                            failed = true;
                            break;
                        }
                    }
                }
            }
        }
        for a in new_alarms {
            self.alarm(a);
        }
        if failed {
            return None;
        }
        Some(out)
    }

    fn derive_tally(&mut self) -> Option<TallyRecord> {
        let params = self.params().clone();
        let h = params.spec.h_trustee as usize;
        let m = params.spec.m();
        let counted = self.counted_rows();
        let commitments: Vec<&VectorCommitment> = counted
            .iter()
            .map(|(s, p, r)| &self.init.ballots[s].part(*p)[*r as usize].commitment)
            .collect();
        let e_sum = match commit::fold(&commitments, m) {
            Ok(c) => c,
            Err(_) => {
                self.alarm("tally fold failed".into());
                return None;
            }
        };
        let randomness: Vec<Scalar> = if counted.is_empty() {
            vec![Scalar::ZERO; m]
        } else {
            let mut rs = Vec::with_capacity(m);
            for coord in 0..m {
                let shares: Vec<PedersenShare> = self
                    .posts
                    .values()
                    .map(|p| p.tally_shares[coord])
                    .take(h)
                    .collect();
                let Ok((secret, _)) = vss::pedersen_reconstruct(&shares, h) else {
                    self.alarm("tally randomness reconstruction failed".into());
                    return None;
                };
                rs.push(secret);
            }
            rs
        };
        let counted_ballots = counted.len() as u64;
        let counts = match commit::open_with_randomness(
            &params.commit_key,
            &e_sum,
            &randomness,
            counted_ballots,
        ) {
            Ok(c) => c,
            Err(_) => {
                self.alarm("tally does not open under the reconstructed randomness".into());
                return None;
            }
        };
        if counts.iter().sum::<u64>() != counted_ballots {
            self.alarm("tally counts do not add up to the counted ballots".into());
            return None;
        }
        Some(TallyRecord { e_sum, randomness, counts, counted_ballots })
    }

    // ------------------------------------------------------------------
    // Reads
    // ------------------------------------------------------------------

    pub fn handle_read(&self, requester: Dest, kind: SectionKind, out: &mut Outbox) {
        out.send(requester, Payload::BbPage(self.page(kind)));
    }

    pub fn page(&self, kind: SectionKind) -> SectionPage {
        let (digest, data) = match self.sections.get(&kind.id()) {
            Some((data, digest)) => (*digest, Some(data.clone())),
            None => ([0u8; 32], None),
        };
        let sig = self.key.sign(&section_sig_msg(
            self.params().election,
            self.me,
            kind,
            &digest,
        ));
        SectionPage { replica: self.me, section: kind, digest, data, sig }
    }
}

/// All size-k index subsets of 0..n in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance the rightmost index that still has room
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
