//! The vote collector node. Handles voter submissions during election
//! hours, reveals receipt shares to peers, reconstructs receipts at the
//! share threshold, then drives vote-set consensus in one of two modes:
//!
//! * synchronized: every node reliably broadcasts its local vote set after
//!   the election ends, a barrier separates dissemination from agreement,
//!   and per-slot binary consensus fixes which sets count; the surviving
//!   sets are cross-tabulated into one final set.
//! * asynchronous: casting a vote first gathers an endorsement quorum into
//!   a uniqueness certificate, so at most one code per ballot can ever be
//!   certified; after the end of voting, nodes exchange certified claims
//!   and run per-ballot binary consensus, recovering missing codes from
//!   peers that hold them.
//!
//! Everything is event-driven and deterministic; outgoing messages and
//! timer requests go through the [`Outbox`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use agora_crypto::codec::digest_bytes;
use agora_crypto::group::scalar_to_u64;
use agora_crypto::hashcommit;
use agora_crypto::sign::KeyPair;
use agora_crypto::vss::{self, Share};

use crate::consensus::{instance_coin, Binary, Rbc, RbcOut};
use crate::ids::{Mode, PartId, Receipt, Serial, VcId, VoteCode, VoterId};
use crate::messages::{
    parse_vote_set, vote_set_bytes, vote_set_digest, Announce, BbWrite, BcInstance, BcMsg, Dest,
    Outbox, Payload, PeerMsg, TimerKind, Ucert, VoteFeedback, VoteSetUpload, VoteShare,
    VoteSubmit,
};
use crate::params::PublicParams;
use crate::setup::{VcBundle, VcRow};
use crate::sigmsg;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Status {
    #[default]
    NotVoted,
    Pending,
    Voted,
}

#[derive(Clone, Debug, Default)]
struct BallotRec {
    status: Status,
    used: Option<(PartId, u32, VoteCode)>,
    /// Collected receipt shares, by share index.
    lrs: BTreeMap<u32, Share>,
    receipt: Option<Receipt>,
    ucert: Option<Ucert>,
    reply_to: BTreeSet<VoterId>,
}

#[derive(Clone, Debug)]
struct EndorseRace {
    code: VoteCode,
    sigs: BTreeMap<u32, agora_crypto::sign::Signature>,
    sources: BTreeSet<VoterId>,
}

#[derive(Clone, Debug)]
pub struct Collector {
    pub me: VcId,
    mode: Mode,
    params: PublicParams,
    key: KeyPair,
    bundle: VcBundle,
    ballots: BTreeMap<Serial, BallotRec>,
    hours_closed: bool,
    /// The one vote code this node has ever endorsed per ballot.
    endorsed: BTreeMap<Serial, VoteCode>,
    races: BTreeMap<Serial, EndorseRace>,
    /// Certified (code, UCERT) claims for the agreement phase.
    known: BTreeMap<Serial, (VoteCode, Ucert)>,
    rbc: BTreeMap<VcId, Rbc>,
    bc: BTreeMap<BcInstance, Binary>,
    announces: BTreeMap<u32, Vec<Announce>>,
    announced: bool,
    proposed: bool,
    recover_pending: BTreeSet<Serial>,
    recover_sent: bool,
    /// Recovery requests we could not answer yet, per asking peer.
    open_requests: BTreeMap<VcId, BTreeSet<Serial>>,
    final_set: Option<Vec<(Serial, VoteCode)>>,
    uploaded: bool,
    self_q: VecDeque<PeerMsg>,
    bc_buf: Vec<(BcInstance, BcMsg)>,
    /// Peer fan-out already applied locally, flushed at the end of settle.
    pending_fanout: Vec<PeerMsg>,
}

impl Collector {
    pub fn new(mode: Mode, params: PublicParams, key: KeyPair, bundle: VcBundle) -> Self {
        let me = bundle.node;
        let n = params.spec.n_vc as usize;
        let f = params.spec.f_vc as usize;
        let rbc = (0..params.spec.n_vc)
            .map(|j| {
                let slot = VcId(j);
                (
                    slot,
                    Rbc::new(params.election, slot, params.vc_pks[j as usize], n, f),
                )
            })
            .collect();
        Collector {
            me,
            mode,
            params,
            key,
            bundle,
            ballots: BTreeMap::new(),
            hours_closed: false,
            endorsed: BTreeMap::new(),
            races: BTreeMap::new(),
            known: BTreeMap::new(),
            rbc,
            bc: BTreeMap::new(),
            announces: BTreeMap::new(),
            announced: false,
            proposed: false,
            recover_pending: BTreeSet::new(),
            recover_sent: false,
            open_requests: BTreeMap::new(),
            final_set: None,
            uploaded: false,
            self_q: VecDeque::new(),
            bc_buf: Vec::new(),
            pending_fanout: Vec::new(),
        }
    }

    /// Arms the phase timers. Call once at local time zero.
    pub fn start(&mut self, out: &mut Outbox) {
        out.timer_at(self.params.spec.t_end, TimerKind::ElectionEnd);
        if self.mode == Mode::Ic {
            out.timer_at(self.params.spec.t_barrier, TimerKind::Barrier);
        }
    }

    pub fn final_set(&self) -> Option<&[(Serial, VoteCode)]> {
        self.final_set.as_deref()
    }

    pub fn ballot_status(&self, serial: Serial) -> Status {
        self.ballots.get(&serial).map_or(Status::NotVoted, |b| b.status)
    }

    pub fn receipt_for(&self, serial: Serial) -> Option<Receipt> {
        self.ballots.get(&serial).and_then(|b| b.receipt)
    }

    pub fn signing_key(&self) -> &KeyPair {
        &self.key
    }

    /// The local vote set: every pending or voted ballot, in serial order.
    pub fn local_vote_set(&self) -> Vec<(Serial, VoteCode)> {
        self.ballots
            .iter()
            .filter(|(_, b)| b.status != Status::NotVoted)
            .filter_map(|(s, b)| b.used.map(|(_, _, code)| (*s, code)))
            .collect()
    }

    fn n(&self) -> usize {
        self.params.spec.n_vc as usize
    }

    fn f(&self) -> usize {
        self.params.spec.f_vc as usize
    }

    fn share_threshold(&self) -> usize {
        self.params.spec.vc_share_threshold()
    }

    fn in_hours(&self) -> bool {
        !self.hours_closed
    }

    fn find_row(&self, serial: Serial, code: VoteCode) -> Option<(PartId, u32, &VcRow)> {
        let ballot = self.bundle.ballots.get(&serial)?;
        for part in PartId::both() {
            for (row, vr) in ballot.part(part).iter().enumerate() {
                if hashcommit::matches(&vr.code_hash, &code.bytes(), vr.salt) {
                    return Some((part, row as u32, vr));
                }
            }
        }
        None
    }

    fn send_peer(&mut self, to: VcId, msg: PeerMsg, out: &mut Outbox) {
        if to == self.me {
            self.self_q.push_back(msg);
        } else {
            out.send(Dest::Vc(to), Payload::Peer(msg));
        }
    }

    fn multicast(&mut self, msg: PeerMsg, out: &mut Outbox) {
        for j in 0..self.params.spec.n_vc {
            if VcId(j) != self.me {
                out.send(Dest::Vc(VcId(j)), Payload::Peer(msg.clone()));
            }
        }
        self.self_q.push_back(msg);
    }

    // ------------------------------------------------------------------
    // Voting phase
    // ------------------------------------------------------------------

    pub fn handle_vote(&mut self, voter: VoterId, v: VoteSubmit, out: &mut Outbox) {
        if self.in_hours() {
            self.process_vote(voter, v, out);
        }
        self.settle(out);
    }

    fn process_vote(&mut self, voter: VoterId, v: VoteSubmit, out: &mut Outbox) {
        let Some((part, row, _)) = self.find_row(v.serial, v.code) else {
            return;
        };
        let rec = self.ballots.entry(v.serial).or_default();
        match rec.status {
            Status::Voted => {
                if rec.used.is_some_and(|(_, _, c)| c == v.code) {
                    let receipt = rec.receipt.expect("voted ballot has receipt");
                    out.send(
                        Dest::Voter(voter),
                        Payload::Feedback(VoteFeedback::Receipt { serial: v.serial, receipt }),
                    );
                }
            }
            Status::Pending => {
                if rec.used.is_some_and(|(_, _, c)| c == v.code) {
                    rec.reply_to.insert(voter);
                }
            }
            Status::NotVoted => match self.mode {
                Mode::Ic => {
                    self.ballots.get_mut(&v.serial).unwrap().reply_to.insert(voter);
                    self.adopt(v.serial, part, row, v.code, out);
                }
                Mode::Async => self.open_endorse_race(v.serial, v.code, voter, out),
            },
        }
    }

    fn open_endorse_race(
        &mut self,
        serial: Serial,
        code: VoteCode,
        voter: VoterId,
        out: &mut Outbox,
    ) {
        match self.endorsed.get(&serial) {
            Some(c) if *c != code => return,
            Some(_) => {
                if let Some(race) = self.races.get_mut(&serial) {
                    race.sources.insert(voter);
                }
                return;
            }
            None => {}
        }
        self.endorsed.insert(serial, code);
        let sig = self
            .key
            .sign(&sigmsg::endorsement(self.params.election, serial, code));
        let mut race = EndorseRace { code, sigs: BTreeMap::new(), sources: BTreeSet::new() };
        race.sigs.insert(self.me.0, sig);
        race.sources.insert(voter);
        self.races.insert(serial, race);
        self.multicast(PeerMsg::Endorse { serial, code }, out);
        self.try_certify(serial, out);
    }

    fn try_certify(&mut self, serial: Serial, out: &mut Outbox) {
        let threshold = self.share_threshold();
        let Some(race) = self.races.get(&serial) else { return };
        if race.sigs.len() < threshold {
            return;
        }
        let race = self.races.remove(&serial).unwrap();
        let ucert = Ucert { serial, code: race.code, sigs: race.sigs };
        let Some((part, row, _)) = self.find_row(serial, race.code) else { return };
        let rec = self.ballots.entry(serial).or_default();
        if rec.status != Status::NotVoted {
            return;
        }
        rec.ucert = Some(ucert);
        rec.reply_to.extend(race.sources);
        self.adopt(serial, part, row, race.code, out);
    }

    /// Marks the ballot pending for `code`, reveals this node's receipt
    /// share to everyone and checks for completion.
    fn adopt(&mut self, serial: Serial, part: PartId, row: u32, code: VoteCode, out: &mut Outbox) {
        let own = self.bundle.ballots[&serial].part(part)[row as usize].clone();
        let rec = self.ballots.entry(serial).or_default();
        debug_assert_eq!(rec.status, Status::NotVoted);
        rec.status = Status::Pending;
        rec.used = Some((part, row, code));
        rec.lrs.insert(own.receipt_share.index, own.receipt_share);
        let ucert = rec.ucert.clone();
        self.multicast(
            PeerMsg::VoteShare(VoteShare {
                serial,
                code,
                share: own.receipt_share,
                share_sig: own.receipt_share_sig,
                ucert,
            }),
            out,
        );
        self.try_complete(serial, out);
    }

    fn try_complete(&mut self, serial: Serial, out: &mut Outbox) {
        let k = self.share_threshold();
        let Some(rec) = self.ballots.get_mut(&serial) else { return };
        if rec.status != Status::Pending || rec.lrs.len() < k {
            return;
        }
        let shares: Vec<Share> = rec.lrs.values().copied().take(k).collect();
        let Ok(value) = vss::reconstruct(&shares, k) else { return };
        let Ok(raw) = scalar_to_u64(&value) else { return };
        let receipt = Receipt(raw);
        rec.receipt = Some(receipt);
        rec.status = Status::Voted;
        for voter in std::mem::take(&mut rec.reply_to) {
            out.send(
                Dest::Voter(voter),
                Payload::Feedback(VoteFeedback::Receipt { serial, receipt }),
            );
        }
    }

    // ------------------------------------------------------------------
    // Peer messages
    // ------------------------------------------------------------------

    pub fn handle_peer(&mut self, from: VcId, msg: PeerMsg, out: &mut Outbox) {
        self.process_peer(from, msg, out);
        self.settle(out);
    }

    fn process_peer(&mut self, from: VcId, msg: PeerMsg, out: &mut Outbox) {
        if from.0 >= self.params.spec.n_vc {
            return;
        }
        match msg {
            PeerMsg::VoteShare(vs) => self.on_vote_share(vs, out),
            PeerMsg::Endorse { serial, code } => self.on_endorse(from, serial, code, out),
            PeerMsg::Endorsement { serial, code, sig } => {
                self.on_endorsement(from, serial, code, sig, out)
            }
            PeerMsg::AnnounceBatch(batch) => self.on_announce(from, batch),
            PeerMsg::RecoverRequest { serials } => self.on_recover_request(from, serials, out),
            PeerMsg::RecoverResponse(items) => self.on_recover_response(items, out),
            PeerMsg::ConsensusBatch(items) => {
                for (inst, m) in items {
                    if self.valid_instance(inst) {
                        self.bc_instance(inst).handle(from.0, m);
                    }
                }
            }
            PeerMsg::IcValue { slot, payload, sig } => {
                if let Some(r) = self.rbc.get_mut(&slot) {
                    r.handle_value(payload, &sig);
                }
            }
            PeerMsg::IcEcho { slot, payload, sig } => {
                if let Some(r) = self.rbc.get_mut(&slot) {
                    r.handle_echo(from.0, payload, &sig);
                }
            }
            PeerMsg::IcReady { slot, digest } => {
                if let Some(r) = self.rbc.get_mut(&slot) {
                    r.handle_ready(from.0, digest);
                }
            }
        }
    }

    fn on_vote_share(&mut self, vs: VoteShare, out: &mut Outbox) {
        if !self.in_hours() {
            return;
        }
        let Some((part, row, _)) = self.find_row(vs.serial, vs.code) else {
            return;
        };
        let msg = sigmsg::receipt_share(self.params.election, vs.serial, part, row, &vs.share);
        if self.params.ea_pk.verify(&msg, &vs.share_sig).is_err() {
            return;
        }
        if self.mode == Mode::Async {
            let Some(uc) = &vs.ucert else { return };
            if uc.serial != vs.serial || uc.code != vs.code || !uc.verify(&self.params) {
                return;
            }
        }
        let rec = self.ballots.entry(vs.serial).or_default();
        match rec.status {
            Status::NotVoted => {
                rec.ucert = vs.ucert.clone();
                rec.lrs.insert(vs.share.index, vs.share);
                self.adopt(vs.serial, part, row, vs.code, out);
            }
            _ => {
                if rec.used.is_some_and(|(_, _, c)| c == vs.code) {
                    rec.lrs.insert(vs.share.index, vs.share);
                    self.try_complete(vs.serial, out);
                }
            }
        }
    }

    fn on_endorse(&mut self, from: VcId, serial: Serial, code: VoteCode, out: &mut Outbox) {
        if self.mode != Mode::Async || !self.in_hours() || self.find_row(serial, code).is_none() {
            return;
        }
        match self.endorsed.get(&serial) {
            Some(c) if *c != code => return,
            Some(_) => {}
            None => {
                self.endorsed.insert(serial, code);
            }
        }
        let sig = self
            .key
            .sign(&sigmsg::endorsement(self.params.election, serial, code));
        self.send_peer(from, PeerMsg::Endorsement { serial, code, sig }, out);
    }

    fn on_endorsement(
        &mut self,
        from: VcId,
        serial: Serial,
        code: VoteCode,
        sig: agora_crypto::sign::Signature,
        out: &mut Outbox,
    ) {
        if !self.in_hours() {
            return;
        }
        let Some(race) = self.races.get_mut(&serial) else { return };
        if race.code != code {
            return;
        }
        let msg = sigmsg::endorsement(self.params.election, serial, code);
        let Some(pk) = self.params.vc_pks.get(from.0 as usize) else { return };
        if pk.verify(&msg, &sig).is_err() {
            return;
        }
        race.sigs.insert(from.0, sig);
        self.try_certify(serial, out);
    }

    // ------------------------------------------------------------------
    // End of voting and agreement
    // ------------------------------------------------------------------

    pub fn handle_timer(&mut self, kind: TimerKind, out: &mut Outbox) {
        match kind {
            TimerKind::ElectionEnd => self.close_hours(out),
            TimerKind::Barrier => self.propose_ic_slots(),
            _ => {}
        }
        self.settle(out);
    }

    fn close_hours(&mut self, out: &mut Outbox) {
        if self.hours_closed {
            return;
        }
        self.hours_closed = true;
        self.races.clear();
        for (serial, rec) in &self.ballots {
            if rec.status != Status::NotVoted {
                if let (Some((_, _, code)), Some(uc)) = (rec.used, rec.ucert.clone()) {
                    self.known.insert(*serial, (code, uc));
                }
            }
        }
        match self.mode {
            Mode::Ic => {
                let entries = self.local_vote_set();
                let payload = vote_set_bytes(&entries);
                let digest = digest_bytes(&payload);
                let sig = self
                    .key
                    .sign(&sigmsg::ic_value(self.params.election, self.me, &digest));
                self.multicast(PeerMsg::IcValue { slot: self.me, payload, sig }, out);
            }
            Mode::Async => {
                let batch: Vec<Announce> = self
                    .known
                    .iter()
                    .map(|(s, (code, uc))| Announce {
                        serial: *s,
                        code: *code,
                        ucert: uc.clone(),
                    })
                    .collect();
                self.announced = true;
                self.multicast(PeerMsg::AnnounceBatch(batch), out);
            }
        }
    }

    fn valid_instance(&self, inst: BcInstance) -> bool {
        match inst {
            BcInstance::Slot(v) => self.mode == Mode::Ic && v.0 < self.params.spec.n_vc,
            BcInstance::Ballot(s) => {
                self.mode == Mode::Async && self.bundle.ballots.contains_key(&s)
            }
        }
    }

    fn bc_instance(&mut self, inst: BcInstance) -> &mut Binary {
        let n = self.n();
        let f = self.f();
        let election = self.params.election;
        self.bc
            .entry(inst)
            .or_insert_with(|| Binary::new(n, f, instance_coin(election, inst)))
    }

    fn propose_ic_slots(&mut self) {
        if self.mode != Mode::Ic || self.proposed {
            return;
        }
        self.proposed = true;
        for j in 0..self.params.spec.n_vc {
            let delivered = self.rbc[&VcId(j)].delivered().is_some();
            self.bc_instance(BcInstance::Slot(VcId(j))).propose(delivered);
        }
    }

    fn on_announce(&mut self, from: VcId, batch: Vec<Announce>) {
        if self.mode != Mode::Async {
            return;
        }
        self.announces.entry(from.0).or_insert(batch);
    }

    fn try_propose_async(&mut self, out: &mut Outbox) -> bool {
        if self.mode != Mode::Async
            || self.proposed
            || !self.announced
            || self.announces.len() < self.n() - self.f()
        {
            return false;
        }
        self.proposed = true;
        let batches: Vec<Vec<Announce>> = self.announces.values().cloned().collect();
        for batch in batches {
            for a in batch {
                self.learn_claim(a.serial, a.code, a.ucert, out);
            }
        }
        let serials: Vec<Serial> = self.bundle.ballots.keys().copied().collect();
        for s in serials {
            let have = self.known.contains_key(&s);
            self.bc_instance(BcInstance::Ballot(s)).propose(have);
        }
        true
    }

    /// Adopts a certified claim if it checks out, and answers any open
    /// recovery requests waiting on it.
    fn learn_claim(&mut self, serial: Serial, code: VoteCode, ucert: Ucert, out: &mut Outbox) {
        if self.known.contains_key(&serial) {
            return;
        }
        if ucert.serial != serial || ucert.code != code || self.find_row(serial, code).is_none() {
            return;
        }
        if !ucert.verify(&self.params) {
            return;
        }
        self.known.insert(serial, (code, ucert.clone()));
        self.recover_pending.remove(&serial);
        let askers: Vec<VcId> = self
            .open_requests
            .iter()
            .filter(|(_, set)| set.contains(&serial))
            .map(|(id, _)| *id)
            .collect();
        for asker in askers {
            self.open_requests.get_mut(&asker).unwrap().remove(&serial);
            self.send_peer(asker, PeerMsg::RecoverResponse(vec![(serial, code, ucert.clone())]), out);
        }
    }

    fn on_recover_request(&mut self, from: VcId, serials: Vec<Serial>, out: &mut Outbox) {
        if self.mode != Mode::Async {
            return;
        }
        let mut reply = Vec::new();
        for s in serials {
            if let Some((code, uc)) = self.known.get(&s) {
                reply.push((s, *code, uc.clone()));
            } else if self.bundle.ballots.contains_key(&s) {
                self.open_requests.entry(from).or_default().insert(s);
            }
        }
        if !reply.is_empty() {
            self.send_peer(from, PeerMsg::RecoverResponse(reply), out);
        }
    }

    fn on_recover_response(&mut self, items: Vec<(Serial, VoteCode, Ucert)>, out: &mut Outbox) {
        if self.mode != Mode::Async {
            return;
        }
        for (serial, code, ucert) in items {
            self.learn_claim(serial, code, ucert, out);
        }
    }

    // ------------------------------------------------------------------
    // Settlement loop: self-delivery, consensus flushing, transitions
    // ------------------------------------------------------------------

    fn settle(&mut self, out: &mut Outbox) {
        loop {
            if let Some(msg) = self.self_q.pop_front() {
                let me = self.me;
                self.process_peer(me, msg, out);
                continue;
            }
            if self.flush_consensus_once() {
                continue;
            }
            if self.try_propose_async(out) {
                continue;
            }
            if self.try_finish(out) {
                continue;
            }
            break;
        }
        for msg in std::mem::take(&mut self.pending_fanout) {
            for j in 0..self.params.spec.n_vc {
                if VcId(j) != self.me {
                    out.send(Dest::Vc(VcId(j)), Payload::Peer(msg.clone()));
                }
            }
        }
        if !self.bc_buf.is_empty() {
            let items = std::mem::take(&mut self.bc_buf);
            for j in 0..self.params.spec.n_vc {
                if VcId(j) != self.me {
                    out.send(
                        Dest::Vc(VcId(j)),
                        Payload::Peer(PeerMsg::ConsensusBatch(items.clone())),
                    );
                }
            }
        }
    }

    /// Moves pending consensus and broadcast output into the batch buffer,
    /// applying each message to this node immediately.
    fn flush_consensus_once(&mut self) -> bool {
        let mut moved = false;
        let slots: Vec<VcId> = self.rbc.keys().copied().collect();
        for slot in slots {
            for m in self.rbc.get_mut(&slot).unwrap().take_out() {
                moved = true;
                match m {
                    RbcOut::Echo { payload, sig } => {
                        self.rbc.get_mut(&slot).unwrap().handle_echo(
                            self.me.0,
                            payload.clone(),
                            &sig,
                        );
                        self.self_multicast_later(PeerMsg::IcEcho { slot, payload, sig });
                    }
                    RbcOut::Ready { digest } => {
                        self.rbc.get_mut(&slot).unwrap().handle_ready(self.me.0, digest);
                        self.self_multicast_later(PeerMsg::IcReady { slot, digest });
                    }
                }
            }
        }
        let insts: Vec<BcInstance> = self.bc.keys().copied().collect();
        for inst in insts {
            for m in self.bc.get_mut(&inst).unwrap().take_out() {
                moved = true;
                self.bc.get_mut(&inst).unwrap().handle(self.me.0, m);
                self.bc_buf.push((inst, m));
            }
        }
        moved
    }

    /// Queues a peer multicast that must not loop back (already applied).
    fn self_multicast_later(&mut self, msg: PeerMsg) {
        self.pending_fanout.push(msg);
    }

    fn try_finish(&mut self, out: &mut Outbox) -> bool {
        if self.final_set.is_some() {
            return false;
        }
        match self.mode {
            Mode::Ic => self.try_finish_ic(out),
            Mode::Async => self.try_finish_async(out),
        }
    }

    fn try_finish_ic(&mut self, out: &mut Outbox) -> bool {
        if !self.proposed {
            return false;
        }
        let mut sets = Vec::new();
        for j in 0..self.params.spec.n_vc {
            match self.bc.get(&BcInstance::Slot(VcId(j))).and_then(|b| b.decision()) {
                None => return false,
                Some(false) => {}
                Some(true) => match self.rbc[&VcId(j)].delivered() {
                    None => return false,
                    Some(payload) => sets.push(parse_vote_set(payload).unwrap_or_default()),
                },
            }
        }
        let f = self.f();
        let n = self.n();
        let entries = cross_tabulate(&sets, n, f, |serial, code| {
            self.find_row(serial, code).is_some()
        });
        self.final_set = Some(entries);
        self.upload(out);
        true
    }

    fn try_finish_async(&mut self, out: &mut Outbox) -> bool {
        if !self.proposed {
            return false;
        }
        let mut voted = Vec::new();
        for s in self.bundle.ballots.keys() {
            match self.bc.get(&BcInstance::Ballot(*s)).and_then(|b| b.decision()) {
                None => return false,
                Some(false) => {}
                Some(true) => voted.push(*s),
            }
        }
        let missing: Vec<Serial> = voted
            .iter()
            .filter(|s| !self.known.contains_key(s))
            .copied()
            .collect();
        if !missing.is_empty() {
            for s in &missing {
                self.recover_pending.insert(*s);
            }
            if !self.recover_sent {
                self.recover_sent = true;
                let serials = missing.clone();
                let me = self.me;
                for j in 0..self.params.spec.n_vc {
                    if VcId(j) != me {
                        out.send(
                            Dest::Vc(VcId(j)),
                            Payload::Peer(PeerMsg::RecoverRequest { serials: serials.clone() }),
                        );
                    }
                }
            }
            return false;
        }
        let entries: Vec<(Serial, VoteCode)> =
            voted.iter().map(|s| (*s, self.known[s].0)).collect();
        self.final_set = Some(entries);
        self.upload(out);
        true
    }

    fn upload(&mut self, out: &mut Outbox) {
        if self.uploaded {
            return;
        }
        self.uploaded = true;
        let entries = self.final_set.clone().unwrap();
        let digest = vote_set_digest(&entries);
        let sig = self
            .key
            .sign(&sigmsg::vote_set(self.params.election, self.me, &digest));
        let upload = VoteSetUpload {
            vc: self.me,
            entries,
            sig,
            msk_share: self.bundle.msk_share,
            msk_share_sig: self.bundle.msk_share_sig,
        };
        for b in 0..self.params.spec.n_bb {
            out.send(Dest::Bb(crate::ids::BbId(b)), Payload::BbWrite(BbWrite::VoteSet(upload.clone())));
        }
    }
}

/// The cross-tabulation that merges the agreed per-node vote sets into one
/// final set. Codes failing the hash check are discarded first: only the
/// ballot's real codes (which never leave the voter's hands) can influence
/// its outcome. Then, per ballot: two or more distinct codes cancel it, a
/// single code kept by at least n-2f slots wins, anything rarer is dropped.
pub fn cross_tabulate<F>(
    sets: &[Vec<(Serial, VoteCode)>],
    n: usize,
    f: usize,
    mut code_valid: F,
) -> Vec<(Serial, VoteCode)>
where
    F: FnMut(Serial, VoteCode) -> bool,
{
    let mut tallies: BTreeMap<Serial, BTreeMap<VoteCode, usize>> = BTreeMap::new();
    for set in sets {
        for (serial, code) in set {
            if code_valid(*serial, *code) {
                *tallies.entry(*serial).or_default().entry(*code).or_insert(0) += 1;
            }
        }
    }
    let threshold = n - 2 * f;
    let mut out = Vec::new();
    for (serial, codes) in tallies {
        if codes.len() >= 2 {
            continue;
        }
        let (code, count) = codes.into_iter().next().expect("nonempty");
        if count >= threshold {
            out.push((serial, code));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::VoterId;
    use crate::params::ElectionSpec;
    use crate::setup::{generate_election, ElectionArtifacts};
    use agora_crypto::rng::Prf;

    fn small_spec() -> ElectionSpec {
        ElectionSpec {
            options: vec!["yes".into(), "no".into()],
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

    struct Net {
        nodes: Vec<Collector>,
        queue: VecDeque<(u32, u32, PeerMsg)>,
        feedback: Vec<(VoterId, VoteFeedback)>,
        uploads: Vec<BbWrite>,
    }

    impl Net {
        fn build(mode: Mode) -> (Net, ElectionArtifacts) {
            let art = generate_election(&small_spec(), &Prf::from_u64(77)).unwrap();
            let nodes = art
                .vc_bundles
                .iter()
                .zip(&art.keys.vc)
                .map(|(b, k)| Collector::new(mode, art.params.clone(), k.clone(), b.clone()))
                .collect();
            (
                Net {
                    nodes,
                    queue: VecDeque::new(),
                    feedback: Vec::new(),
                    uploads: Vec::new(),
                },
                art,
            )
        }

        fn route(&mut self, from: u32, out: Outbox) {
            for (dest, payload) in out.sends {
                match (dest, payload) {
                    (Dest::Vc(j), Payload::Peer(m)) => self.queue.push_back((j.0, from, m)),
                    (Dest::Voter(v), Payload::Feedback(f)) => self.feedback.push((v, f)),
                    (Dest::Bb(_), Payload::BbWrite(w)) => self.uploads.push(w),
                    _ => {}
                }
            }
        }

        fn vote(&mut self, node: u32, voter: u32, serial: Serial, code: VoteCode) {
            let mut out = Outbox::default();
            self.nodes[node as usize].handle_vote(
                VoterId(voter),
                VoteSubmit { serial, code },
                &mut out,
            );
            self.route(node, out);
        }

        fn close_all(&mut self) {
            for i in 0..self.nodes.len() as u32 {
                let mut out = Outbox::default();
                self.nodes[i as usize].handle_timer(TimerKind::ElectionEnd, &mut out);
                self.route(i, out);
            }
        }

        fn barrier_all(&mut self) {
            for i in 0..self.nodes.len() as u32 {
                let mut out = Outbox::default();
                self.nodes[i as usize].handle_timer(TimerKind::Barrier, &mut out);
                self.route(i, out);
            }
        }

        fn pump(&mut self) {
            self.pump_dropping(|_, _, _| false);
        }

        fn pump_dropping<F: Fn(u32, u32, &PeerMsg) -> bool>(&mut self, drop: F) {
            while let Some((to, from, msg)) = self.queue.pop_front() {
                if drop(to, from, &msg) {
                    continue;
                }
                let mut out = Outbox::default();
                self.nodes[to as usize].handle_peer(VcId(from), msg, &mut out);
                self.route(to, out);
            }
        }

        fn finish(&mut self, mode: Mode) {
            self.pump();
            self.close_all();
            self.pump();
            if mode == Mode::Ic {
                self.barrier_all();
                self.pump();
            }
        }
    }

    /// Picks the code for (serial, part, row) straight off the printed ballot.
    fn printed_code(art: &ElectionArtifacts, serial: Serial, part: PartId, row: usize) -> VoteCode {
        art.printed(serial).unwrap().part(part)[row].code
    }

    fn printed_receipt(art: &ElectionArtifacts, serial: Serial, part: PartId, row: usize) -> Receipt {
        art.printed(serial).unwrap().part(part)[row].receipt
    }

    #[test]
    fn a_vote_completes_into_the_printed_receipt() {
        for mode in [Mode::Ic, Mode::Async] {
            let (mut net, art) = Net::build(mode);
            let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
            let code = printed_code(&art, serial, PartId::A, 0);
            net.vote(0, 9, serial, code);
            net.pump();
            let expect = printed_receipt(&art, serial, PartId::A, 0);
            assert_eq!(net.feedback.len(), 1, "{mode:?}");
            assert!(matches!(
                net.feedback[0],
                (VoterId(9), VoteFeedback::Receipt { serial: s, receipt }) if s == serial && receipt == expect
            ));
            for n in &net.nodes {
                assert_eq!(n.ballot_status(serial), Status::Voted);
            }
        }
    }

    #[test]
    fn resubmitting_the_same_code_repeats_the_receipt() {
        let (mut net, art) = Net::build(Mode::Ic);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let code = printed_code(&art, serial, PartId::B, 1);
        net.vote(0, 1, serial, code);
        net.pump();
        net.vote(0, 1, serial, code);
        net.pump();
        assert_eq!(net.feedback.len(), 2);
        assert_eq!(net.feedback[0].1, net.feedback[1].1);
    }

    #[test]
    fn a_conflicting_code_after_voting_changes_nothing() {
        let (mut net, art) = Net::build(Mode::Ic);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let first = printed_code(&art, serial, PartId::A, 0);
        let other = printed_code(&art, serial, PartId::B, 0);
        net.vote(0, 1, serial, first);
        net.pump();
        net.vote(0, 2, serial, other);
        net.pump();
        assert_eq!(net.feedback.len(), 1);
        assert_eq!(net.nodes[0].local_vote_set(), vec![(serial, first)]);
    }

    #[test]
    fn votes_arriving_after_hours_are_dropped() {
        let (mut net, art) = Net::build(Mode::Ic);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let code = printed_code(&art, serial, PartId::A, 0);
        net.close_all();
        net.pump();
        net.vote(0, 1, serial, code);
        net.pump();
        assert!(net.feedback.is_empty());
        assert_eq!(net.nodes[0].ballot_status(serial), Status::NotVoted);
    }

    #[test]
    fn a_vote_with_an_unknown_code_is_ignored() {
        let (mut net, art) = Net::build(Mode::Async);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        net.vote(0, 1, serial, VoteCode(0xdead_beef));
        net.pump();
        assert!(net.feedback.is_empty());
        assert_eq!(net.nodes[0].ballot_status(serial), Status::NotVoted);
    }

    #[test]
    fn a_reveal_with_a_forged_signature_is_discarded() {
        let (mut net, art) = Net::build(Mode::Ic);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let code = printed_code(&art, serial, PartId::A, 0);
        let row = art.vc_bundles[1].ballots[&serial].part(PartId::A)[0].clone();
        let bogus_sig = net.nodes[1]
            .signing_key()
            .sign(&sigmsg::endorsement(art.params.election, serial, code));
        let mut out = Outbox::default();
        net.nodes[0].handle_peer(
            VcId(1),
            PeerMsg::VoteShare(VoteShare {
                serial,
                code,
                share: row.receipt_share,
                share_sig: bogus_sig,
                ucert: None,
            }),
            &mut out,
        );
        assert_eq!(net.nodes[0].ballot_status(serial), Status::NotVoted);
        assert!(out.sends.is_empty());
    }

    #[test]
    fn an_uncertified_reveal_is_discarded_in_asynchronous_mode() {
        let (mut net, art) = Net::build(Mode::Async);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let code = printed_code(&art, serial, PartId::A, 0);
        let row = art.vc_bundles[1].ballots[&serial].part(PartId::A)[0].clone();
        let mut out = Outbox::default();
        net.nodes[0].handle_peer(
            VcId(1),
            PeerMsg::VoteShare(VoteShare {
                serial,
                code,
                share: row.receipt_share,
                share_sig: row.receipt_share_sig,
                ucert: None,
            }),
            &mut out,
        );
        assert_eq!(net.nodes[0].ballot_status(serial), Status::NotVoted);

        // An undersized certificate is just as dead.
        let sig = net.nodes[1]
            .signing_key()
            .sign(&sigmsg::endorsement(art.params.election, serial, code));
        let mut sigs = BTreeMap::new();
        sigs.insert(1, sig);
        let mut out = Outbox::default();
        net.nodes[0].handle_peer(
            VcId(1),
            PeerMsg::VoteShare(VoteShare {
                serial,
                code,
                share: row.receipt_share,
                share_sig: row.receipt_share_sig,
                ucert: Some(Ucert { serial, code, sigs }),
            }),
            &mut out,
        );
        assert_eq!(net.nodes[0].ballot_status(serial), Status::NotVoted);
    }

    #[test]
    fn collectors_refuse_to_endorse_a_second_code() {
        let (mut net, art) = Net::build(Mode::Async);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let first = printed_code(&art, serial, PartId::A, 0);
        let second = printed_code(&art, serial, PartId::B, 0);
        net.vote(0, 1, serial, first);
        net.pump();
        assert_eq!(net.nodes[0].ballot_status(serial), Status::Voted);
        // Node 2 now tries to gather endorsements for a different code.
        let mut out = Outbox::default();
        net.nodes[3].handle_peer(
            VcId(2),
            PeerMsg::Endorse { serial, code: second },
            &mut out,
        );
        assert!(out.sends.is_empty(), "endorsed a second code for one ballot");
    }

    fn run_election(mode: Mode) -> (Net, ElectionArtifacts, Vec<(Serial, VoteCode)>) {
        let (mut net, art) = Net::build(mode);
        let serials: Vec<Serial> = art.vc_bundles[0].ballots.keys().copied().collect();
        let mut expected = Vec::new();
        // Three ballots cast at three different entry points, one left idle.
        for (i, &serial) in serials.iter().take(3).enumerate() {
            let part = if i % 2 == 0 { PartId::A } else { PartId::B };
            let code = printed_code(&art, serial, part, i % 2);
            net.vote(i as u32, 100 + i as u32, serial, code);
            expected.push((serial, code));
        }
        net.finish(mode);
        expected.sort();
        (net, art, expected)
    }

    #[test]
    fn synchronized_mode_agrees_on_the_cast_votes() {
        let (net, _, expected) = run_election(Mode::Ic);
        for n in &net.nodes {
            assert_eq!(n.final_set(), Some(expected.as_slice()));
        }
        // Every collector posts its set and key share to every board node.
        assert_eq!(net.uploads.len(), 4 * 3);
    }

    #[test]
    fn asynchronous_mode_agrees_on_the_cast_votes() {
        let (net, _, expected) = run_election(Mode::Async);
        for n in &net.nodes {
            assert_eq!(n.final_set(), Some(expected.as_slice()));
        }
        assert_eq!(net.uploads.len(), 4 * 3);
    }

    #[test]
    fn racing_codes_certify_at_most_one_of_them() {
        let (mut net, art) = Net::build(Mode::Async);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let a = printed_code(&art, serial, PartId::A, 0);
        let b = printed_code(&art, serial, PartId::B, 0);
        net.vote(0, 1, serial, a);
        net.vote(1, 2, serial, b);
        net.finish(Mode::Async);
        let final_set = net.nodes[0].final_set().unwrap().to_vec();
        for n in &net.nodes {
            assert_eq!(n.final_set().unwrap(), final_set.as_slice());
        }
        let claims: Vec<_> = final_set.iter().filter(|(s, _)| *s == serial).collect();
        assert!(claims.len() <= 1, "both codes won: {claims:?}");
    }

    #[test]
    fn cross_tabulation_applies_the_recount_rules() {
        let s = |n: u64| Serial(n);
        let c = |n: u128| VoteCode(n);
        let sets = vec![
            vec![(s(1), c(10)), (s(2), c(20)), (s(3), c(30)), (s(5), c(99))],
            vec![(s(1), c(10)), (s(2), c(21)), (s(4), c(40))],
            vec![(s(1), c(10)), (s(2), c(20))],
        ];
        // Serial 5's code fails the hash check; everything else is valid.
        let got = cross_tabulate(&sets, 4, 1, |serial, _| serial != s(5));
        // 1: one code, three slots. 2: two distinct codes. 3/4: one slot each
        // (below n-2f=2). 5: filtered out entirely.
        assert_eq!(got, vec![(s(1), c(10))]);
    }

    #[test]
    fn a_missing_code_is_recovered_from_peers_after_consensus() {
        let (mut net, art) = Net::build(Mode::Async);
        let serial = *art.vc_bundles[0].ballots.keys().next().unwrap();
        let code = printed_code(&art, serial, PartId::A, 0);
        // The endorsement round trip completes, but every receipt-share
        // reveal from node 0 is swallowed: only node 0 ends up holding the
        // certified code, as a pending ballot.
        net.vote(0, 1, serial, code);
        net.pump_dropping(|_, from, m| from == 0 && matches!(m, PeerMsg::VoteShare(_)));
        assert_eq!(net.nodes[0].ballot_status(serial), Status::Pending);
        assert_eq!(net.nodes[3].ballot_status(serial), Status::NotVoted);
        // Node 3 also never hears node 0's announce, so it reaches its
        // proposal with three empty claim batches and proposes zero.
        net.close_all();
        net.pump_dropping(|to, from, m| {
            from == 0 && to == 3 && matches!(m, PeerMsg::AnnounceBatch(_))
        });
        // Consensus still fixes the ballot as voted, which forces node 3
        // through the post-decision recovery exchange.
        let expected = vec![(serial, code)];
        for n in &net.nodes {
            assert_eq!(n.final_set(), Some(expected.as_slice()));
        }
    }
}
