//! A voter. She holds one printed ballot, picks a part and an option before
//! the election, and then follows a fixed patience policy: cast the code at
//! one collector, wait out the receipt bound on her own clock, and on
//! silence blacklist that collector and recast the same code at the next
//! one. A receipt only counts if it exactly matches the one printed next to
//! the code she cast; anything else is recorded as collector misbehavior
//! and ignored. After the election she reads the published vote set off a
//! board majority and checks her own pair is in it.

use crate::ids::{BbId, Mode, PartId, Serial, Tick, VcId, VoteCode, VoterId};
use crate::messages::{
    Dest, Outbox, Payload, SectionData, SectionKind, SectionPage, TimerKind, VoteFeedback,
    VoteSubmit,
};
use crate::params::PublicParams;
use crate::reader::SectionReader;
use crate::setup::PrintedBallot;

/// Worst-case honest-path time from casting a vote to holding a receipt,
/// on the voter's clock. `t_comp` bounds one node's handler time, `drift`
/// the clock skew between any two honest nodes, `delay` one honest message
/// delivery. The two protocol variants take different numbers of hops.
pub fn receipt_wait(mode: Mode, n_vc: u64, t_comp: u64, drift: u64, delay: u64) -> Tick {
    match mode {
        Mode::Ic => (n_vc + 4) * t_comp + 8 * drift + 4 * delay,
        Mode::Async => (2 * n_vc + 5) * t_comp + 12 * drift + 6 * delay,
    }
}

/// What the voter decided to do, fixed before she approaches any collector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CastPlan {
    pub part: PartId,
    /// Row within the chosen part, in printed order.
    pub row: u32,
    /// First collector to approach; retries go round robin from here.
    pub first_vc: VcId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    Waiting { vc: VcId, deadline: Tick, attempt: u32 },
    Accepted { vc: VcId, at: Tick },
    GaveUp,
}

#[derive(Clone, Debug)]
pub struct Voter {
    pub id: VoterId,
    params: PublicParams,
    ballot: PrintedBallot,
    plan: CastPlan,
    t_wait: Tick,
    phase: Phase,
    started_at: Option<Tick>,
    /// Collectors that sent a receipt not matching the printed one.
    bad_receipts: Vec<VcId>,
    vote_set: SectionReader,
    published: Option<bool>,
}

impl Voter {
    pub fn new(
        id: VoterId,
        params: PublicParams,
        mode: Mode,
        ballot: PrintedBallot,
        plan: CastPlan,
        t_comp: u64,
        drift: u64,
        delay: u64,
    ) -> Self {
        let t_wait = receipt_wait(mode, params.spec.n_vc as u64, t_comp, drift, delay);
        assert!((plan.row as usize) < params.spec.m(), "row out of range");
        Voter {
            id,
            vote_set: SectionReader::new(SectionKind::VoteSet, &params),
            params,
            ballot,
            plan,
            t_wait,
            phase: Phase::Idle,
            started_at: None,
            bad_receipts: Vec::new(),
            published: None,
        }
    }

    pub fn t_wait(&self) -> Tick {
        self.t_wait
    }

    /// The (serial, code) pair this voter casts, same on every attempt.
    pub fn cast_pair(&self) -> (Serial, VoteCode) {
        let code = self.ballot.part(self.plan.part)[self.plan.row as usize].code;
        (self.ballot.serial, code)
    }

    fn expected_receipt(&self) -> crate::ids::Receipt {
        self.ballot.part(self.plan.part)[self.plan.row as usize].receipt
    }

    pub fn start(&mut self, now: Tick, out: &mut Outbox) {
        assert_eq!(self.phase, Phase::Idle, "voter already started");
        self.started_at = Some(now);
        self.attempt(self.plan.first_vc, 1, now, out);
    }

    fn attempt(&mut self, vc: VcId, attempt: u32, now: Tick, out: &mut Outbox) {
        let (serial, code) = self.cast_pair();
        out.send(Dest::Vc(vc), Payload::Vote(VoteSubmit { serial, code }));
        let deadline = now + self.t_wait;
        out.timer_at(deadline, TimerKind::VoterPatience);
        self.phase = Phase::Waiting { vc, deadline, attempt };
    }

    pub fn handle_feedback(&mut self, from: VcId, fb: VoteFeedback, now: Tick) {
        let VoteFeedback::Receipt { serial, receipt } = fb;
        if serial != self.ballot.serial {
            return;
        }
        if !matches!(self.phase, Phase::Waiting { .. }) {
            return;
        }
        if receipt == self.expected_receipt() {
            self.phase = Phase::Accepted { vc: from, at: now };
        } else if !self.bad_receipts.contains(&from) {
            // A wrong receipt is proof of misbehavior, not a receipt; keep
            // waiting for a real one.
            self.bad_receipts.push(from);
        }
    }

    pub fn handle_timer(&mut self, now: Tick, kind: TimerKind, out: &mut Outbox) {
        if kind != TimerKind::VoterPatience {
            return;
        }
        let Phase::Waiting { vc, deadline, attempt } = self.phase else {
            return;
        };
        if now < deadline {
            return;
        }
        if attempt as usize >= self.params.spec.n_vc as usize {
            self.phase = Phase::GaveUp;
            return;
        }
        let next = VcId((vc.0 + 1) % self.params.spec.n_vc);
        self.attempt(next, attempt + 1, now, out);
    }

    /// True once a receipt matching the printed one arrived.
    pub fn receipt_verified(&self) -> bool {
        matches!(self.phase, Phase::Accepted { .. })
    }

    /// Ticks from first cast to verified receipt.
    pub fn receipt_latency(&self) -> Option<Tick> {
        match (self.phase.clone(), self.started_at) {
            (Phase::Accepted { at, .. }, Some(start)) => Some(at - start),
            _ => None,
        }
    }

    pub fn gave_up(&self) -> bool {
        self.phase == Phase::GaveUp
    }

    pub fn attempts(&self) -> u32 {
        match self.phase {
            Phase::Idle => 0,
            Phase::Waiting { attempt, .. } => attempt,
            Phase::Accepted { .. } | Phase::GaveUp => {
                // after a terminal state the count is not tracked further
                0
            }
        }
    }

    pub fn bad_receipts(&self) -> &[VcId] {
        &self.bad_receipts
    }

    /// Post-election: ask every board replica for the published vote set.
    pub fn poll_published(&mut self, out: &mut Outbox) {
        if self.published.is_some() {
            return;
        }
        for b in 0..self.params.spec.n_bb {
            out.send(Dest::Bb(BbId(b)), Payload::BbRead(SectionKind::VoteSet));
        }
    }

    pub fn handle_page(&mut self, page: SectionPage) {
        if self.published.is_some() {
            return;
        }
        self.vote_set.offer(&page, &self.params);
        if let Some(SectionData::VoteSet(fs)) = self.vote_set.settled() {
            let pair = self.cast_pair();
            self.published = Some(fs.entries.binary_search(&pair).is_ok());
        }
    }

    /// `Some(true)` once a board majority shows this voter's pair in the
    /// final vote set, `Some(false)` if the majority excludes it.
    pub fn published(&self) -> Option<bool> {
        self.published
    }
}
