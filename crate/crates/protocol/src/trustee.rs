//! A tally trustee. After the election it reads the final vote set and the
//! decrypted code table off the board quorum, classifies every ballot, and
//! publishes one atomic post:
//!
//! * opening-randomness shares for every row that must be revealed (both
//!   parts of unvoted ballots, the unused part of voted ones),
//! * its share of each finalized proof for the rows of every voted part,
//!   evaluated at the public challenge, and
//! * per-coordinate shares of the summed randomness that opens the
//!   homomorphic tally.
//!
//! The trustee never learns or handles a single vote in the clear; all its
//! material is share-level. If the public transcript is self-contradictory
//! (a winning code that no table row contains) the trustee refuses to post
//! and raises an alarm instead, since any output it could produce would
//! vouch for a forged transcript.

use agora_crypto::sign::KeyPair;
use agora_crypto::vss;
use agora_crypto::zkp;

use crate::count::{self, BallotClass};
use crate::ids::{BbId, Serial, TrusteeId, VoteCode};
use crate::messages::{
    BbWrite, CodeTable, Dest, OpeningPost, Outbox, Payload, SectionData, SectionKind,
    SectionPage, TimerKind, TrusteePost, ZkSharePost,
};
use crate::params::PublicParams;
use crate::reader::SectionReader;
use crate::setup::{trustee_ballots_digest, TrusteeBundle};
use crate::sigmsg;

const POLL_PERIOD: u64 = 2;

#[derive(Clone, Debug)]
pub struct Trustee {
    pub me: TrusteeId,
    params: PublicParams,
    key: KeyPair,
    bundle: TrusteeBundle,
    vote_set: SectionReader,
    codes: SectionReader,
    posted: bool,
    refusal: Option<String>,
}

impl Trustee {
    pub fn new(params: PublicParams, key: KeyPair, bundle: TrusteeBundle) -> Self {
        let mut refusal = None;
        let digest = trustee_ballots_digest(&bundle.ballots);
        let msg = sigmsg::trustee_bundle(params.election, bundle.trustee, &digest);
        if params.ea_pk.verify(&msg, &bundle.dealer_sig).is_err() {
            refusal = Some("setup bundle fails the dealer signature".into());
        }
        Trustee {
            me: bundle.trustee,
            vote_set: SectionReader::new(SectionKind::VoteSet, &params),
            codes: SectionReader::new(SectionKind::Codes, &params),
            params,
            key,
            bundle,
            posted: false,
            refusal,
        }
    }

    /// Arms the first board poll, at the earliest tick results can exist.
    pub fn start(&mut self, out: &mut Outbox) {
        out.timer_at(self.params.spec.t_end, TimerKind::Poll);
    }

    pub fn posted(&self) -> bool {
        self.posted
    }

    pub fn refusal(&self) -> Option<&str> {
        self.refusal.as_deref()
    }

    pub fn handle_timer(&mut self, now: u64, kind: TimerKind, out: &mut Outbox) {
        if kind != TimerKind::Poll || self.posted || self.refusal.is_some() {
            return;
        }
        for (reader, kind) in [
            (&self.vote_set, SectionKind::VoteSet),
            (&self.codes, SectionKind::Codes),
        ] {
            if reader.settled().is_none() {
                for b in 0..self.params.spec.n_bb {
                    out.send(Dest::Bb(BbId(b)), Payload::BbRead(kind));
                }
            }
        }
        out.timer_at(now + POLL_PERIOD, TimerKind::Poll);
    }

    pub fn handle_page(&mut self, page: SectionPage, out: &mut Outbox) {
        if self.posted || self.refusal.is_some() {
            return;
        }
        match page.section {
            SectionKind::VoteSet => {
                self.vote_set.offer(&page, &self.params);
            }
            SectionKind::Codes => {
                self.codes.offer(&page, &self.params);
            }
            _ => return,
        }
        let (Some(SectionData::VoteSet(final_set)), Some(SectionData::Codes(codes))) =
            (self.vote_set.settled(), self.codes.settled())
        else {
            return;
        };
        let final_set = final_set.entries.clone();
        let codes = codes.clone();
        match self.build_post(&final_set, &codes) {
            Ok(post) => {
                self.posted = true;
                for b in 0..self.params.spec.n_bb {
                    out.send(
                        Dest::Bb(BbId(b)),
                        Payload::BbWrite(BbWrite::TrusteePost(post.clone())),
                    );
                }
            }
            Err(why) => self.refusal = Some(why),
        }
    }

    pub fn build_post(
        &self,
        final_set: &[(Serial, VoteCode)],
        codes: &CodeTable,
    ) -> Result<TrusteePost, String> {
        let m = self.params.spec.m();
        let classes = count::classify_all(final_set, codes);
        if classes.len() != self.bundle.ballots.len() {
            return Err("code table does not cover the ballot range".into());
        }
        if let Some((serial, _)) = classes
            .iter()
            .find(|(_, c)| *c == BallotClass::Inconsistent)
        {
            return Err(format!(
                "ballot {} won with a code outside the code table",
                serial.0
            ));
        }
        let challenge = count::challenge_scalars(&classes);

        let mut openings = Vec::new();
        let mut zk_shares = Vec::new();
        let mut tally_rows = Vec::new();
        for (serial, class) in &classes {
            let ballot = self
                .bundle
                .ballots
                .get(serial)
                .ok_or_else(|| format!("no setup material for ballot {}", serial.0))?;
            match class {
                BallotClass::Voted { part, row } => {
                    for r in 0..m as u32 {
                        let trow = &ballot.part(*part)[r as usize];
                        let evaluated =
                            zkp::evaluate_state(m, &trow.zk_state_shares, &challenge)
                                .map_err(|e| format!("proof share evaluation: {e}"))?;
                        zk_shares.push(ZkSharePost { serial: *serial, part: *part, row: r, evaluated });
                    }
                    tally_rows.push(&ballot.part(*part)[*row as usize].opening_shares);
                    let unused = part.other();
                    for r in 0..m as u32 {
                        openings.push(OpeningPost {
                            serial: *serial,
                            part: unused,
                            row: r,
                            shares: ballot.part(unused)[r as usize].opening_shares.clone(),
                        });
                    }
                }
                BallotClass::Unvoted => {
                    for part in crate::ids::PartId::both() {
                        for r in 0..m as u32 {
                            openings.push(OpeningPost {
                                serial: *serial,
                                part,
                                row: r,
                                shares: ballot.part(part)[r as usize].opening_shares.clone(),
                            });
                        }
                    }
                }
                BallotClass::Inconsistent => unreachable!("rejected above"),
            }
        }

        let tally_shares = if tally_rows.is_empty() {
            Vec::new()
        } else {
            (0..m)
                .map(|coord| {
                    let per_row: Vec<_> = tally_rows.iter().map(|r| &r[coord]).collect();
                    vss::pedersen_share_sum(&per_row)
                })
                .collect()
        };

        let mut post = TrusteePost {
            trustee: self.me,
            openings,
            zk_shares,
            tally_shares,
            sig: self.key.sign(b""),
        };
        let digest = post.content_digest();
        post.sig = self
            .key
            .sign(&sigmsg::trustee_post(self.params.election, self.me, &digest));
        Ok(post)
    }
}
