//! Signature-free binary consensus for n >= 3f+1, built on BV-broadcast
//! (Mostefaoui-Moumen-Raynal style). Each round: broadcast BVAL(est); echo
//! a value once f+1 distinct nodes sent it; accept it into bin_values at
//! 2f+1. Broadcast AUX with one accepted value, wait for n-f AUX whose
//! values are all accepted, then compare the value set against a common
//! coin. A singleton set matching the coin decides; otherwise the round
//! repeats with the coin or the singleton as the new estimate.
//!
//! The coin is a per-(instance, round) pseudo-random bit shared by every
//! node, which keeps runs reproducible. Termination against a scheduler
//! that predicts the coin is therefore heuristic, but safety never depends
//! on the coin.

use std::collections::{BTreeMap, BTreeSet};

use agora_crypto::rng::Prf;

use crate::messages::BcMsg;

#[derive(Clone, Debug, Default)]
struct RoundBox {
    bval_sent: [bool; 2],
    bval_from: [BTreeSet<u32>; 2],
    /// Accepted values, in acceptance order.
    bin: Vec<bool>,
    aux_from: BTreeMap<u32, bool>,
}

impl RoundBox {
    fn bin_has(&self, v: bool) -> bool {
        self.bin.contains(&v)
    }
}

#[derive(Clone, Debug)]
pub struct Binary {
    n: usize,
    f: usize,
    coin: Prf,
    started: bool,
    est: bool,
    round: u32,
    sent_aux: bool,
    decided: Option<bool>,
    /// Last round this node participates in once decided.
    halt_round: Option<u32>,
    rounds: BTreeMap<u32, RoundBox>,
    buffered: Vec<(u32, BcMsg)>,
    out: Vec<BcMsg>,
}

impl Binary {
    /// `coin` must be derived identically by every node of the instance.
    pub fn new(n: usize, f: usize, coin: Prf) -> Self {
        assert!(n >= 3 * f + 1, "need n >= 3f+1");
        Binary {
            n,
            f,
            coin,
            started: false,
            est: false,
            round: 0,
            sent_aux: false,
            decided: None,
            halt_round: None,
            rounds: BTreeMap::new(),
            buffered: Vec::new(),
            out: Vec::new(),
        }
    }

    pub fn decision(&self) -> Option<bool> {
        self.decided
    }

    pub fn started(&self) -> bool {
        self.started
    }

    /// Drains messages to multicast. The caller must deliver each drained
    /// message to every node, including back to this one.
    pub fn take_out(&mut self) -> Vec<BcMsg> {
        std::mem::take(&mut self.out)
    }

    fn coin_at(&self, round: u32) -> bool {
        self.coin.derive_indexed("round", round as u64).bit()
    }

    pub fn propose(&mut self, est: bool) {
        if self.started {
            return;
        }
        self.started = true;
        self.est = est;
        self.send_bval(0, est);
        let buffered = std::mem::take(&mut self.buffered);
        for (from, msg) in buffered {
            self.apply(from, msg);
        }
        self.progress();
    }

    pub fn handle(&mut self, from: u32, msg: BcMsg) {
        if !self.started {
            self.buffered.push((from, msg));
            return;
        }
        self.apply(from, msg);
        self.progress();
    }

    fn apply(&mut self, from: u32, msg: BcMsg) {
        match msg {
            BcMsg::BVal { round, value } => {
                self.rounds.entry(round).or_default().bval_from[value as usize]
                    .insert(from);
            }
            BcMsg::Aux { round, value } => {
                self.rounds.entry(round).or_default().aux_from.entry(from).or_insert(value);
            }
        }
    }

    fn participating(&self) -> bool {
        match self.halt_round {
            Some(h) => self.round <= h,
            None => true,
        }
    }

    fn send_bval(&mut self, round: u32, value: bool) {
        let b = self.rounds.entry(round).or_default();
        if !b.bval_sent[value as usize] {
            b.bval_sent[value as usize] = true;
            self.out.push(BcMsg::BVal { round, value });
        }
    }

    fn progress(&mut self) {
        loop {
            let mut changed = false;

            // Echo and accept, for any round we have traffic for.
            let keys: Vec<u32> = self.rounds.keys().copied().collect();
            for r in keys {
                for v in [false, true] {
                    let count = self.rounds[&r].bval_from[v as usize].len();
                    if count >= self.f + 1
                        && !self.rounds[&r].bval_sent[v as usize]
                        && self.participating()
                    {
                        self.send_bval(r, v);
                    }
                    if count >= 2 * self.f + 1 && !self.rounds[&r].bin_has(v) {
                        self.rounds.get_mut(&r).unwrap().bin.push(v);
                        changed = true;
                    }
                }
            }

            if !self.participating() {
                if changed {
                    continue;
                }
                break;
            }

            let r = self.round;
            let b = self.rounds.entry(r).or_default();
            if !self.sent_aux {
                if let Some(&w) = b.bin.first() {
                    self.sent_aux = true;
                    self.out.push(BcMsg::Aux { round: r, value: w });
                    changed = true;
                }
            }

            if self.sent_aux {
                let b = &self.rounds[&r];
                let valid: Vec<bool> = b
                    .aux_from
                    .values()
                    .copied()
                    .filter(|v| b.bin_has(*v))
                    .collect();
                if valid.len() >= self.n - self.f {
                    let has = [valid.contains(&false), valid.contains(&true)];
                    let s = self.coin_at(r);
                    if has[0] != has[1] {
                        let v = has[1];
                        self.est = v;
                        if v == s && self.decided.is_none() {
                            self.decided = Some(v);
                            self.halt_round = Some(self.next_coin_round(r, v));
                        }
                    } else {
                        self.est = s;
                    }
                    self.round = r + 1;
                    self.sent_aux = false;
                    if self.participating() {
                        let est = self.est;
                        self.send_bval(r + 1, est);
                    }
                    changed = true;
                }
            }

            if !changed {
                break;
            }
        }
    }

    /// First round after `r` whose coin equals `v`; bounded for safety.
    fn next_coin_round(&self, r: u32, v: bool) -> u32 {
        for r2 in r + 1..r + 65 {
            if self.coin_at(r2) == v {
                return r2;
            }
        }
        r + 64
    }
}
