//! Reliable broadcast of one slot owner's payload (Bracha echo/ready
//! pattern), hardened with the owner's signature on the payload so that
//! only genuinely signed payloads propagate. A node echoes the first valid
//! payload it sees, sends READY once n-f echoes agree on a digest (or f+1
//! READYs arrive for it), and delivers at 2f+1 READYs once it holds the
//! matching payload.

use std::collections::BTreeMap;

use agora_crypto::codec::digest_bytes;
use agora_crypto::sign::{PublicKey, Signature};

use crate::ids::{ElectionId, VcId};
use crate::sigmsg;

#[derive(Clone, Debug)]
pub enum RbcOut {
    Echo { payload: Vec<u8>, sig: Signature },
    Ready { digest: [u8; 32] },
}

#[derive(Clone, Debug)]
pub struct Rbc {
    election: ElectionId,
    slot: VcId,
    owner_pk: PublicKey,
    n: usize,
    f: usize,
    /// Every validly signed payload seen, by digest. A Byzantine owner can
    /// sign two payloads; quorums ensure at most one ever delivers.
    payloads: BTreeMap<[u8; 32], Vec<u8>>,
    echoed: bool,
    ready_sent: bool,
    echo_from: BTreeMap<u32, [u8; 32]>,
    ready_from: BTreeMap<u32, [u8; 32]>,
    delivered: Option<[u8; 32]>,
    out: Vec<RbcOut>,
}

impl Rbc {
    pub fn new(election: ElectionId, slot: VcId, owner_pk: PublicKey, n: usize, f: usize) -> Self {
        assert!(n >= 3 * f + 1, "need n >= 3f+1");
        Rbc {
            election,
            slot,
            owner_pk,
            n,
            f,
            payloads: BTreeMap::new(),
            echoed: false,
            ready_sent: false,
            echo_from: BTreeMap::new(),
            ready_from: BTreeMap::new(),
            delivered: None,
            out: Vec::new(),
        }
    }

    pub fn delivered(&self) -> Option<&Vec<u8>> {
        self.delivered.as_ref().map(|d| &self.payloads[d])
    }

    /// Drains messages to multicast (including back to self).
    pub fn take_out(&mut self) -> Vec<RbcOut> {
        std::mem::take(&mut self.out)
    }

    fn admit_payload(&mut self, payload: Vec<u8>, sig: &Signature) -> Option<[u8; 32]> {
        let digest = digest_bytes(&payload);
        let msg = sigmsg::ic_value(self.election, self.slot, &digest);
        if self.owner_pk.verify(&msg, sig).is_err() {
            return None;
        }
        self.payloads.entry(digest).or_insert(payload);
        if !self.echoed {
            self.echoed = true;
            self.out.push(RbcOut::Echo {
                payload: self.payloads[&digest].clone(),
                sig: *sig,
            });
        }
        Some(digest)
    }

    /// The owner's VALUE leg; also how this node starts its own slot.
    pub fn handle_value(&mut self, payload: Vec<u8>, sig: &Signature) {
        self.admit_payload(payload, sig);
        self.progress();
    }

    pub fn handle_echo(&mut self, from: u32, payload: Vec<u8>, sig: &Signature) {
        if let Some(digest) = self.admit_payload(payload, sig) {
            self.echo_from.entry(from).or_insert(digest);
        }
        self.progress();
    }

    pub fn handle_ready(&mut self, from: u32, digest: [u8; 32]) {
        self.ready_from.entry(from).or_insert(digest);
        self.progress();
    }

    fn count<'a>(votes: impl Iterator<Item = &'a [u8; 32]>) -> BTreeMap<[u8; 32], usize> {
        let mut out = BTreeMap::new();
        for d in votes {
            *out.entry(*d).or_insert(0) += 1;
        }
        out
    }

    fn progress(&mut self) {
        if !self.ready_sent {
            let echoes = Self::count(self.echo_from.values());
            let readies = Self::count(self.ready_from.values());
            let pick = echoes
                .iter()
                .find(|(_, c)| **c >= self.n - self.f)
                .or_else(|| readies.iter().find(|(_, c)| **c >= self.f + 1));
            if let Some((digest, _)) = pick {
                self.ready_sent = true;
                self.out.push(RbcOut::Ready { digest: *digest });
            }
        }
        if self.delivered.is_none() {
            let readies = Self::count(self.ready_from.values());
            for (digest, c) in readies {
                if c >= 2 * self.f + 1 && self.payloads.contains_key(&digest) {
                    self.delivered = Some(digest);
                    break;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use agora_crypto::rng::Prf;
    use agora_crypto::sign::KeyPair;
    use std::collections::VecDeque;

    fn setup() -> (ElectionId, KeyPair, Vec<Rbc>) {
        let election = ElectionId(7);
        let owner = KeyPair::generate(&mut Prf::from_u64(5).rng());
        let nodes = (0..4)
            .map(|_| Rbc::new(election, VcId(0), owner.public(), 4, 1))
            .collect();
        (election, owner, nodes)
    }

    fn sign(owner: &KeyPair, election: ElectionId, payload: &[u8]) -> Signature {
        owner.sign(&sigmsg::ic_value(election, VcId(0), &digest_bytes(payload)))
    }

    enum Net {
        Echo(Vec<u8>, Signature),
        Ready([u8; 32]),
    }

    fn drain(nodes: &mut Vec<Rbc>, queue: &mut VecDeque<(u32, u32, Net)>, active: &[usize]) {
        for &i in active {
            for m in nodes[i].take_out() {
                for j in active {
                    let item = match &m {
                        RbcOut::Echo { payload, sig } => Net::Echo(payload.clone(), *sig),
                        RbcOut::Ready { digest } => Net::Ready(*digest),
                    };
                    queue.push_back((i as u32, *j as u32, item));
                }
            }
        }
    }

    fn pump(nodes: &mut Vec<Rbc>, queue: &mut VecDeque<(u32, u32, Net)>, active: &[usize]) {
        drain(nodes, queue, active);
        while let Some((from, to, msg)) = queue.pop_front() {
            match msg {
                Net::Echo(p, s) => nodes[to as usize].handle_echo(from, p, &s),
                Net::Ready(d) => nodes[to as usize].handle_ready(from, d),
            }
            drain(nodes, queue, active);
        }
    }

    #[test]
    fn honest_owner_delivers_everywhere() {
        let (election, owner, mut nodes) = setup();
        let payload = b"the payload".to_vec();
        let sig = sign(&owner, election, &payload);
        for n in nodes.iter_mut() {
            n.handle_value(payload.clone(), &sig);
        }
        let mut queue = VecDeque::new();
        pump(&mut nodes, &mut queue, &[0, 1, 2, 3]);
        for n in &nodes {
            assert_eq!(n.delivered(), Some(&payload));
        }
    }

    #[test]
    fn owner_unicast_to_one_node_still_delivers() {
        let (election, owner, mut nodes) = setup();
        let payload = b"partial".to_vec();
        let sig = sign(&owner, election, &payload);
        nodes[2].handle_value(payload.clone(), &sig);
        let mut queue = VecDeque::new();
        pump(&mut nodes, &mut queue, &[0, 1, 2, 3]);
        for n in &nodes {
            assert_eq!(n.delivered(), Some(&payload));
        }
    }

    #[test]
    fn equivocating_owner_never_splits_delivery() {
        // Owner signs two payloads, sends p to nodes 0,1 and q to nodes 2,3.
        // Whatever happens, delivered values agree.
        let (election, owner, mut nodes) = setup();
        let p = b"pay-p".to_vec();
        let q = b"pay-q".to_vec();
        let sp = sign(&owner, election, &p);
        let sq = sign(&owner, election, &q);
        nodes[0].handle_value(p.clone(), &sp);
        nodes[1].handle_value(p.clone(), &sp);
        nodes[2].handle_value(q.clone(), &sq);
        nodes[3].handle_value(q.clone(), &sq);
        let mut queue = VecDeque::new();
        pump(&mut nodes, &mut queue, &[0, 1, 2, 3]);
        let delivered: Vec<_> = nodes.iter().filter_map(|n| n.delivered()).collect();
        if let Some(first) = delivered.first() {
            assert!(delivered.iter().all(|d| d == first));
        }
    }

    #[test]
    fn forged_signature_is_ignored() {
        let (election, _owner, mut nodes) = setup();
        let impostor = KeyPair::generate(&mut Prf::from_u64(6).rng());
        let payload = b"forged".to_vec();
        let sig = impostor.sign(&sigmsg::ic_value(election, VcId(0), &digest_bytes(&payload)));
        for n in nodes.iter_mut() {
            n.handle_value(payload.clone(), &sig);
        }
        let mut queue = VecDeque::new();
        pump(&mut nodes, &mut queue, &[0, 1, 2, 3]);
        for n in nodes.iter_mut() {
            assert!(n.delivered().is_none());
            assert!(n.take_out().is_empty());
        }
    }

    #[test]
    fn crashed_owner_delivers_nothing() {
        let (_, _, mut nodes) = setup();
        let mut queue = VecDeque::new();
        pump(&mut nodes, &mut queue, &[0, 1, 2, 3]);
        for n in &nodes {
            assert!(n.delivered().is_none());
        }
    }
}
