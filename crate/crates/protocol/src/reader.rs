//! Reading from the replicated board. A single replica can lie, serve
//! stale data or stay silent, so a read only settles once f+1 replicas
//! return byte-identical section content under valid signatures.

use std::collections::BTreeMap;

use crate::messages::{section_sig_msg, SectionData, SectionKind, SectionPage};
use crate::params::PublicParams;

#[derive(Clone, Debug)]
pub struct SectionReader {
    kind: SectionKind,
    threshold: usize,
    pages: BTreeMap<u32, ([u8; 32], SectionData)>,
    settled: Option<SectionData>,
}

impl SectionReader {
    pub fn new(kind: SectionKind, params: &PublicParams) -> Self {
        SectionReader {
            kind,
            threshold: params.spec.read_threshold(),
            pages: BTreeMap::new(),
            settled: None,
        }
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn settled(&self) -> Option<&SectionData> {
        self.settled.as_ref()
    }

    /// Feeds one reply in. Returns true when this page completed a quorum.
    pub fn offer(&mut self, page: &SectionPage, params: &PublicParams) -> bool {
        if self.settled.is_some()
            || page.section != self.kind
            || page.replica.0 >= params.spec.n_bb
            || self.pages.contains_key(&page.replica.0)
        {
            return false;
        }
        let Some(data) = &page.data else {
            // Not published there yet; the replica may answer later.
            return false;
        };
        let msg = section_sig_msg(params.election, page.replica, self.kind, &page.digest);
        let pk = &params.bb_pks[page.replica.0 as usize];
        if pk.verify(&msg, &page.sig).is_err() {
            return false;
        }
        if data.kind() != self.kind || data.compute_digest() != page.digest {
            return false;
        }
        self.pages.insert(page.replica.0, (page.digest, data.clone()));
        let mut counts: BTreeMap<[u8; 32], usize> = BTreeMap::new();
        for (d, _) in self.pages.values() {
            *counts.entry(*d).or_insert(0) += 1;
        }
        if let Some((winner, _)) = counts.into_iter().find(|(_, c)| *c >= self.threshold) {
            let data = self
                .pages
                .values()
                .find(|(d, _)| *d == winner)
                .map(|(_, data)| data.clone());
            self.settled = data;
            return true;
        }
        false
    }
}
