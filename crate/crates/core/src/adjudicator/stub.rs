use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{AdjudicationBackend, AdjudicationRequest, BackendError};

/// Canned replies, matched by request key first and then by `agent/task/focus` label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureTable {
    replies: BTreeMap<String, String>,
}

impl FixtureTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key_or_label: impl Into<String>, reply: impl Into<String>) {
        self.replies.insert(key_or_label.into(), reply.into());
    }

    pub fn lookup(&self, request: &AdjudicationRequest) -> Option<&str> {
        self.replies
            .get(request.key())
            .or_else(|| self.replies.get(&request.label()))
            .map(String::as_str)
    }
}

impl From<BTreeMap<String, String>> for FixtureTable {
    fn from(replies: BTreeMap<String, String>) -> Self {
        FixtureTable { replies }
    }
}

/// Deterministic offline backend: fixture reply if present, otherwise an
/// integer 0–10 derived from the request key and seed.
#[derive(Debug, Clone)]
pub struct StubBackend {
    seed: u64,
    fixtures: FixtureTable,
}

impl StubBackend {
    pub fn new(seed: u64, fixtures: FixtureTable) -> Self {
        StubBackend { seed, fixtures }
    }

    pub fn reply(&self, request: &AdjudicationRequest) -> String {
        if let Some(r) = self.fixtures.lookup(request) {
            return r.to_string();
        }
        (keyed_hash(request.key(), self.seed) % 11).to_string()
    }
}

fn keyed_hash(key: &str, seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(key.as_bytes());
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

impl AdjudicationBackend for StubBackend {
    fn complete(&self, request: &AdjudicationRequest, _prompt: &str) -> Result<String, BackendError> {
        Ok(self.reply(request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CapabilityProfile, Cell, TaskDescription};

    fn request(agent: &str) -> AdjudicationRequest {
        AdjudicationRequest::new(
            &CapabilityProfile::new(agent, Cell::new(0, 0)),
            &TaskDescription::new("T", Cell::new(1, 0)),
            "anchoring",
        )
    }

    #[test]
    fn fixture_by_label_and_key() {
        let r = request("H");
        let mut f = FixtureTable::new();
        f.insert("H/T/anchoring", "9");
        assert_eq!(StubBackend::new(1, f.clone()).reply(&r), "9");
        f.insert(r.key(), "3");
        assert_eq!(StubBackend::new(1, f).reply(&r), "3");
    }

    #[test]
    fn unknown_key_is_pure_and_in_range() {
        let stub = StubBackend::new(1, FixtureTable::new());
        let a = request("A");
        assert_eq!(stub.reply(&a), stub.reply(&a));
        for agent in ["A", "B", "C", "D", "E"] {
            let n: u64 = stub.reply(&request(agent)).parse().unwrap();
            assert!(n <= 10);
        }
    }

    #[test]
    fn seed_changes_replies() {
        let replies = |seed| {
            let stub = StubBackend::new(seed, FixtureTable::new());
            (0..20).map(|i| stub.reply(&request(&format!("R{i}")))).collect::<Vec<_>>()
        };
        assert_ne!(replies(1), replies(2));
        assert_eq!(replies(7), replies(7));
    }
}
