//! Message log between protocol agents.
//!
//! Every value that crosses a trust boundary in a run is pushed here with
//! its sender, receiver and data class, which makes privacy properties
//! checkable after the fact.

use std::fmt;

use crate::crypto::{hash, Digest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    Ma,
    Mp,
    Rider(u64),
    Sensor(usize),
    Oracle,
    Public,
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Ma => write!(f, "MA"),
            Agent::Mp => write!(f, "MP"),
            Agent::Rider(i) => write!(f, "rider{i}"),
            Agent::Sensor(i) => write!(f, "sensor{i}"),
            Agent::Oracle => write!(f, "oracle"),
            Agent::Public => write!(f, "public"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataClass {
    Sigma,
    Phi,
    LeaderId,
    AuditCount,
    Receipt,
    MerkleProof,
    Refusal,
    Query,
    PublicParams,
    Answer,
    Rejection,
    Transcript,
    Witness,
    TripData,
    MatchNotice,
    RiderNonce,
    Ciphertext,
    CoinFlip,
    Control,
    PublicKey,
}

impl DataClass {
    /// Classes the MA may receive when the proof system hides the witness:
    /// the commitment, audit outcomes, disputed receipts with the MP's
    /// response, coin-flip messages, and per query the answer or refusal
    /// and its proof. Anything else arriving at the MA is a leak.
    pub const MA_SANCTIONED: [DataClass; 11] = [
        DataClass::Sigma,
        DataClass::Phi,
        DataClass::LeaderId,
        DataClass::AuditCount,
        DataClass::Receipt,
        DataClass::MerkleProof,
        DataClass::Refusal,
        DataClass::Answer,
        DataClass::Rejection,
        DataClass::Transcript,
        DataClass::CoinFlip,
    ];

    pub fn sanctioned_for_ma(self) -> bool {
        Self::MA_SANCTIONED.contains(&self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub stage: u8,
    pub from: Agent,
    pub to: Agent,
    pub class: DataClass,
    pub payload: Vec<u8>,
}

impl Event {
    pub fn to_text(&self) -> String {
        let d = hash(&self.payload).to_hex();
        format!(
            "{} stage={} {} -> {} {:?} len={} h={}",
            self.seq,
            self.stage,
            self.from,
            self.to,
            self.class,
            self.payload.len(),
            &d[..16]
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct EventLog {
    events: Vec<Event>,
    stage: u8,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_stage(&mut self, stage: u8) {
        self.stage = stage;
    }

    pub fn push(&mut self, from: Agent, to: Agent, class: DataClass, payload: impl Into<Vec<u8>>) {
        let seq = self.events.len() as u64;
        log::trace!("{seq} stage={} {from} -> {to} {class:?}", self.stage);
        self.events.push(Event {
            seq,
            stage: self.stage,
            from,
            to,
            class,
            payload: payload.into(),
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn received_by(&self, agent: Agent) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.to == agent)
    }

    pub fn sent_by(&self, agent: Agent) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.from == agent)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// A digest of the whole log, stable across identical runs.
    pub fn digest(&self) -> Digest {
        let mut all = Vec::new();
        for e in &self.events {
            all.extend_from_slice(e.to_text().as_bytes());
            all.push(b'\n');
        }
        hash(&all)
    }

    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| e.to_text() + "\n").collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_by_receiver() {
        let mut log = EventLog::new();
        log.push(Agent::Mp, Agent::Ma, DataClass::Sigma, vec![1, 2]);
        log.set_stage(2);
        log.push(Agent::Ma, Agent::Mp, DataClass::Query, vec![3]);
        assert_eq!(log.received_by(Agent::Ma).count(), 1);
        assert_eq!(log.events()[1].stage, 2);
        assert!(DataClass::Sigma.sanctioned_for_ma());
        assert!(!DataClass::Witness.sanctioned_for_ma());
    }
}
