//! Roadside sensors as state machines.
//!
//! A sensor logs the vehicles it sees, signs every measurement, and only
//! releases data along paths that both the MA and the MP have authorized.
//! Its signing key never leaves the struct.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};

use crate::codec::Writer;
use crate::crypto::{
    hash, keygen, pke_decrypt, pke_encrypt, pke_keygen, sign, verify_sig, Ciphertext, Digest,
    KeyPair, PublicKey, Signature,
};
use crate::netmodel::{traversals, EdgeId, TripRecord};

use super::phi::round_of;
use super::AuditError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Ma,
    Mp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lifecycle {
    Collecting,
    Reporting,
    Erased,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SensorError {
    #[error("operation not allowed while {0:?}")]
    Lifecycle(Lifecycle),
    #[error("signal picked up at edge {reported} but the sensor sits on edge {assigned}")]
    RelayRejected { assigned: EdgeId, reported: EdgeId },
    #[error("destination is not on the sender whitelist")]
    NotWhitelisted,
    #[error("source is not on the receiver whitelist")]
    UnknownSource,
    #[error("both parties must permit data release first")]
    NoPermission,
    #[error("joint authorization is missing or invalid")]
    BadAuthorization,
    #[error("could not decrypt the incoming message")]
    Decryption,
    #[error("signing failed")]
    Signing,
}

/// A vehicle passing a sensor. `location` is where the signal was received;
/// it differs from `edge` only when someone relays a signal from elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sighting {
    pub edge: EdgeId,
    pub location: EdgeId,
    pub vehicle_id: u64,
    pub period: u8,
    pub timestamp: u32,
}

/// Every honest sighting produced by a set of trips, in trip order.
pub fn sightings_from_trips(trips: &[TripRecord]) -> Vec<Sighting> {
    let mut out = Vec::new();
    for t in trips {
        let Ok(tr) = traversals(t) else { continue };
        for s in tr {
            out.push(Sighting {
                edge: s.edge,
                location: s.edge,
                vehicle_id: t.vehicle.vehicle_id,
                period: s.period.number(),
                timestamp: s.entry_time,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub sensor: usize,
    pub edge: EdgeId,
    pub round: u32,
    pub vehicle_id: u64,
    pub period: u8,
    pub timestamp: u32,
    pub location: EdgeId,
    pub signature: Signature,
}

impl Measurement {
    fn message(sensor: usize, s: &Sighting, round: u32) -> Vec<u8> {
        let mut w = Writer::new();
        w.str("measurement")
            .u64(sensor as u64)
            .u64(s.edge as u64)
            .u32(round)
            .u64(s.vehicle_id)
            .u8(s.period)
            .u32(s.timestamp)
            .u64(s.location as u64);
        w.finish()
    }

    pub fn verify(&self, pk: &PublicKey) -> bool {
        let s = Sighting {
            edge: self.edge,
            location: self.location,
            vehicle_id: self.vehicle_id,
            period: self.period,
            timestamp: self.timestamp,
        };
        verify_sig(
            pk,
            &Self::message(self.sensor, &s, self.round),
            &self.signature,
        )
    }

    pub fn to_text(&self) -> String {
        format!(
            "round={} edge={} veh={} period={} sig={}",
            self.round,
            self.edge,
            self.vehicle_id,
            self.period,
            self.signature.to_hex()
        )
    }
}

/// A signed per-(edge, round) count sent to the MA by an RRA sensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountReport {
    pub sensor: usize,
    pub edge: EdgeId,
    pub round: u32,
    pub count: u64,
    pub location: EdgeId,
    pub signature: Signature,
}

impl CountReport {
    pub(crate) fn message(
        sensor: usize,
        edge: EdgeId,
        round: u32,
        count: u64,
        location: EdgeId,
    ) -> Vec<u8> {
        let mut w = Writer::new();
        w.str("count")
            .u64(sensor as u64)
            .u64(edge as u64)
            .u32(round)
            .u64(count)
            .u64(location as u64);
        w.finish()
    }

    pub fn verify(&self, pk: &PublicKey) -> bool {
        let m = Self::message(
            self.sensor,
            self.edge,
            self.round,
            self.count,
            self.location,
        );
        verify_sig(pk, &m, &self.signature)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&Self::message(
            self.sensor,
            self.edge,
            self.round,
            self.count,
            self.location,
        ))
        .bytes(&self.signature.0);
        w.finish()
    }
}

/// State changes that need both parties' signatures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SensorAction {
    Permit,
    SetWhitelists {
        senders: Vec<PublicKey>,
        receivers: Vec<PublicKey>,
    },
    ClearWhitelists,
    Erase,
}

impl SensorAction {
    /// Short name, used to label control messages.
    pub fn tag(&self) -> &'static str {
        match self {
            SensorAction::Permit => "permit",
            SensorAction::SetWhitelists { .. } => "whitelist",
            SensorAction::ClearWhitelists => "clear",
            SensorAction::Erase => "erase",
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            SensorAction::Permit => {
                w.u8(0);
            }
            SensorAction::SetWhitelists { senders, receivers } => {
                w.u8(1).u32(senders.len() as u32);
                for k in senders {
                    w.bytes(&k.0);
                }
                w.u32(receivers.len() as u32);
                for k in receivers {
                    w.bytes(&k.0);
                }
            }
            SensorAction::ClearWhitelists => {
                w.u8(2);
            }
            SensorAction::Erase => {
                w.u8(3);
            }
        }
        w.finish()
    }
}

/// Both parties' signatures over one action at one sensor epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointAuthorization {
    pub ma: Signature,
    pub mp: Signature,
}

pub struct SensorState {
    pub id: usize,
    identity: KeyPair,
    enc: KeyPair,
    location: EdgeId,
    pk_ma: PublicKey,
    pk_mp: PublicKey,
    sender_whitelist: BTreeSet<PublicKey>,
    receiver_whitelist: BTreeSet<PublicKey>,
    permitted: bool,
    epoch: u64,
    log: Vec<Measurement>,
    lifecycle: Lifecycle,
    round_len: u32,
}

impl std::fmt::Debug for SensorState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensorState")
            .field("id", &self.id)
            .field("location", &self.location)
            .field("lifecycle", &self.lifecycle)
            .field("measurements", &self.log.len())
            .finish_non_exhaustive()
    }
}

impl SensorState {
    pub fn new<R: RngCore + CryptoRng>(
        id: usize,
        location: EdgeId,
        pk_ma: PublicKey,
        pk_mp: PublicKey,
        round_len: u32,
        rng: &mut R,
    ) -> Self {
        Self {
            id,
            identity: keygen(rng),
            enc: pke_keygen(rng),
            location,
            pk_ma,
            pk_mp,
            sender_whitelist: BTreeSet::new(),
            receiver_whitelist: BTreeSet::new(),
            permitted: false,
            epoch: 0,
            log: Vec::new(),
            lifecycle: Lifecycle::Collecting,
            round_len: round_len.max(1),
        }
    }

    /// The key measurements and count reports are signed with.
    pub fn identity_key(&self) -> &PublicKey {
        &self.identity.public
    }

    /// The key other sensors encrypt to.
    pub fn encryption_key(&self) -> &PublicKey {
        &self.enc.public
    }

    pub fn location(&self) -> EdgeId {
        self.location
    }

    pub fn lifecycle(&self) -> Lifecycle {
        self.lifecycle
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_permitted(&self) -> bool {
        self.permitted
    }

    pub fn sender_whitelist(&self) -> &BTreeSet<PublicKey> {
        &self.sender_whitelist
    }

    pub fn receiver_whitelist(&self) -> &BTreeSet<PublicKey> {
        &self.receiver_whitelist
    }

    /// The signed measurement log, for jointly supervised inspection.
    pub fn log(&self) -> &[Measurement] {
        &self.log
    }

    /// Moves an RRA sensor to a new road and starts a fresh log.
    pub fn reassign(&mut self, edge: EdgeId) -> Result<(), SensorError> {
        if self.lifecycle == Lifecycle::Erased {
            return Err(SensorError::Lifecycle(self.lifecycle));
        }
        self.location = edge;
        self.log.clear();
        self.lifecycle = Lifecycle::Collecting;
        Ok(())
    }

    /// Records a passing vehicle. Signals received away from the sensor's
    /// own road are relays and are refused.
    pub fn observe(&mut self, s: Sighting) -> Result<(), SensorError> {
        if self.lifecycle != Lifecycle::Collecting {
            return Err(SensorError::Lifecycle(self.lifecycle));
        }
        if s.location != self.location || s.edge != self.location {
            return Err(SensorError::RelayRejected {
                assigned: self.location,
                reported: s.location,
            });
        }
        let round = round_of(s.timestamp, self.round_len);
        let signature = sign(
            &self.identity.secret,
            &Measurement::message(self.id, &s, round),
        )
        .map_err(|_| SensorError::Signing)?;
        self.log.push(Measurement {
            sensor: self.id,
            edge: s.edge,
            round,
            vehicle_id: s.vehicle_id,
            period: s.period,
            timestamp: s.timestamp,
            location: s.location,
            signature,
        });
        Ok(())
    }

    /// Period 2 and 3 passes in the log. Honest trips never repeat an edge,
    /// so this is the number of trips that used the road.
    pub fn local_count(&self) -> u64 {
        self.log
            .iter()
            .filter(|m| m.period == 2 || m.period == 3)
            .count() as u64
    }

    /// Passes during one round.
    pub fn round_count(&self, round: u32) -> u64 {
        self.log
            .iter()
            .filter(|m| m.round == round && (m.period == 2 || m.period == 3))
            .count() as u64
    }

    /// The digest each party signs to authorize `action` now.
    pub fn action_digest(&self, action: &SensorAction) -> Digest {
        let mut w = Writer::new();
        w.str("sensor-action")
            .u64(self.id as u64)
            .u64(self.epoch)
            .bytes(&action.encode());
        hash(&w.finish())
    }

    /// One party's half of a joint authorization.
    pub fn sign_action(
        &self,
        party_keys: &KeyPair,
        action: &SensorAction,
    ) -> Result<Signature, AuditError> {
        Ok(sign(
            &party_keys.secret,
            self.action_digest(action).as_bytes(),
        )?)
    }

    /// Applies an action if both the MA and the MP signed it for the
    /// current epoch. Each accepted action advances the epoch, so an
    /// authorization cannot be replayed.
    pub fn apply(
        &mut self,
        action: &SensorAction,
        auth: &JointAuthorization,
    ) -> Result<(), SensorError> {
        if self.lifecycle == Lifecycle::Erased {
            return Err(SensorError::Lifecycle(self.lifecycle));
        }
        let d = self.action_digest(action);
        if !verify_sig(&self.pk_ma, d.as_bytes(), &auth.ma)
            || !verify_sig(&self.pk_mp, d.as_bytes(), &auth.mp)
        {
            return Err(SensorError::BadAuthorization);
        }
        self.epoch += 1;
        match action {
            SensorAction::Permit => self.permitted = true,
            SensorAction::SetWhitelists { senders, receivers } => {
                self.sender_whitelist = senders.iter().cloned().collect();
                self.receiver_whitelist = receivers.iter().cloned().collect();
            }
            SensorAction::ClearWhitelists => {
                self.sender_whitelist.clear();
                self.receiver_whitelist.clear();
            }
            SensorAction::Erase => {
                self.log.clear();
                self.permitted = false;
                self.lifecycle = Lifecycle::Erased;
            }
        }
        Ok(())
    }

    fn may_send(&self, dest: &PublicKey) -> Result<(), SensorError> {
        if self.lifecycle == Lifecycle::Erased {
            return Err(SensorError::Lifecycle(self.lifecycle));
        }
        if !self.sender_whitelist.contains(dest) {
            return Err(SensorError::NotWhitelisted);
        }
        if !self.permitted {
            return Err(SensorError::NoPermission);
        }
        Ok(())
    }

    /// Encrypts `payload` for another sensor.
    pub fn transmit<R: RngCore + CryptoRng>(
        &mut self,
        dest_identity: &PublicKey,
        dest_encryption: &PublicKey,
        payload: &[u8],
        rng: &mut R,
    ) -> Result<Ciphertext, SensorError> {
        self.may_send(dest_identity)?;
        self.lifecycle = Lifecycle::Reporting;
        pke_encrypt(dest_encryption, payload, rng).map_err(|_| SensorError::Decryption)
    }

    /// Releases a plaintext result to a whitelisted party.
    pub fn release(
        &mut self,
        dest_identity: &PublicKey,
        payload: &[u8],
    ) -> Result<Vec<u8>, SensorError> {
        self.may_send(dest_identity)?;
        self.lifecycle = Lifecycle::Reporting;
        Ok(payload.to_vec())
    }

    /// Decrypts a message from a whitelisted sensor.
    pub fn receive(
        &mut self,
        from_identity: &PublicKey,
        ct: &Ciphertext,
    ) -> Result<Vec<u8>, SensorError> {
        if self.lifecycle == Lifecycle::Erased {
            return Err(SensorError::Lifecycle(self.lifecycle));
        }
        if !self.receiver_whitelist.contains(from_identity) {
            return Err(SensorError::UnknownSource);
        }
        pke_decrypt(&self.enc.secret, ct).map_err(|_| SensorError::Decryption)
    }

    /// Signs this round's count for the MA.
    pub fn count_report(
        &mut self,
        dest_identity: &PublicKey,
        round: u32,
    ) -> Result<CountReport, SensorError> {
        self.may_send(dest_identity)?;
        let count = self.round_count(round);
        let m = CountReport::message(self.id, self.location, round, count, self.location);
        let signature = sign(&self.identity.secret, &m).map_err(|_| SensorError::Signing)?;
        Ok(CountReport {
            sensor: self.id,
            edge: self.location,
            round,
            count,
            location: self.location,
            signature,
        })
    }
}

/// Bytes of a control message: the action name then one party's signature.
pub fn control_payload(tag: &str, sig: &Signature) -> Vec<u8> {
    let mut out = tag.as_bytes().to_vec();
    out.push(b':');
    out.extend_from_slice(&sig.0);
    out
}

/// Both parties sign `action` for `sensor`.
pub fn jointly_authorize(
    sensor: &SensorState,
    action: &SensorAction,
    ma: &KeyPair,
    mp: &KeyPair,
) -> Result<JointAuthorization, AuditError> {
    Ok(JointAuthorization {
        ma: sensor.sign_action(ma, action)?,
        mp: sensor.sign_action(mp, action)?,
    })
}
