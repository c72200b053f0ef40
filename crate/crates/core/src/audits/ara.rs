//! Aggregated roadside audit.
//!
//! One sensor per road. After the collection window the MA and the MP
//! jointly elect a leader sensor by coin flip. Every other sensor encrypts
//! its count to the leader, the leader releases only the sum `phi` to both
//! parties, and all sensors are then cleared and erased.

use rand::{CryptoRng, RngCore};

use crate::crypto::{CoinFlipTranscript, CoinFlipper, CoinParty, KeyPair, PublicKey};
use crate::harness::events::{Agent, DataClass, EventLog};
use crate::netmodel::Network;

use super::sensor::{control_payload, jointly_authorize, SensorAction, SensorState, Sighting};
use super::AuditError;

/// What the MA and the MP learn from an ARA run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AraAggregate {
    pub phi: u64,
    pub leader: usize,
    pub contributors: Vec<usize>,
}

/// One sensor on every edge of `network`, indexed by edge id.
pub fn deploy_ara_sensors<R: RngCore + CryptoRng>(
    network: &Network,
    pk_ma: &PublicKey,
    pk_mp: &PublicKey,
    rng: &mut R,
) -> Vec<SensorState> {
    (0..network.edge_count())
        .map(|e| SensorState::new(e, e, pk_ma.clone(), pk_mp.clone(), u32::MAX, rng))
        .collect()
}

/// Delivers each sighting to the sensor on its road. Sightings on roads
/// without a sensor are lost, as are any the sensor refuses.
pub fn collect(sensors: &mut [SensorState], sightings: &[Sighting]) -> usize {
    let mut accepted = 0;
    for s in sightings {
        if let Some(sensor) = sensors.iter_mut().find(|x| x.location() == s.location) {
            if sensor.observe(*s).is_ok() {
                accepted += 1;
            }
        }
    }
    accepted
}

/// Elects a leader among `n` sensors with a commit-reveal flip between the
/// MA (first mover) and the MP.
pub fn elect_leader<R: RngCore + CryptoRng>(
    n: usize,
    rng: &mut R,
    bus: &mut EventLog,
) -> Result<usize, AuditError> {
    if n == 0 {
        return Err(AuditError::NoSensors);
    }
    let mut seed_ma = [0u8; 32];
    let mut seed_mp = [0u8; 32];
    rng.fill_bytes(&mut seed_ma);
    rng.fill_bytes(&mut seed_mp);
    let ma = CoinFlipper::new(seed_ma.to_vec(), rng);
    let mp = CoinFlipper::new(seed_mp.to_vec(), rng);
    let mut t = CoinFlipTranscript::new();
    t.commit(CoinParty::A, ma.commitment());
    bus.push(
        Agent::Ma,
        Agent::Mp,
        DataClass::CoinFlip,
        ma.commitment().0.to_vec(),
    );
    t.commit(CoinParty::B, mp.commitment());
    bus.push(
        Agent::Mp,
        Agent::Ma,
        DataClass::CoinFlip,
        mp.commitment().0.to_vec(),
    );
    let ra = ma.reveal();
    bus.push(Agent::Ma, Agent::Mp, DataClass::CoinFlip, ra.seed.clone());
    t.reveal_a(ra)?;
    let rb = mp.reveal();
    bus.push(Agent::Mp, Agent::Ma, DataClass::CoinFlip, rb.seed.clone());
    let bits = t.reveal_b(&rb)?;
    Ok(bits.index(n))
}

fn authorize_all(
    sensors: &mut [SensorState],
    action: impl Fn(&SensorState) -> SensorAction,
    ma: &KeyPair,
    mp: &KeyPair,
    bus: &mut EventLog,
) -> Result<(), AuditError> {
    for s in sensors.iter_mut() {
        let a = action(s);
        let a_tag = a.tag();
        let auth = jointly_authorize(s, &a, ma, mp)?;
        bus.push(
            Agent::Ma,
            Agent::Sensor(s.id),
            DataClass::Control,
            control_payload(a_tag, &auth.ma),
        );
        bus.push(
            Agent::Mp,
            Agent::Sensor(s.id),
            DataClass::Control,
            control_payload(a_tag, &auth.mp),
        );
        s.apply(&a, &auth)?;
    }
    Ok(())
}

/// Runs the aggregation phase over sensors that have finished collecting.
pub fn ara_run<R: RngCore + CryptoRng>(
    sensors: &mut [SensorState],
    ma: &KeyPair,
    mp: &KeyPair,
    rng: &mut R,
    bus: &mut EventLog,
) -> Result<AraAggregate, AuditError> {
    let leader = elect_leader(sensors.len(), rng, bus)?;
    bus.push(
        Agent::Public,
        Agent::Ma,
        DataClass::LeaderId,
        (leader as u64).to_be_bytes().to_vec(),
    );
    bus.push(
        Agent::Public,
        Agent::Mp,
        DataClass::LeaderId,
        (leader as u64).to_be_bytes().to_vec(),
    );

    let leader_id = sensors[leader].identity_key().clone();
    let leader_enc = sensors[leader].encryption_key().clone();
    let others: Vec<PublicKey> = sensors
        .iter()
        .filter(|s| s.id != sensors[leader].id)
        .map(|s| s.identity_key().clone())
        .collect();

    authorize_all(sensors, |_| SensorAction::Permit, ma, mp, bus)?;
    authorize_all(
        sensors,
        |s| {
            if s.identity_key() == &leader_id {
                SensorAction::SetWhitelists {
                    senders: vec![ma.public.clone(), mp.public.clone()],
                    receivers: others.clone(),
                }
            } else {
                SensorAction::SetWhitelists {
                    senders: vec![leader_id.clone()],
                    receivers: vec![],
                }
            }
        },
        ma,
        mp,
        bus,
    )?;

    let mut total = sensors[leader].local_count();
    let mut contributors = vec![sensors[leader].id];
    for i in 0..sensors.len() {
        if i == leader {
            continue;
        }
        let count = sensors[i].local_count();
        let from = sensors[i].identity_key().clone();
        let ct = sensors[i].transmit(&leader_id, &leader_enc, &count.to_be_bytes(), rng)?;
        bus.push(
            Agent::Sensor(sensors[i].id),
            Agent::Sensor(sensors[leader].id),
            DataClass::Ciphertext,
            ct.0.clone(),
        );
        let plain = sensors[leader].receive(&from, &ct)?;
        let bytes: [u8; 8] = plain
            .as_slice()
            .try_into()
            .map_err(|_| AuditError::Malformed)?;
        total += u64::from_be_bytes(bytes);
        contributors.push(sensors[i].id);
    }

    let leader_sensor = sensors[leader].id;
    let to_ma = sensors[leader].release(&ma.public, &total.to_be_bytes())?;
    bus.push(
        Agent::Sensor(leader_sensor),
        Agent::Ma,
        DataClass::Phi,
        to_ma,
    );
    let to_mp = sensors[leader].release(&mp.public, &total.to_be_bytes())?;
    bus.push(
        Agent::Sensor(leader_sensor),
        Agent::Mp,
        DataClass::Phi,
        to_mp,
    );

    authorize_all(sensors, |_| SensorAction::ClearWhitelists, ma, mp, bus)?;
    authorize_all(sensors, |_| SensorAction::Erase, ma, mp, bus)?;

    contributors.sort_unstable();
    Ok(AraAggregate {
        phi: total,
        leader: leader_sensor,
        contributors,
    })
}
