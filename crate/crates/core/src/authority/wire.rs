//! Canonical byte encodings of queries, answers, certificates, witnesses and
//! circuits. These are the bytes that proof transcripts bind to.

use crate::audits::AuditedCount;
use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{Digest, Nonce, PublicKey};
use crate::flowopt::{
    FarkasCertificate, KktCertificate, MaObjective, MpObjective, Project, RouteCertificate,
};
use crate::netmodel::{Network, TripRecord};

use super::circuit::{AuditPublic, EvaluationCircuit, Witness};
use super::query::{Certificate, Query, QueryValue, RegPredicate};
use super::EvalError;

fn usizes(w: &mut Writer, v: &[usize]) {
    w.u32(v.len() as u32);
    for &x in v {
        w.u64(x as u64);
    }
}

fn read_usizes(r: &mut Reader) -> Result<Vec<usize>, DecodeError> {
    let n = r.u32()?;
    (0..n).map(|_| r.u64().map(|x| x as usize)).collect()
}

fn f64_rows(w: &mut Writer, rows: &[Vec<f64>]) {
    w.u32(rows.len() as u32);
    for row in rows {
        w.f64s(row);
    }
}

fn read_f64_rows(r: &mut Reader) -> Result<Vec<Vec<f64>>, DecodeError> {
    let n = r.u32()?;
    (0..n).map(|_| r.f64s()).collect()
}

fn predicate(w: &mut Writer, p: &RegPredicate) {
    match p {
        RegPredicate::WaitTimeEquity { regions, tau } => {
            w.u8(0);
            usizes(w, regions);
            w.f64(*tau);
        }
        RegPredicate::CongestionContribution { background, limit } => {
            w.u8(1).f64s(background).f64(*limit);
        }
        RegPredicate::SpeedLimit { limits } => {
            w.u8(2).f64s(limits);
        }
        RegPredicate::Period2Accuracy => {
            w.u8(3);
        }
        RegPredicate::EmissionsLimit(l) => {
            w.u8(4).f64(*l);
        }
    }
}

fn read_predicate(r: &mut Reader) -> Result<RegPredicate, DecodeError> {
    Ok(match r.u8()? {
        0 => RegPredicate::WaitTimeEquity {
            regions: read_usizes(r)?,
            tau: r.f64()?,
        },
        1 => RegPredicate::CongestionContribution {
            background: r.f64s()?,
            limit: r.f64()?,
        },
        2 => RegPredicate::SpeedLimit { limits: r.f64s()? },
        3 => RegPredicate::Period2Accuracy,
        4 => RegPredicate::EmissionsLimit(r.f64()?),
        t => return Err(DecodeError::BadTag(t)),
    })
}

pub fn encode_query(q: &Query) -> Vec<u8> {
    let mut w = Writer::new();
    match q {
        Query::TripCount => {
            w.u8(0);
        }
        Query::Regulation(preds) => {
            w.u8(1).u32(preds.len() as u32);
            for p in preds {
                predicate(&mut w, p);
            }
        }
        Query::Wage { alpha, beta } => {
            w.u8(2).f64(*alpha).f64(*beta);
        }
        Query::WaitEquity { regions, tau } => {
            w.u8(3);
            usizes(&mut w, regions);
            w.f64(*tau);
        }
        Query::CongestionPricing { period } => {
            w.u8(4).f64(*period);
        }
        Query::SopSelection {
            projects,
            period,
            mp,
            ma,
        } => {
            w.u8(5).u32(projects.len() as u32);
            for p in projects {
                w.str(&p.name).str(&p.to_text());
            }
            w.f64(*period)
                .f64(mp.fare)
                .f64(mp.cost_per_length)
                .u8(match ma {
                    MaObjective::NegTotalTravelTime => 0,
                    MaObjective::NegVehicleDistance => 1,
                });
        }
        Query::CongestionContribution {
            background,
            threshold,
        } => {
            w.u8(6).f64s(background).f64(*threshold);
        }
        Query::Emissions { threshold } => {
            w.u8(7).f64(*threshold);
        }
        Query::RawTrips => {
            w.u8(8);
        }
    }
    w.finish()
}

pub fn decode_query(bytes: &[u8]) -> Result<Query, EvalError> {
    let mut r = Reader::new(bytes);
    let q = match r.u8()? {
        0 => Query::TripCount,
        1 => {
            let n = r.u32()?;
            Query::Regulation(
                (0..n)
                    .map(|_| read_predicate(&mut r))
                    .collect::<Result<_, _>>()?,
            )
        }
        2 => Query::Wage {
            alpha: r.f64()?,
            beta: r.f64()?,
        },
        3 => Query::WaitEquity {
            regions: read_usizes(&mut r)?,
            tau: r.f64()?,
        },
        4 => Query::CongestionPricing { period: r.f64()? },
        5 => {
            let n = r.u32()?;
            let mut projects = Vec::new();
            for _ in 0..n {
                let name = r.str()?.to_string();
                let text = r.str()?;
                projects.push(Project::parse(&name, text)?);
            }
            Query::SopSelection {
                projects,
                period: r.f64()?,
                mp: MpObjective {
                    fare: r.f64()?,
                    cost_per_length: r.f64()?,
                },
                ma: match r.u8()? {
                    0 => MaObjective::NegTotalTravelTime,
                    1 => MaObjective::NegVehicleDistance,
                    t => return Err(DecodeError::BadTag(t).into()),
                },
            }
        }
        6 => Query::CongestionContribution {
            background: r.f64s()?,
            threshold: r.f64()?,
        },
        7 => Query::Emissions {
            threshold: r.f64()?,
        },
        8 => Query::RawTrips,
        t => return Err(DecodeError::BadTag(t).into()),
    };
    r.finish()?;
    Ok(q)
}

pub fn encode_value(v: &QueryValue) -> Vec<u8> {
    let mut w = Writer::new();
    match v {
        QueryValue::Count(c) => {
            w.u8(0).u64(*c);
        }
        QueryValue::Bit(b) => {
            w.u8(1).bool(*b);
        }
        QueryValue::Vector(x) => {
            w.u8(2).f64s(x);
        }
        QueryValue::Choice(i) => {
            w.u8(3).u64(*i as u64);
        }
        QueryValue::Records(rs) => {
            w.u8(4).u32(rs.len() as u32);
            for r in rs {
                w.bytes(r);
            }
        }
    }
    w.finish()
}

pub fn decode_value(bytes: &[u8]) -> Result<QueryValue, EvalError> {
    let mut r = Reader::new(bytes);
    let v = match r.u8()? {
        0 => QueryValue::Count(r.u64()?),
        1 => QueryValue::Bit(r.bool()?),
        2 => QueryValue::Vector(r.f64s()?),
        3 => QueryValue::Choice(r.u64()? as usize),
        4 => {
            let n = r.u32()?;
            QueryValue::Records(
                (0..n)
                    .map(|_| r.bytes().map(<[u8]>::to_vec))
                    .collect::<Result<_, _>>()?,
            )
        }
        t => return Err(DecodeError::BadTag(t).into()),
    };
    r.finish()?;
    Ok(v)
}

fn certificate(w: &mut Writer, c: &Certificate) {
    match c {
        Certificate::None => {
            w.u8(0);
        }
        Certificate::Kkt(k) => {
            w.u8(1).u32(k.commodities.len() as u32);
            for &(i, j, lam) in &k.commodities {
                w.u64(i as u64).u64(j as u64).f64(lam);
            }
            f64_rows(w, &k.flows);
            f64_rows(w, &k.potentials);
        }
        Certificate::Sop(certs) => {
            w.u8(2).u32(certs.len() as u32);
            for c in certs {
                match c {
                    RouteCertificate::Optimal { x, duals } => {
                        w.u8(0).f64s(x).f64s(duals);
                    }
                    RouteCertificate::Infeasible(f) => {
                        w.u8(1).f64s(&f.y);
                    }
                }
            }
        }
    }
}

fn read_certificate(r: &mut Reader) -> Result<Certificate, DecodeError> {
    Ok(match r.u8()? {
        0 => Certificate::None,
        1 => {
            let n = r.u32()?;
            let mut commodities = Vec::new();
            for _ in 0..n {
                commodities.push((r.u64()? as usize, r.u64()? as usize, r.f64()?));
            }
            Certificate::Kkt(KktCertificate {
                commodities,
                flows: read_f64_rows(r)?,
                potentials: read_f64_rows(r)?,
            })
        }
        2 => {
            let n = r.u32()?;
            let mut certs = Vec::new();
            for _ in 0..n {
                certs.push(match r.u8()? {
                    0 => RouteCertificate::Optimal {
                        x: r.f64s()?,
                        duals: r.f64s()?,
                    },
                    1 => RouteCertificate::Infeasible(FarkasCertificate { y: r.f64s()? }),
                    t => return Err(DecodeError::BadTag(t)),
                });
            }
            Certificate::Sop(certs)
        }
        t => return Err(DecodeError::BadTag(t)),
    })
}

pub fn encode_witness(wit: &Witness) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(wit.trips.len() as u32);
    for t in &wit.trips {
        w.bytes(&t.encode());
    }
    w.u32(wit.nonces.len() as u32);
    for n in &wit.nonces {
        w.bytes(n.as_bytes());
    }
    certificate(&mut w, &wit.certificate);
    w.finish()
}

pub fn decode_witness(bytes: &[u8]) -> Result<Witness, EvalError> {
    let mut r = Reader::new(bytes);
    let n = r.u32()?;
    let trips = (0..n)
        .map(|_| TripRecord::decode(r.bytes()?))
        .collect::<Result<_, _>>()?;
    let n = r.u32()?;
    let nonces = (0..n)
        .map(|_| r.array32().map(Nonce))
        .collect::<Result<_, _>>()?;
    let certificate = read_certificate(&mut r)?;
    r.finish()?;
    Ok(Witness {
        trips,
        nonces,
        certificate,
    })
}

pub fn encode_circuit(c: &EvaluationCircuit) -> Vec<u8> {
    let mut w = Writer::new();
    w.str(&c.network.to_text())
        .bytes(&c.pk_mp.0)
        .bytes(c.sigma.as_bytes());
    match &c.audit {
        AuditPublic::None => {
            w.u8(0);
        }
        AuditPublic::Ara { phi, epsilon } => {
            w.u8(1).u64(*phi).f64(*epsilon);
        }
        AuditPublic::Rra { round_len, counts } => {
            w.u8(2).u32(*round_len).u32(counts.len() as u32);
            for a in counts {
                w.u64(a.edge as u64).u32(a.round).u64(a.count);
            }
        }
    }
    w.u32(c.rider_reports.len() as u32);
    for d in &c.rider_reports {
        w.bytes(d.as_bytes());
    }
    w.bytes(&encode_query(&c.query)).f64(c.tol);
    w.finish()
}

pub fn decode_circuit(bytes: &[u8]) -> Result<EvaluationCircuit, EvalError> {
    let mut r = Reader::new(bytes);
    let network = Network::parse(r.str()?)?;
    let pk_mp = PublicKey(r.bytes()?.to_vec());
    let sigma = Digest(r.array32()?);
    let audit = match r.u8()? {
        0 => AuditPublic::None,
        1 => AuditPublic::Ara {
            phi: r.u64()?,
            epsilon: r.f64()?,
        },
        2 => {
            let round_len = r.u32()?;
            let n = r.u32()?;
            let mut counts = Vec::new();
            for _ in 0..n {
                counts.push(AuditedCount {
                    edge: r.u64()? as usize,
                    round: r.u32()?,
                    count: r.u64()?,
                });
            }
            AuditPublic::Rra { round_len, counts }
        }
        t => return Err(DecodeError::BadTag(t).into()),
    };
    let n = r.u32()?;
    let rider_reports = (0..n)
        .map(|_| r.array32().map(Digest))
        .collect::<Result<_, _>>()?;
    let query = decode_query(r.bytes()?)?;
    let tol = r.f64()?;
    r.finish()?;
    Ok(EvaluationCircuit {
        network,
        pk_mp,
        sigma,
        audit,
        rider_reports,
        query,
        tol,
    })
}
