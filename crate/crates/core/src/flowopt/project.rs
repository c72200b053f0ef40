//! Infrastructure projects and the selection problem: route demand on each
//! modified network the way the MP would, score the result with the MA's
//! welfare function, and pick the best project.

use std::fmt::Write as _;

use crate::netmodel::{DelayFn, EdgeId, Network, RateMatrix, VertexId};

use super::lp::{check_farkas, check_lp_certificate, FarkasCertificate};
use super::social::total_travel_time;
use super::steady::{solve_mp_routing, steady_lp, SteadyFlow};
use super::{FlowError, MpObjective};

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectEdit {
    AddEdge {
        src: VertexId,
        dst: VertexId,
        delay: DelayFn,
        length: f64,
    },
    SetDelay {
        edge: EdgeId,
        delay: DelayFn,
    },
    /// Congestion-free edge with a fixed travel time.
    AddTrainEdge {
        src: VertexId,
        dst: VertexId,
        time: f64,
        length: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Project {
    pub name: String,
    pub edits: Vec<ProjectEdit>,
}

impl Project {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            edits: Vec::new(),
        }
    }

    /// The modified network `G_theta`.
    pub fn apply(&self, base: &Network) -> Result<Network, FlowError> {
        let mut net = base.clone();
        for edit in &self.edits {
            match *edit {
                ProjectEdit::AddEdge {
                    src,
                    dst,
                    delay,
                    length,
                } => {
                    let tau = net.default_tau(&delay);
                    net.push_edge(src, dst, delay, length, tau, false)?;
                }
                ProjectEdit::SetDelay { edge, delay } => {
                    delay.validate()?;
                    let tau = net.default_tau(&delay);
                    let e = net.edge_mut(edge).ok_or(FlowError::UnknownEdge(edge))?;
                    e.delay = delay;
                    e.tau = tau;
                }
                ProjectEdit::AddTrainEdge {
                    src,
                    dst,
                    time,
                    length,
                } => {
                    let delay = DelayFn::constant(time);
                    let tau = net.default_tau(&delay);
                    net.push_edge(src, dst, delay, length, tau, true)?;
                }
            }
        }
        Ok(net)
    }

    /// Parses an edit script:
    ///
    /// ```text
    /// add_edge 0 2 affine 1 0.5 len=2
    /// set_delay 3 bpr 2 0.15 4
    /// add_train_edge 1 4 3 len=5
    /// ```
    pub fn parse(name: &str, text: &str) -> Result<Self, FlowError> {
        let mut p = Project::new(name);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            p.edits.push(
                parse_edit(line).map_err(|e| FlowError::Parse(format!("line {}: {e}", ln + 1)))?,
            );
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edits {
            match e {
                ProjectEdit::AddEdge {
                    src,
                    dst,
                    delay,
                    length,
                } => {
                    writeln!(out, "add_edge {src} {dst} {} len={length}", delay.to_text())
                }
                ProjectEdit::SetDelay { edge, delay } => {
                    writeln!(out, "set_delay {edge} {}", delay.to_text())
                }
                ProjectEdit::AddTrainEdge {
                    src,
                    dst,
                    time,
                    length,
                } => {
                    writeln!(out, "add_train_edge {src} {dst} {time} len={length}")
                }
            }
            .unwrap();
        }
        out
    }
}

/// Parses one edit line.
pub fn parse_edit(line: &str) -> Result<ProjectEdit, String> {
    let w: Vec<&str> = line.split_whitespace().collect();
    let idx = |i: usize| -> Result<usize, String> {
        w.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("expected an index at word {}", i + 1))
    };
    let num = |i: usize| -> Result<f64, String> {
        w.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("expected a number at word {}", i + 1))
    };
    let length_opt = |rest: &[&str]| -> Result<f64, String> {
        let mut len = 1.0;
        for o in rest {
            match o.split_once('=') {
                Some(("len", v)) => len = v.parse().map_err(|_| format!("bad length {v:?}"))?,
                _ => return Err(format!("unknown option {o:?}")),
            }
        }
        Ok(len)
    };
    match w.first().copied() {
        Some("add_edge") => {
            let (delay, used) =
                DelayFn::parse_words(w.get(3..).unwrap_or(&[])).map_err(|e| e.to_string())?;
            Ok(ProjectEdit::AddEdge {
                src: idx(1)?,
                dst: idx(2)?,
                delay,
                length: length_opt(&w[3 + used..])?,
            })
        }
        Some("set_delay") => {
            let (delay, used) =
                DelayFn::parse_words(w.get(2..).unwrap_or(&[])).map_err(|e| e.to_string())?;
            if w.len() != 2 + used {
                return Err("trailing words after set_delay".into());
            }
            Ok(ProjectEdit::SetDelay {
                edge: idx(1)?,
                delay,
            })
        }
        Some("add_train_edge") => Ok(ProjectEdit::AddTrainEdge {
            src: idx(1)?,
            dst: idx(2)?,
            time: num(3)?,
            length: length_opt(w.get(4..).unwrap_or(&[]))?,
        }),
        other => Err(format!("unknown edit {other:?}")),
    }
}

/// The MA's welfare score of a routed flow.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum MaObjective {
    /// `-sum_e x_e f_e(x_e)` over all vehicle flow.
    #[default]
    NegTotalTravelTime,
    /// `-sum_e len_e x_e`, total distance driven.
    NegVehicleDistance,
}

impl MaObjective {
    pub fn eval(&self, network: &Network, flow: &SteadyFlow) -> f64 {
        let x = flow.edge_totals();
        match self {
            MaObjective::NegTotalTravelTime => -total_travel_time(network, &x),
            MaObjective::NegVehicleDistance => -network
                .edges()
                .iter()
                .map(|e| e.length * x[e.id])
                .sum::<f64>(),
        }
    }
}

/// Evidence for one project's inner routing problem.
#[derive(Clone, Debug, PartialEq)]
pub enum RouteCertificate {
    Optimal { x: Vec<f64>, duals: Vec<f64> },
    Infeasible(FarkasCertificate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SopOutcome {
    pub winner: usize,
    /// `-inf` for projects whose routing problem is infeasible.
    pub utilities: Vec<f64>,
    pub certificates: Vec<RouteCertificate>,
}

impl SopOutcome {
    pub fn infeasible(&self) -> Vec<usize> {
        (0..self.utilities.len())
            .filter(|&i| self.utilities[i] == f64::NEG_INFINITY)
            .collect()
    }
}

/// First index of the largest finite utility.
pub fn argmax_lowest(utilities: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &u) in utilities.iter().enumerate() {
        if u == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|b| u > utilities[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn solve_sop(
    base: &Network,
    projects: &[Project],
    rates: &RateMatrix,
    mp: &MpObjective,
    ma: &MaObjective,
) -> Result<SopOutcome, FlowError> {
    if projects.is_empty() {
        return Err(FlowError::NoProjects);
    }
    let mut utilities = Vec::with_capacity(projects.len());
    let mut certificates = Vec::with_capacity(projects.len());
    for p in projects {
        let net = p.apply(base)?;
        match solve_mp_routing(&net, rates, mp) {
            Ok(sol) => {
                utilities.push(ma.eval(&net, &sol.flow));
                certificates.push(RouteCertificate::Optimal {
                    x: sol.x,
                    duals: sol.duals,
                });
            }
            Err(FlowError::Infeasible(cert)) => {
                utilities.push(f64::NEG_INFINITY);
                certificates.push(RouteCertificate::Infeasible(cert));
            }
            Err(e) => return Err(e),
        }
    }
    let winner = argmax_lowest(&utilities).ok_or(FlowError::NoFeasibleProject)?;
    Ok(SopOutcome {
        winner,
        utilities,
        certificates,
    })
}

/// Recomputes the selection from certificates alone: each optimal routing is
/// checked by primal/dual feasibility and a zero gap, each infeasible one by
/// its Farkas ray. No routing problem is re-solved.
pub fn verify_sop(
    base: &Network,
    projects: &[Project],
    rates: &RateMatrix,
    mp: &MpObjective,
    ma: &MaObjective,
    certificates: &[RouteCertificate],
    tol: f64,
) -> Result<SopOutcome, String> {
    if projects.is_empty() || certificates.len() != projects.len() {
        return Err("certificate count does not match project count".into());
    }
    let mut utilities = Vec::new();
    for (k, (p, cert)) in projects.iter().zip(certificates).enumerate() {
        let net = p.apply(base).map_err(|e| format!("project {k}: {e}"))?;
        let (lp, layout) = steady_lp(&net, rates, mp);
        match cert {
            RouteCertificate::Optimal { x, duals } => {
                let res = check_lp_certificate(&lp, x, duals);
                let scale = 1.0 + lp.value(x).abs();
                if !res.within(tol * scale) {
                    return Err(format!(
                        "project {k}: routing certificate residual {:e}",
                        res.max()
                    ));
                }
                utilities.push(ma.eval(&net, &layout.flow_from(x)));
            }
            RouteCertificate::Infeasible(f) => {
                if !check_farkas(&lp, f, tol) {
                    return Err(format!("project {k}: invalid infeasibility certificate"));
                }
                utilities.push(f64::NEG_INFINITY);
            }
        }
    }
    let winner = argmax_lowest(&utilities).ok_or("no feasible project")?;
    Ok(SopOutcome {
        winner,
        utilities,
        certificates: certificates.to_vec(),
    })
}
