//! Steady-state routing: per-commodity passenger flows plus one rebalancing
//! flow, with total vehicle conservation at every node.

use std::fmt::Write as _;

use crate::netmodel::{Network, RateMatrix};

use super::lp::{LinearProgram, LpOutcome, Relation};
use super::residual::ResidualReport;
use super::{FlowError, MpObjective};

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyFlow {
    /// Origin-destination pairs, one per passenger commodity.
    pub commodities: Vec<(usize, usize)>,
    /// `passenger[k][e]`
    pub passenger: Vec<Vec<f64>>,
    /// `rebalancing[e]`
    pub rebalancing: Vec<f64>,
}

impl SteadyFlow {
    pub fn zeros(commodities: Vec<(usize, usize)>, m: usize) -> Self {
        Self {
            passenger: vec![vec![0.0; m]; commodities.len()],
            commodities,
            rebalancing: vec![0.0; m],
        }
    }

    /// Total vehicles per edge.
    pub fn edge_totals(&self) -> Vec<f64> {
        let mut tot = self.rebalancing.clone();
        for p in &self.passenger {
            for (t, v) in tot.iter_mut().zip(p) {
                *t += v;
            }
        }
        tot
    }

    /// Tabular text: `p <i> <j> <edge> <value>` and `r <edge> <value>` lines,
    /// zero entries omitted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, &(i, j)) in self.commodities.iter().enumerate() {
            writeln!(out, "commodity {i} {j}").unwrap();
            for (e, v) in self.passenger[k].iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "p {i} {j} {e} {v}").unwrap();
                }
            }
        }
        for (e, v) in self.rebalancing.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "r {e} {v}").unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, m: usize) -> Result<Self, FlowError> {
        let mut flow = SteadyFlow::zeros(Vec::new(), m);
        for (ln, line) in text.lines().enumerate() {
            let w: Vec<&str> = line.split_whitespace().collect();
            let bad = || FlowError::Parse(format!("line {}: {line:?}", ln + 1));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            match w.as_slice() {
                [] => {}
                ["commodity", i, j] => {
                    flow.commodities.push((idx(i)?, idx(j)?));
                    flow.passenger.push(vec![0.0; m]);
                }
                ["p", i, j, e, v] => {
                    let key = (idx(i)?, idx(j)?);
                    let k = flow
                        .commodities
                        .iter()
                        .position(|c| *c == key)
                        .ok_or_else(bad)?;
                    let e = idx(e)?;
                    *flow.passenger[k].get_mut(e).ok_or_else(bad)? = num(v)?;
                }
                ["r", e, v] => {
                    let e = idx(e)?;
                    *flow.rebalancing.get_mut(e).ok_or_else(bad)? = num(v)?;
                }
                _ => return Err(bad()),
            }
        }
        Ok(flow)
    }
}

/// Residuals of total vehicle conservation at every node and per-commodity
/// pickup/dropoff balance.
pub fn check_steady_feasibility(
    flow: &SteadyFlow,
    network: &Network,
    rates: &RateMatrix,
) -> Result<ResidualReport, FlowError> {
    let m = network.edge_count();
    let n = network.vertex_count();
    if rates.vertex_count() != n
        || flow.rebalancing.len() != m
        || flow.passenger.len() != flow.commodities.len()
        || flow.passenger.iter().any(|p| p.len() != m)
    {
        return Err(FlowError::Dimension);
    }
    let mut rep = ResidualReport::with_families(&["nonnegativity", "conservation", "pair_balance"]);
    for (e, v) in flow.rebalancing.iter().enumerate() {
        rep.record("nonnegativity", || format!("r edge {e}"), v.min(0.0));
    }
    for (k, p) in flow.passenger.iter().enumerate() {
        for (e, v) in p.iter().enumerate() {
            rep.record(
                "nonnegativity",
                || format!("commodity {k} edge {e}"),
                v.min(0.0),
            );
        }
    }
    let tot = flow.edge_totals();
    let mut net_out = vec![0.0; n];
    for e in network.edges() {
        net_out[e.src] += tot[e.id];
        net_out[e.dst] -= tot[e.id];
    }
    for (u, r) in net_out.iter().enumerate() {
        rep.record("conservation", || format!("node {u}"), *r);
    }
    let mut pairs: Vec<(usize, usize)> = flow.commodities.clone();
    for (i, j, _) in rates.pairs() {
        if !pairs.contains(&(i, j)) {
            pairs.push((i, j));
        }
    }
    for (i, j) in pairs {
        let lam = rates.get(i, j);
        let mut bal = vec![0.0; n];
        if let Some(k) = flow.commodities.iter().position(|c| *c == (i, j)) {
            for e in network.edges() {
                bal[e.src] += flow.passenger[k][e.id];
                bal[e.dst] -= flow.passenger[k][e.id];
            }
        }
        bal[i] -= lam;
        bal[j] += lam;
        for (u, r) in bal.iter().enumerate() {
            rep.record("pair_balance", || format!("pair {i}->{j} node {u}"), *r);
        }
    }
    Ok(rep)
}

/// Variable layout of the steady-state routing LP.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyLayout {
    pub commodities: Vec<(usize, usize)>,
    pub m: usize,
}

impl SteadyLayout {
    pub fn passenger(&self, k: usize, e: usize) -> usize {
        k * self.m + e
    }

    pub fn rebalancing(&self, e: usize) -> usize {
        self.commodities.len() * self.m + e
    }

    pub fn n_vars(&self) -> usize {
        (self.commodities.len() + 1) * self.m
    }

    pub fn flow_from(&self, x: &[f64]) -> SteadyFlow {
        let mut f = SteadyFlow::zeros(self.commodities.clone(), self.m);
        for k in 0..self.commodities.len() {
            for e in 0..self.m {
                f.passenger[k][e] = x[self.passenger(k, e)];
            }
        }
        for e in 0..self.m {
            f.rebalancing[e] = x[self.rebalancing(e)];
        }
        f
    }

    pub fn vector_from(&self, f: &SteadyFlow) -> Option<Vec<f64>> {
        if f.commodities != self.commodities {
            return None;
        }
        let mut x = vec![0.0; self.n_vars()];
        for k in 0..self.commodities.len() {
            for e in 0..self.m {
                x[self.passenger(k, e)] = *f.passenger[k].get(e)?;
            }
        }
        for e in 0..self.m {
            x[self.rebalancing(e)] = *f.rebalancing.get(e)?;
        }
        Some(x)
    }
}

/// Builds the routing LP. Its optimal value plus the constant fare revenue
/// is the MP objective.
pub fn steady_lp(
    network: &Network,
    rates: &RateMatrix,
    obj: &MpObjective,
) -> (LinearProgram, SteadyLayout) {
    let layout = SteadyLayout {
        commodities: rates.pairs().iter().map(|&(i, j, _)| (i, j)).collect(),
        m: network.edge_count(),
    };
    let n = network.vertex_count();
    let mut lp = LinearProgram::new(layout.n_vars());
    for e in network.edges() {
        let c = -obj.cost_per_length * e.length;
        for k in 0..layout.commodities.len() {
            lp.objective[layout.passenger(k, e.id)] = c;
        }
        lp.objective[layout.rebalancing(e.id)] = c;
    }
    for u in 0..n {
        let mut row = Vec::new();
        for e in network.edges() {
            let s = match (e.src == u, e.dst == u) {
                (true, false) => 1.0,
                (false, true) => -1.0,
                _ => continue,
            };
            for k in 0..layout.commodities.len() {
                row.push((layout.passenger(k, e.id), s));
            }
            row.push((layout.rebalancing(e.id), s));
        }
        lp.add(row, Relation::Eq, 0.0);
    }
    for (k, &(i, j)) in layout.commodities.iter().enumerate() {
        let lam = rates.get(i, j);
        for u in 0..n {
            let mut row = Vec::new();
            for e in network.edges() {
                match (e.src == u, e.dst == u) {
                    (true, false) => row.push((layout.passenger(k, e.id), 1.0)),
                    (false, true) => row.push((layout.passenger(k, e.id), -1.0)),
                    _ => {}
                }
            }
            let rhs = if u == i {
                lam
            } else if u == j {
                -lam
            } else {
                0.0
            };
            lp.add(row, Relation::Eq, rhs);
        }
    }
    (lp, layout)
}

/// An optimal steady-state routing and the LP certificate behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadySolution {
    pub flow: SteadyFlow,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
}

pub fn steady_objective(
    network: &Network,
    rates: &RateMatrix,
    obj: &MpObjective,
    flow: &SteadyFlow,
) -> f64 {
    let tot = flow.edge_totals();
    obj.fare * rates.total()
        - obj.cost_per_length
            * network
                .edges()
                .iter()
                .map(|e| e.length * tot[e.id])
                .sum::<f64>()
}

pub fn solve_mp_routing(
    network: &Network,
    rates: &RateMatrix,
    obj: &MpObjective,
) -> Result<SteadySolution, FlowError> {
    if rates.vertex_count() != network.vertex_count() {
        return Err(FlowError::Dimension);
    }
    let (lp, layout) = steady_lp(network, rates, obj);
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            let flow = layout.flow_from(&s.x);
            Ok(SteadySolution {
                objective: obj.fare * rates.total() + s.objective,
                flow,
                x: s.x,
                duals: s.duals,
            })
        }
        LpOutcome::Infeasible(cert) => Err(FlowError::Infeasible(cert)),
        LpOutcome::Unbounded => Err(FlowError::Unbounded),
    }
}
