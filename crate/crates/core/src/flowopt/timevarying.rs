//! Time-expanded routing over a finite horizon.
//!
//! Vehicles entering edge `e` at step `t` leave it at `t + tau_e`. Every
//! vehicle is always on some edge, so parking is modelled with self-loop
//! edges. Conservation applies at steps `1..T`; at step 0 the fleet leaves
//! its initial positions `y`.

use std::fmt::Write as _;

use crate::netmodel::{DemandTensor, Network};

use super::lp::{LinearProgram, LpOutcome, Relation};
use super::residual::ResidualReport;
use super::{FlowError, MpObjective};

#[derive(Clone, Debug, PartialEq)]
pub struct TimeVaryingFlow {
    pub commodities: Vec<(usize, usize)>,
    pub horizon: u32,
    /// `passenger[k][t][e]`
    pub passenger: Vec<Vec<Vec<f64>>>,
    /// `rebalancing[t][e]`
    pub rebalancing: Vec<Vec<f64>>,
}

impl TimeVaryingFlow {
    pub fn zeros(commodities: Vec<(usize, usize)>, horizon: u32, m: usize) -> Self {
        let t = horizon as usize;
        Self {
            passenger: vec![vec![vec![0.0; m]; t]; commodities.len()],
            commodities,
            horizon,
            rebalancing: vec![vec![0.0; m]; t],
        }
    }

    /// All vehicles entering `e` at step `t`.
    pub fn total(&self, t: usize, e: usize) -> f64 {
        self.rebalancing[t][e] + self.passenger.iter().map(|p| p[t][e]).sum::<f64>()
    }

    /// Text lines `p <i> <j> <t> <edge> <value>` and `r <t> <edge> <value>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "horizon {}", self.horizon).unwrap();
        for (k, &(i, j)) in self.commodities.iter().enumerate() {
            writeln!(out, "commodity {i} {j}").unwrap();
            for (t, row) in self.passenger[k].iter().enumerate() {
                for (e, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        writeln!(out, "p {i} {j} {t} {e} {v}").unwrap();
                    }
                }
            }
        }
        for (t, row) in self.rebalancing.iter().enumerate() {
            for (e, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "r {t} {e} {v}").unwrap();
                }
            }
        }
        out
    }
}

fn in_window(t: usize, tau: u32) -> Option<usize> {
    t.checked_sub(tau as usize)
}

/// Residuals for vehicle conservation, per-commodity routing, cumulative
/// pickups, destination absorption and the initial condition.
pub fn check_timevarying_feasibility(
    flow: &TimeVaryingFlow,
    network: &Network,
    demand: &DemandTensor,
    y: &[f64],
) -> Result<ResidualReport, FlowError> {
    let n = network.vertex_count();
    let m = network.edge_count();
    let big_t = flow.horizon as usize;
    if y.len() != n
        || demand.vertex_count() != n
        || flow.rebalancing.len() != big_t
        || flow.rebalancing.iter().any(|r| r.len() != m)
        || flow.passenger.len() != flow.commodities.len()
        || flow
            .passenger
            .iter()
            .any(|p| p.len() != big_t || p.iter().any(|r| r.len() != m))
    {
        return Err(FlowError::Dimension);
    }
    let mut rep = ResidualReport::with_families(&[
        "nonnegativity",
        "vehicle_conservation",
        "route_conservation",
        "cumulative_pickup",
        "destination",
        "initial",
        "coverage",
    ]);
    for t in 0..big_t {
        for e in 0..m {
            rep.record(
                "nonnegativity",
                || format!("r t={t} edge {e}"),
                flow.rebalancing[t][e].min(0.0),
            );
            for k in 0..flow.commodities.len() {
                rep.record(
                    "nonnegativity",
                    || format!("commodity {k} t={t} edge {e}"),
                    flow.passenger[k][t][e].min(0.0),
                );
            }
        }
    }
    for (i, j, t, v) in demand.entries() {
        if !flow.commodities.contains(&(i, j)) {
            rep.record("coverage", || format!("pair {i}->{j} t={t}"), v);
        }
    }
    for u in 0..n {
        for t in 1..big_t {
            let mut r = 0.0;
            for e in network.in_edges(u) {
                if let Some(s) = in_window(t, e.tau) {
                    r += flow.total(s, e.id);
                }
            }
            for e in network.out_edges(u) {
                r -= flow.total(t, e.id);
            }
            rep.record("vehicle_conservation", || format!("node {u} t={t}"), r);
        }
        let out0: f64 = network.out_edges(u).map(|e| flow.total(0, e.id)).sum();
        rep.record("initial", || format!("node {u}"), out0 - y[u]);
    }
    for (k, &(i, j)) in flow.commodities.iter().enumerate() {
        let x = &flow.passenger[k];
        let net_out = |u: usize, t: usize| -> f64 {
            let out: f64 = network.out_edges(u).map(|e| x[t][e.id]).sum();
            let inn: f64 = network
                .in_edges(u)
                .filter_map(|e| in_window(t, e.tau).map(|s| x[s][e.id]))
                .sum();
            out - inn
        };
        let mut cum = 0.0;
        let mut cum_demand = 0.0;
        for t in 0..big_t {
            for u in (0..n).filter(|&u| u != i && u != j) {
                rep.record(
                    "route_conservation",
                    || format!("pair {i}->{j} node {u} t={t}"),
                    net_out(u, t),
                );
            }
            cum += net_out(i, t);
            cum_demand += demand.get(i, j, t as u32);
            rep.record(
                "cumulative_pickup",
                || format!("pair {i}->{j} t={t}"),
                (cum - cum_demand).max(0.0),
            );
            for e in network.out_edges(j) {
                rep.record(
                    "destination",
                    || format!("pair {i}->{j} t={t} edge {}", e.id),
                    x[t][e.id],
                );
            }
        }
    }
    Ok(rep)
}

/// Variable layout of the time-expanded LP.
#[derive(Clone, Debug, PartialEq)]
pub struct TvLayout {
    pub commodities: Vec<(usize, usize)>,
    pub horizon: usize,
    pub m: usize,
}

impl TvLayout {
    pub fn passenger(&self, k: usize, t: usize, e: usize) -> usize {
        (k * self.horizon + t) * self.m + e
    }

    pub fn rebalancing(&self, t: usize, e: usize) -> usize {
        (self.commodities.len() * self.horizon + t) * self.m + e
    }

    pub fn n_vars(&self) -> usize {
        (self.commodities.len() + 1) * self.horizon * self.m
    }

    pub fn flow_from(&self, x: &[f64]) -> TimeVaryingFlow {
        let mut f = TimeVaryingFlow::zeros(self.commodities.clone(), self.horizon as u32, self.m);
        for t in 0..self.horizon {
            for e in 0..self.m {
                for k in 0..self.commodities.len() {
                    f.passenger[k][t][e] = x[self.passenger(k, t, e)];
                }
                f.rebalancing[t][e] = x[self.rebalancing(t, e)];
            }
        }
        f
    }
}

/// Completed passenger trips: commodity flow arriving at its destination
/// no later than the last step.
pub fn served_trips(flow: &TimeVaryingFlow, network: &Network) -> f64 {
    let big_t = flow.horizon as usize;
    let mut served = 0.0;
    for (k, &(_, j)) in flow.commodities.iter().enumerate() {
        for e in network.in_edges(j) {
            for t in 0..big_t {
                if t + (e.tau as usize) < big_t {
                    served += flow.passenger[k][t][e.id];
                }
            }
        }
    }
    served
}

/// `fare * served trips - cost_per_length * total distance driven`.
pub fn timevarying_objective(network: &Network, obj: &MpObjective, flow: &TimeVaryingFlow) -> f64 {
    let mut dist = 0.0;
    for t in 0..flow.horizon as usize {
        for e in network.edges() {
            dist += e.length * flow.total(t, e.id);
        }
    }
    obj.fare * served_trips(flow, network) - obj.cost_per_length * dist
}

pub fn timevarying_lp(
    network: &Network,
    demand: &DemandTensor,
    y: &[f64],
    obj: &MpObjective,
) -> (LinearProgram, TvLayout) {
    let n = network.vertex_count();
    let big_t = demand.horizon() as usize;
    let mut commodities: Vec<(usize, usize)> =
        demand.entries().map(|(i, j, _, _)| (i, j)).collect();
    commodities.sort_unstable();
    commodities.dedup();
    let layout = TvLayout {
        commodities,
        horizon: big_t,
        m: network.edge_count(),
    };
    let kk = layout.commodities.len();
    let mut lp = LinearProgram::new(layout.n_vars());
    for t in 0..big_t {
        for e in network.edges() {
            let c = -obj.cost_per_length * e.length;
            for k in 0..kk {
                let arrives = e.dst == layout.commodities[k].1 && t + (e.tau as usize) < big_t;
                lp.objective[layout.passenger(k, t, e.id)] =
                    c + if arrives { obj.fare } else { 0.0 };
            }
            lp.objective[layout.rebalancing(t, e.id)] = c;
        }
    }
    let all_at = |t: usize, e: usize| -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = (0..kk).map(|k| (layout.passenger(k, t, e), 1.0)).collect();
        v.push((layout.rebalancing(t, e), 1.0));
        v
    };
    for u in 0..n {
        for t in 1..big_t {
            let mut row = Vec::new();
            for e in network.in_edges(u) {
                if let Some(s) = in_window(t, e.tau) {
                    row.extend(all_at(s, e.id));
                }
            }
            for e in network.out_edges(u) {
                row.extend(all_at(t, e.id).into_iter().map(|(j, a)| (j, -a)));
            }
            lp.add(row, Relation::Eq, 0.0);
        }
        let row = network.out_edges(u).flat_map(|e| all_at(0, e.id)).collect();
        lp.add(row, Relation::Eq, y[u]);
    }
    for (k, &(i, j)) in layout.commodities.iter().enumerate() {
        let net_out = |u: usize, t: usize| -> Vec<(usize, f64)> {
            let mut row: Vec<(usize, f64)> = network
                .out_edges(u)
                .map(|e| (layout.passenger(k, t, e.id), 1.0))
                .collect();
            for e in network.in_edges(u) {
                if let Some(s) = in_window(t, e.tau) {
                    row.push((layout.passenger(k, s, e.id), -1.0));
                }
            }
            row
        };
        let mut cum_row = Vec::new();
        let mut cum_demand = 0.0;
        for t in 0..big_t {
            for u in (0..n).filter(|&u| u != i && u != j) {
                lp.add(net_out(u, t), Relation::Eq, 0.0);
            }
            cum_row.extend(net_out(i, t));
            cum_demand += demand.get(i, j, t as u32);
            lp.add(cum_row.clone(), Relation::Le, cum_demand);
            for e in network.out_edges(j) {
                lp.add(vec![(layout.passenger(k, t, e.id), 1.0)], Relation::Eq, 0.0);
            }
        }
    }
    (lp, layout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeVaryingSolution {
    pub flow: TimeVaryingFlow,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
}

/// Maximizes `fare * served - cost * distance` over the time-expanded
/// network. Intended for small instances (a few nodes, tens of steps).
pub fn solve_timevarying_routing(
    network: &Network,
    demand: &DemandTensor,
    y: &[f64],
    obj: &MpObjective,
) -> Result<TimeVaryingSolution, FlowError> {
    if demand.vertex_count() != network.vertex_count() || y.len() != network.vertex_count() {
        return Err(FlowError::Dimension);
    }
    let (lp, layout) = timevarying_lp(network, demand, y, obj);
    match lp.solve()? {
        LpOutcome::Optimal(s) => Ok(TimeVaryingSolution {
            flow: layout.flow_from(&s.x),
            objective: s.objective,
            x: s.x,
            duals: s.duals,
        }),
        LpOutcome::Infeasible(cert) => Err(FlowError::Infeasible(cert)),
        LpOutcome::Unbounded => Err(FlowError::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::DelayFn;

    /// 0 -> 1 with parking loops on both ends and a return edge.
    fn line() -> Network {
        let mut net = Network::new(2, 1.0, 3);
        net.add_edge(0, 1, DelayFn::constant(1.0)).unwrap();
        net.add_edge(1, 0, DelayFn::constant(1.0)).unwrap();
        net.add_edge(0, 0, DelayFn::constant(1.0)).unwrap();
        net.add_edge(1, 1, DelayFn::constant(1.0)).unwrap();
        net
    }

    #[test]
    fn zero_everything_is_feasible() {
        let net = line();
        let d = DemandTensor::zeros(2, 3);
        let f = TimeVaryingFlow::zeros(vec![], 3, 4);
        let rep = check_timevarying_feasibility(&f, &net, &d, &[0.0, 0.0]).unwrap();
        assert!(rep.feasible(0.0));
    }

    #[test]
    fn one_request_hand_built_flow() {
        let net = line();
        let mut d = DemandTensor::zeros(2, 3);
        d.set(0, 1, 0, 1.0).unwrap();
        let mut f = TimeVaryingFlow::zeros(vec![(0, 1)], 3, 4);
        f.passenger[0][0][0] = 1.0; // carry the rider 0 -> 1 at t=0
        f.rebalancing[1][3] = 1.0; // park at 1
        f.rebalancing[2][3] = 1.0;
        let rep = check_timevarying_feasibility(&f, &net, &d, &[1.0, 0.0]).unwrap();
        assert!(rep.feasible(1e-12), "{rep}");

        // the vehicle starts at the destination instead
        let rep = check_timevarying_feasibility(&f, &net, &d, &[0.0, 1.0]).unwrap();
        assert_eq!(rep.violated(1e-9), vec!["initial"]);
        assert_eq!(rep.at("initial", "node 0"), 1.0);
    }

    #[test]
    fn overserving_violates_cumulative_pickup() {
        let net = line();
        let mut d = DemandTensor::zeros(2, 3);
        d.set(0, 1, 1, 1.0).unwrap();
        let mut f = TimeVaryingFlow::zeros(vec![(0, 1)], 3, 4);
        f.passenger[0][0][0] = 1.0; // departs before the request exists
        f.rebalancing[1][3] = 1.0;
        f.rebalancing[2][3] = 1.0;
        let rep = check_timevarying_feasibility(&f, &net, &d, &[1.0, 0.0]).unwrap();
        assert_eq!(rep.violated(1e-9), vec!["cumulative_pickup"]);
    }

    #[test]
    fn solver_serves_the_request_and_passes_the_checker() {
        let net = line();
        let mut d = DemandTensor::zeros(2, 3);
        d.set(0, 1, 0, 1.0).unwrap();
        let obj = MpObjective {
            fare: 5.0,
            cost_per_length: 1.0,
        };
        let s = solve_timevarying_routing(&net, &d, &[1.0, 0.0], &obj).unwrap();
        assert!((served_trips(&s.flow, &net) - 1.0).abs() < 1e-9);
        // three steps of driving at unit length each
        assert!((s.objective - 2.0).abs() < 1e-9, "{}", s.objective);
        assert!((timevarying_objective(&net, &obj, &s.flow) - s.objective).abs() < 1e-9);
        let rep = check_timevarying_feasibility(&s.flow, &net, &d, &[1.0, 0.0]).unwrap();
        assert!(rep.feasible(1e-6), "{rep}");
        assert!(s
            .flow
            .to_text()
            .starts_with("horizon 3\ncommodity 0 1\np 0 1 "));
    }
}
