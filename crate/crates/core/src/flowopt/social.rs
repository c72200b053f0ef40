//! System-optimal passenger routing, its KKT certificate, and marginal-cost
//! tolls.
//!
//! The solver runs path-based Frank-Wolfe to a moderate gap and then
//! equilibrates path marginal costs with Newton-style flow shifts until the
//! used paths of every commodity agree to near machine precision. The
//! certificate is per-commodity edge flows plus node potentials.

use crate::netmodel::{EdgeId, Network, RateMatrix};

use super::residual::ResidualReport;
use super::FlowError;

const FW_GAP: f64 = 1e-6;
const FW_MAX_ITERS: usize = 2000;
const EQ_GAP: f64 = 1e-12;
const EQ_MAX_SWEEPS: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PathFlow {
    pub edges: Vec<EdgeId>,
    pub flow: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocialOptimum {
    pub commodities: Vec<(usize, usize, f64)>,
    pub paths: Vec<Vec<PathFlow>>,
    /// `commodity_flows[k][e]`
    pub commodity_flows: Vec<Vec<f64>>,
    pub edge_flows: Vec<f64>,
    /// Total travel time `sum_e x_e f_e(x_e)`.
    pub objective: f64,
    /// Largest spread of marginal path costs among used paths, relative to
    /// the cheapest one.
    pub relative_gap: f64,
}

/// `sum_e x_e f_e(x_e)`
pub fn total_travel_time(network: &Network, x: &[f64]) -> f64 {
    network
        .edges()
        .iter()
        .map(|e| x[e.id] * e.delay.eval(x[e.id]))
        .sum()
}

fn marginal_costs(network: &Network, x: &[f64]) -> Vec<f64> {
    network
        .edges()
        .iter()
        .map(|e| e.delay.marginal_cost(x[e.id]))
        .collect()
}

fn path_cost(path: &[EdgeId], costs: &[f64]) -> f64 {
    path.iter().map(|&e| costs[e]).sum()
}

fn edge_totals(m: usize, paths: &[Vec<PathFlow>]) -> Vec<f64> {
    let mut x = vec![0.0; m];
    for ps in paths {
        for p in ps {
            for &e in &p.edges {
                x[e] += p.flow;
            }
        }
    }
    x
}

/// Minimizes total travel time over passenger flows that route every
/// origin-destination rate. Rebalancing is not part of this problem.
pub fn solve_social_optimum_tt(
    network: &Network,
    rates: &RateMatrix,
) -> Result<SocialOptimum, FlowError> {
    if rates.vertex_count() != network.vertex_count() {
        return Err(FlowError::Dimension);
    }
    for e in network.edges() {
        e.delay.validate().map_err(|_| FlowError::NonConvex(e.id))?;
    }
    let m = network.edge_count();
    let commodities = rates.pairs();
    let mut paths: Vec<Vec<PathFlow>> = Vec::with_capacity(commodities.len());

    // all-or-nothing start at free-flow marginal costs
    let c0 = marginal_costs(network, &vec![0.0; m]);
    for &(i, j, lam) in &commodities {
        let (p, _) = network
            .shortest_path(i, j, &c0)
            .ok_or(FlowError::Unreachable(i, j))?;
        paths.push(vec![PathFlow {
            edges: p,
            flow: lam,
        }]);
    }

    // Frank-Wolfe with exact line search on the path representation.
    for _ in 0..FW_MAX_ITERS {
        let x = edge_totals(m, &paths);
        let c = marginal_costs(network, &x);
        let mut target = vec![0.0; m];
        let mut aon = Vec::with_capacity(commodities.len());
        for &(i, j, lam) in &commodities {
            let (p, _) = network.shortest_path(i, j, &c).expect("reachable");
            for &e in &p {
                target[e] += lam;
            }
            aon.push(p);
        }
        let cur: f64 = x.iter().zip(&c).map(|(x, c)| x * c).sum();
        let gap: f64 = x
            .iter()
            .zip(&target)
            .zip(&c)
            .map(|((x, y), c)| c * (x - y))
            .sum();
        if cur <= 0.0 || gap <= FW_GAP * cur {
            break;
        }
        let d: Vec<f64> = target.iter().zip(&x).map(|(y, x)| y - x).collect();
        let slope = |a: f64| -> f64 {
            network
                .edges()
                .iter()
                .map(|e| d[e.id] * e.delay.marginal_cost(x[e.id] + a * d[e.id]))
                .sum()
        };
        let alpha = if slope(1.0) <= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for (k, p) in aon.into_iter().enumerate() {
            let lam = commodities[k].2;
            for pf in paths[k].iter_mut() {
                pf.flow *= 1.0 - alpha;
            }
            match paths[k].iter_mut().find(|pf| pf.edges == p) {
                Some(pf) => pf.flow += alpha * lam,
                None => paths[k].push(PathFlow {
                    edges: p,
                    flow: alpha * lam,
                }),
            }
        }
    }

    let mut x = edge_totals(m, &paths);
    let mut rel_gap = f64::INFINITY;
    for _ in 0..EQ_MAX_SWEEPS {
        rel_gap = 0.0;
        for (k, &(i, j, _)) in commodities.iter().enumerate() {
            let c = marginal_costs(network, &x);
            let (sp, _) = network.shortest_path(i, j, &c).expect("reachable");
            let s_idx = match paths[k].iter().position(|pf| pf.edges == sp) {
                Some(s) => s,
                None => {
                    paths[k].push(PathFlow {
                        edges: sp,
                        flow: 0.0,
                    });
                    paths[k].len() - 1
                }
            };
            for p_idx in 0..paths[k].len() {
                if p_idx == s_idx || paths[k][p_idx].flow <= 0.0 {
                    continue;
                }
                let c = marginal_costs(network, &x);
                let cs = path_cost(&paths[k][s_idx].edges, &c);
                let cp = path_cost(&paths[k][p_idx].edges, &c);
                let diff = cp - cs;
                if diff <= 1e-15 * cs.max(1.0) {
                    continue;
                }
                rel_gap = f64::max(rel_gap, diff / cs.max(1.0));
                let (p_only, s_only) =
                    symmetric_difference(&paths[k][p_idx].edges, &paths[k][s_idx].edges);
                let curvature: f64 = p_only
                    .iter()
                    .chain(&s_only)
                    .map(|&e| {
                        let f = &network.edges()[e].delay;
                        2.0 * f.derivative(x[e]) + x[e] * f.second_derivative(x[e])
                    })
                    .sum();
                let fp = paths[k][p_idx].flow;
                let shift = if curvature > 0.0 {
                    (diff / curvature).min(fp)
                } else {
                    fp
                };
                paths[k][p_idx].flow -= shift;
                paths[k][s_idx].flow += shift;
                for &e in &p_only {
                    x[e] -= shift;
                }
                for &e in &s_only {
                    x[e] += shift;
                }
            }
            paths[k].retain(|pf| pf.flow > 0.0);
        }
        if rel_gap <= EQ_GAP {
            break;
        }
        // guard against drift from the incremental updates
        x = edge_totals(m, &paths);
    }
    let x = edge_totals(m, &paths);
    let mut commodity_flows = vec![vec![0.0; m]; commodities.len()];
    for (k, ps) in paths.iter().enumerate() {
        for p in ps {
            for &e in &p.edges {
                commodity_flows[k][e] += p.flow;
            }
        }
    }
    Ok(SocialOptimum {
        objective: total_travel_time(network, &x),
        commodities,
        paths,
        commodity_flows,
        edge_flows: x,
        relative_gap: rel_gap,
    })
}

fn symmetric_difference(p: &[EdgeId], s: &[EdgeId]) -> (Vec<EdgeId>, Vec<EdgeId>) {
    let p_only = p.iter().copied().filter(|e| !s.contains(e)).collect();
    let s_only = s.iter().copied().filter(|e| !p.contains(e)).collect();
    (p_only, s_only)
}

/// Congestion toll `p_e = x_e f_e'(x_e)` on every edge.
pub fn compute_tolls(network: &Network, x: &[f64]) -> Vec<f64> {
    network
        .edges()
        .iter()
        .map(|e| x[e.id] * e.delay.derivative(x[e.id]))
        .collect()
}

/// Primal flows and dual node potentials certifying a social optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct KktCertificate {
    pub commodities: Vec<(usize, usize, f64)>,
    /// `flows[k][e]`
    pub flows: Vec<Vec<f64>>,
    /// `potentials[k][v]`
    pub potentials: Vec<Vec<f64>>,
}

impl KktCertificate {
    pub fn edge_flows(&self, m: usize) -> Vec<f64> {
        let mut x = vec![0.0; m];
        for f in &self.flows {
            for (t, v) in x.iter_mut().zip(f) {
                *t += v;
            }
        }
        x
    }
}

/// Best potentials for a given flow: shortest marginal-cost distances from
/// each origin. Vertices an origin cannot reach get a value above every
/// finite distance.
pub fn potentials_for(
    network: &Network,
    commodities: &[(usize, usize, f64)],
    flows: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let m = network.edge_count();
    let mut x = vec![0.0; m];
    for f in flows {
        for (t, v) in x.iter_mut().zip(f) {
            *t += v;
        }
    }
    let c = marginal_costs(network, &x);
    let far = 1.0 + c.iter().sum::<f64>();
    commodities
        .iter()
        .map(|&(i, _, _)| {
            let (d, _) = network.dijkstra(i, &c);
            d.into_iter()
                .map(|v| if v.is_finite() { v } else { far })
                .collect()
        })
        .collect()
}

pub fn kkt_certificate(network: &Network, opt: &SocialOptimum) -> KktCertificate {
    KktCertificate {
        potentials: potentials_for(network, &opt.commodities, &opt.commodity_flows),
        commodities: opt.commodities.clone(),
        flows: opt.commodity_flows.clone(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    pub accepted: bool,
    pub residuals: ResidualReport,
}

/// Checks feasibility, dual feasibility (`m_e + pi_u - pi_v >= 0`) and
/// complementary slackness (`x_e^k (m_e + pi_u - pi_v) = 0`) where `m_e` is
/// the marginal cost `f_e + x_e f_e'` at the certificate's total flow.
pub fn check_kkt(
    network: &Network,
    rates: &RateMatrix,
    cert: &KktCertificate,
    tol: f64,
) -> KktReport {
    let m = network.edge_count();
    let n = network.vertex_count();
    let mut rep = ResidualReport::with_families(&[
        "shape",
        "demand",
        "nonnegativity",
        "conservation",
        "dual_feasibility",
        "complementary_slackness",
    ]);
    let shape_ok = rates.vertex_count() == n
        && cert.flows.len() == cert.commodities.len()
        && cert.potentials.len() == cert.commodities.len()
        && cert.flows.iter().all(|f| f.len() == m)
        && cert.potentials.iter().all(|p| p.len() == n)
        && cert.commodities.iter().all(|&(i, j, _)| i < n && j < n)
        && cert
            .flows
            .iter()
            .flatten()
            .chain(cert.potentials.iter().flatten())
            .all(|v| v.is_finite());
    if !shape_ok {
        rep.record("shape", || "certificate".into(), f64::INFINITY);
        return KktReport {
            accepted: false,
            residuals: rep,
        };
    }
    // every positive rate must appear exactly once with its true value
    for (i, j, lam) in rates.pairs() {
        let listed: Vec<f64> = cert
            .commodities
            .iter()
            .filter(|c| (c.0, c.1) == (i, j))
            .map(|c| c.2)
            .collect();
        let r = match listed.as_slice() {
            [v] => v - lam,
            _ => f64::INFINITY,
        };
        rep.record("demand", || format!("pair {i}->{j}"), r);
    }
    for &(i, j, lam) in &cert.commodities {
        rep.record("demand", || format!("pair {i}->{j}"), lam - rates.get(i, j));
    }
    let x = cert.edge_flows(m);
    let c = marginal_costs(network, &x);
    for (k, &(i, j, lam)) in cert.commodities.iter().enumerate() {
        let f = &cert.flows[k];
        let pi = &cert.potentials[k];
        let mut bal = vec![0.0; n];
        for e in network.edges() {
            rep.record(
                "nonnegativity",
                || format!("commodity {k} edge {}", e.id),
                f[e.id].min(0.0),
            );
            bal[e.src] += f[e.id];
            bal[e.dst] -= f[e.id];
            let reduced = c[e.id] + pi[e.src] - pi[e.dst];
            rep.record(
                "dual_feasibility",
                || format!("commodity {k} edge {}", e.id),
                (-reduced).max(0.0),
            );
            rep.record(
                "complementary_slackness",
                || format!("commodity {k} edge {}", e.id),
                f[e.id].max(0.0) * reduced.abs(),
            );
        }
        bal[i] -= lam;
        bal[j] += lam;
        for (u, r) in bal.iter().enumerate() {
            rep.record("conservation", || format!("commodity {k} node {u}"), *r);
        }
    }
    KktReport {
        accepted: rep.feasible(tol),
        residuals: rep,
    }
}
