//! Random flow instances and independent reference solvers.
//!
//! The LP oracles build their own formulations from scratch and hand them to
//! `microlp`; the convex oracle runs projected gradient descent over
//! enumerated simple paths. None of them share code with the crate's solvers.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use pmm_core::flowopt::MpObjective;
use pmm_core::netmodel::{DelayFn, DemandTensor, Network, RateMatrix};
use rand::Rng;

/// A ring in both directions plus random chords, affine delays, random
/// lengths. Optional parking loops on every vertex.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, chords: usize, loops: bool) -> Network {
    let mut net = Network::new(n, 1.0, 10);
    let add = |net: &mut Network, rng: &mut R, u: usize, v: usize| {
        let a = rng.gen_range(0.5..2.0);
        let b = rng.gen_range(0.1..1.0);
        let len = rng.gen_range(0.5..3.0);
        let tau = rng.gen_range(1..=2);
        net.push_edge(u, v, DelayFn::Affine { a, b }, len, tau, false)
            .unwrap();
    };
    for u in 0..n {
        add(&mut net, rng, u, (u + 1) % n);
        add(&mut net, rng, (u + 1) % n, u);
    }
    for _ in 0..chords {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            add(&mut net, rng, u, v);
        }
    }
    if loops {
        for u in 0..n {
            net.push_edge(u, u, DelayFn::constant(1.0), 0.0, 1, false)
                .unwrap();
        }
    }
    net
}

pub fn random_rates<R: Rng>(rng: &mut R, n: usize, pairs: usize) -> RateMatrix {
    let mut r = RateMatrix::zeros(n);
    for _ in 0..pairs {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            r.set(i, j, rng.gen_range(0.5..2.0)).unwrap();
        }
    }
    r
}

pub fn random_demand<R: Rng>(rng: &mut R, n: usize, horizon: u32, requests: usize) -> DemandTensor {
    let mut d = DemandTensor::zeros(n, horizon);
    let pairs: Vec<(usize, usize)> = (0..2)
        .map(|_| {
            let i = rng.gen_range(0..n);
            (i, (i + rng.gen_range(1..n)) % n)
        })
        .collect();
    for _ in 0..requests {
        let (i, j) = pairs[rng.gen_range(0..pairs.len())];
        let t = rng.gen_range(0..horizon / 2);
        d.add(i, j, t, rng.gen_range(1..=2) as f64).unwrap();
    }
    d
}

/// Adds a constraint after summing coefficients of repeated variables, which
/// microlp rejects.
fn constrain(p: &mut Problem, terms: Vec<(Variable, f64)>, c: &str, rhs: f64) {
    let mut merged = std::collections::BTreeMap::new();
    for (v, a) in terms {
        *merged.entry(v).or_insert(0.0) += a;
    }
    p.add_constraint(merged.into_iter().collect::<Vec<_>>(), op(c), rhs);
}

fn op(c: &str) -> ComparisonOp {
    match c {
        "=" => ComparisonOp::Eq,
        "<=" => ComparisonOp::Le,
        _ => ComparisonOp::Ge,
    }
}

/// Steady-state MP routing optimum via microlp, or `None` if infeasible.
pub fn steady_oracle(net: &Network, rates: &RateMatrix, obj: &MpObjective) -> Option<f64> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let pairs = rates.pairs();
    let edges = net.edges();
    let xp: Vec<Vec<Variable>> = pairs
        .iter()
        .map(|_| {
            edges
                .iter()
                .map(|e| p.add_var(-obj.cost_per_length * e.length, (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    let xr: Vec<Variable> = edges
        .iter()
        .map(|e| p.add_var(-obj.cost_per_length * e.length, (0.0, f64::INFINITY)))
        .collect();
    for u in 0..net.vertex_count() {
        let mut terms = Vec::new();
        for e in edges {
            if e.src == e.dst {
                continue;
            }
            let s = if e.src == u {
                1.0
            } else if e.dst == u {
                -1.0
            } else {
                continue;
            };
            terms.push((xr[e.id], s));
            for x in &xp {
                terms.push((x[e.id], s));
            }
        }
        p.add_constraint(terms, op("="), 0.0);
        for (k, &(i, j, lam)) in pairs.iter().enumerate() {
            let mut terms = Vec::new();
            for e in edges {
                if e.src == e.dst {
                    continue;
                }
                if e.src == u {
                    terms.push((xp[k][e.id], 1.0));
                } else if e.dst == u {
                    terms.push((xp[k][e.id], -1.0));
                }
            }
            let rhs = if u == i {
                lam
            } else if u == j {
                -lam
            } else {
                0.0
            };
            p.add_constraint(terms, op("="), rhs);
        }
    }
    let sol = p.solve().ok()?;
    Some(sol.objective() + obj.fare * rates.total())
}

/// Time-expanded MP routing optimum via microlp. Arcs are `(edge, depart)`;
/// revenue is earned on arrival at the destination within the horizon.
pub fn timevarying_oracle(
    net: &Network,
    demand: &DemandTensor,
    y: &[f64],
    obj: &MpObjective,
) -> Option<f64> {
    let big_t = demand.horizon() as usize;
    let n = net.vertex_count();
    let mut pairs: Vec<(usize, usize)> = demand.entries().map(|(i, j, _, _)| (i, j)).collect();
    pairs.sort();
    pairs.dedup();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    // arcs[t] lists (edge id, src, dst, arrival step)
    let arcs: Vec<Vec<(usize, usize, usize, usize)>> = (0..big_t)
        .map(|t| {
            net.edges()
                .iter()
                .map(|e| (e.id, e.src, e.dst, t + e.tau as usize))
                .collect()
        })
        .collect();
    let mut pv = vec![vec![Vec::new(); big_t]; pairs.len()];
    let mut rv = vec![Vec::new(); big_t];
    for t in 0..big_t {
        for &(e, _, dst, arr) in &arcs[t] {
            let c = -obj.cost_per_length * net.edges()[e].length;
            rv[t].push(p.add_var(c, (0.0, f64::INFINITY)));
            for (k, &(_, j)) in pairs.iter().enumerate() {
                let bonus = if dst == j && arr < big_t {
                    obj.fare
                } else {
                    0.0
                };
                pv[k][t].push(p.add_var(c + bonus, (0.0, f64::INFINITY)));
            }
        }
    }
    let leaving = |u: usize, t: usize| -> Vec<usize> {
        arcs[t].iter().filter(|a| a.1 == u).map(|a| a.0).collect()
    };
    let arriving = |u: usize, t: usize| -> Vec<(usize, usize)> {
        // (depart step, edge id) of arcs reaching u exactly at t
        let mut out = Vec::new();
        for (s, row) in arcs.iter().enumerate().take(t) {
            for a in row {
                if a.2 == u && a.3 == t {
                    out.push((s, a.0));
                }
            }
        }
        out
    };
    for u in 0..n {
        let mut init = Vec::new();
        for e in leaving(u, 0) {
            init.push((rv[0][e], 1.0));
            for k in 0..pairs.len() {
                init.push((pv[k][0][e], 1.0));
            }
        }
        constrain(&mut p, init, "=", y[u]);
        for t in 1..big_t {
            let mut terms = Vec::new();
            for (s, e) in arriving(u, t) {
                terms.push((rv[s][e], 1.0));
                for k in 0..pairs.len() {
                    terms.push((pv[k][s][e], 1.0));
                }
            }
            for e in leaving(u, t) {
                terms.push((rv[t][e], -1.0));
                for k in 0..pairs.len() {
                    terms.push((pv[k][t][e], -1.0));
                }
            }
            constrain(&mut p, terms, "=", 0.0);
        }
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let mut cumulative: Vec<(Variable, f64)> = Vec::new();
        let mut cum_demand = 0.0;
        for t in 0..big_t {
            for u in 0..n {
                let mut terms = Vec::new();
                for e in leaving(u, t) {
                    terms.push((pv[k][t][e], 1.0));
                }
                for (s, e) in arriving(u, t) {
                    terms.push((pv[k][s][e], -1.0));
                }
                if u == i {
                    cumulative.extend(terms.iter().copied());
                } else if u == j {
                    for e in leaving(u, t) {
                        constrain(&mut p, vec![(pv[k][t][e], 1.0)], "=", 0.0);
                    }
                } else {
                    constrain(&mut p, terms, "=", 0.0);
                }
            }
            cum_demand += demand.get(i, j, t as u32);
            constrain(&mut p, cumulative.clone(), "<=", cum_demand);
        }
    }
    Some(p.solve().ok()?.objective())
}

/// Every simple path from `s` to `t` as edge lists.
pub fn simple_paths(net: &Network, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(
        net: &Network,
        u: usize,
        t: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == t {
            out.push(path.clone());
            return;
        }
        for e in net.out_edges(u) {
            if !seen[e.dst] {
                seen[e.dst] = true;
                path.push(e.id);
                go(net, e.dst, t, seen, path, out);
                path.pop();
                seen[e.dst] = false;
            }
        }
    }
    let mut seen = vec![false; net.vertex_count()];
    seen[s] = true;
    let mut out = Vec::new();
    go(net, s, t, &mut seen, &mut Vec::new(), &mut out);
    out
}

fn project_simplex(v: &mut [f64], total: f64) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let th = (cum - total) / (k + 1) as f64;
        if x - th > 0.0 {
            theta = th;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Minimum total travel time by projected gradient over path flows.
pub fn social_oracle(net: &Network, rates: &RateMatrix) -> f64 {
    let pairs = rates.pairs();
    let paths: Vec<Vec<Vec<usize>>> = pairs
        .iter()
        .map(|&(i, j, _)| simple_paths(net, i, j))
        .collect();
    let mut h: Vec<Vec<f64>> = pairs
        .iter()
        .zip(&paths)
        .map(|(&(_, _, lam), ps)| vec![lam / ps.len() as f64; ps.len()])
        .collect();
    let m = net.edge_count();
    let edge_flow = |h: &Vec<Vec<f64>>| {
        let mut x = vec![0.0; m];
        for (k, ps) in paths.iter().enumerate() {
            for (p, f) in ps.iter().zip(&h[k]) {
                for &e in p {
                    x[e] += f;
                }
            }
        }
        x
    };
    let cost = |x: &[f64]| -> f64 {
        net.edges()
            .iter()
            .map(|e| x[e.id] * e.delay.eval(x[e.id]))
            .sum()
    };
    let mut step = 0.1;
    let mut best = cost(&edge_flow(&h));
    for _ in 0..20_000 {
        let x = edge_flow(&h);
        let mc: Vec<f64> = net
            .edges()
            .iter()
            .map(|e| e.delay.marginal_cost(x[e.id]))
            .collect();
        let mut trial = h.clone();
        for (k, ps) in paths.iter().enumerate() {
            for (q, p) in ps.iter().enumerate() {
                let g: f64 = p.iter().map(|&e| mc[e]).sum();
                trial[k][q] -= step * g;
            }
            project_simplex(&mut trial[k], pairs[k].2);
        }
        let c = cost(&edge_flow(&trial));
        if c <= best {
            best = c;
            h = trial;
            step *= 1.1;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    best
}
