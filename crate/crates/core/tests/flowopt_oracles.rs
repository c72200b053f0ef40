mod common;

use common::flows::*;
use pmm_core::flowopt::lp::check_lp_certificate;
use pmm_core::flowopt::steady::steady_lp;
use pmm_core::flowopt::timevarying::{timevarying_lp, timevarying_objective};
use pmm_core::flowopt::*;
use pmm_core::netmodel::{DelayFn, Network, RateMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn steady_routing_matches_lp_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for case in 0..30 {
        let n = rng.gen_range(2..=6);
        let chords = rng.gen_range(0..4);
        let net = random_network(&mut rng, n, chords, false);
        let rates = random_rates(&mut rng, n, 3);
        let obj = MpObjective {
            fare: 5.0,
            cost_per_length: rng.gen_range(0.5..2.0),
        };
        let ours = solve_mp_routing(&net, &rates, &obj).unwrap();
        let oracle = steady_oracle(&net, &rates, &obj).expect("oracle feasible");
        assert!(
            close(ours.objective, oracle, 1e-6),
            "case {case}: {} vs {oracle}",
            ours.objective
        );
        let rep = check_steady_feasibility(&ours.flow, &net, &rates).unwrap();
        assert!(rep.feasible(1e-6), "case {case}: {rep}");
        let (lp, _) = steady_lp(&net, &rates, &obj);
        assert!(check_lp_certificate(&lp, &ours.x, &ours.duals).within(1e-6));
    }
}

#[test]
fn timevarying_routing_matches_lp_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for case in 0..15 {
        let n = rng.gen_range(2..=5);
        let horizon = rng.gen_range(4..=8);
        let net = random_network(&mut rng, n, 1, true);
        let demand = random_demand(&mut rng, n, horizon, 3);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=2) as f64).collect();
        let obj = MpObjective {
            fare: 6.0,
            cost_per_length: 1.0,
        };
        let ours = solve_timevarying_routing(&net, &demand, &y, &obj).unwrap();
        let oracle = timevarying_oracle(&net, &demand, &y, &obj).expect("oracle feasible");
        assert!(
            close(ours.objective, oracle, 1e-6),
            "case {case}: {} vs {oracle}",
            ours.objective
        );
        assert!(close(
            timevarying_objective(&net, &obj, &ours.flow),
            ours.objective,
            1e-9
        ));
        let rep = check_timevarying_feasibility(&ours.flow, &net, &demand, &y).unwrap();
        assert!(rep.feasible(1e-6), "case {case}: {rep}");
        let (lp, _) = timevarying_lp(&net, &demand, &y, &obj);
        assert!(check_lp_certificate(&lp, &ours.x, &ours.duals).within(1e-6));
    }
}

#[test]
fn social_optimum_matches_projected_gradient() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for case in 0..10 {
        let net = random_network(&mut rng, 4, 2, false);
        let rates = random_rates(&mut rng, 4, 2);
        let ours = solve_social_optimum_tt(&net, &rates).unwrap();
        let oracle = social_oracle(&net, &rates);
        assert!(
            ours.objective <= oracle * (1.0 + 1e-4) && close(ours.objective, oracle, 1e-4),
            "case {case}: {} vs {oracle}",
            ours.objective
        );
    }
}

#[test]
fn affine_tolls_equal_slope_times_flow() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for _ in 0..10 {
        let net = random_network(&mut rng, 5, 3, false);
        let rates = random_rates(&mut rng, 5, 3);
        let opt = solve_social_optimum_tt(&net, &rates).unwrap();
        let tolls = compute_tolls(&net, &opt.edge_flows);
        for e in net.edges() {
            let DelayFn::Affine { b, .. } = e.delay else {
                unreachable!()
            };
            assert!((tolls[e.id] - b * opt.edge_flows[e.id]).abs() < 1e-12);
        }
    }
}

#[test]
fn tolled_paths_have_equal_generalized_cost() {
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    for _ in 0..10 {
        let net = random_network(&mut rng, 4, 3, false);
        let rates = random_rates(&mut rng, 4, 2);
        let opt = solve_social_optimum_tt(&net, &rates).unwrap();
        let tolls = compute_tolls(&net, &opt.edge_flows);
        let generalized: Vec<f64> = net
            .edges()
            .iter()
            .map(|e| e.delay.eval(opt.edge_flows[e.id]) + tolls[e.id])
            .collect();
        for paths in &opt.paths {
            let costs: Vec<f64> = paths
                .iter()
                .filter(|p| p.flow > 1e-9)
                .map(|p| p.edges.iter().map(|&e| generalized[e]).sum())
                .collect();
            let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo <= 1e-4, "{costs:?}");
        }
    }
}

#[test]
fn social_objective_is_invariant_to_edge_relabeling() {
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    for _ in 0..5 {
        let net = random_network(&mut rng, 5, 3, false);
        let rates = random_rates(&mut rng, 5, 3);
        let mut order: Vec<usize> = (0..net.edge_count()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut shuffled = Network::new(5, net.dt, net.horizon);
        for &k in &order {
            let e = &net.edges()[k];
            shuffled
                .push_edge(e.src, e.dst, e.delay, e.length, e.tau, e.train)
                .unwrap();
        }
        let a = solve_social_optimum_tt(&net, &rates).unwrap().objective;
        let b = solve_social_optimum_tt(&shuffled, &rates)
            .unwrap()
            .objective;
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn fabricated_duals_never_certify_a_suboptimal_flow() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for _ in 0..10 {
        let net = random_network(&mut rng, 4, 2, false);
        let mut rates = RateMatrix::zeros(4);
        rates.set(0, 2, 1.5).unwrap();
        let opt = solve_social_optimum_tt(&net, &rates).unwrap();
        // route everything on the worst simple path instead
        let paths = simple_paths(&net, 0, 2);
        let worst = paths
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()))
            .unwrap()
            .clone();
        let mut flows = vec![vec![0.0; net.edge_count()]];
        for &e in &worst {
            flows[0][e] = 1.5;
        }
        if flows[0] == opt.commodity_flows[0] {
            continue;
        }
        for _ in 0..200 {
            let potentials = vec![(0..4).map(|_| rng.gen_range(-5.0..20.0)).collect()];
            let cert = KktCertificate {
                commodities: opt.commodities.clone(),
                flows: flows.clone(),
                potentials,
            };
            assert!(!check_kkt(&net, &rates, &cert, 1e-6).accepted);
        }
        let best = potentials_for(&net, &opt.commodities, &flows);
        let cert = KktCertificate {
            commodities: opt.commodities.clone(),
            flows,
            potentials: best,
        };
        assert!(!check_kkt(&net, &rates, &cert, 1e-6).accepted);
    }
}

#[test]
fn sop_winner_matches_per_project_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(18);
    let mut compared = 0;
    for _ in 0..40 {
        let net = random_network(&mut rng, 4, 1, false);
        let rates = random_rates(&mut rng, 4, 2);
        let projects: Vec<Project> = (0..3)
            .map(|k| {
                let u = rng.gen_range(0..4);
                let v = (u + rng.gen_range(1..4)) % 4;
                let text = format!(
                    "add_edge {u} {v} affine {:.3} {:.3} len={:.3}",
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(0.1..0.5),
                    rng.gen_range(0.1..2.0)
                );
                Project::parse(&format!("p{k}"), &text).unwrap()
            })
            .collect();
        let mp = MpObjective::default();
        let out = solve_sop(&net, &projects, &rates, &mp, &MaObjective::default()).unwrap();
        // brute force: every project routed and scored independently
        let mut scores = Vec::new();
        for p in &projects {
            let g = p.apply(&net).unwrap();
            let oracle_obj = steady_oracle(&g, &rates, &mp).unwrap();
            let ours = solve_mp_routing(&g, &rates, &mp).unwrap();
            assert!(close(ours.objective, oracle_obj, 1e-6));
            scores.push(MaObjective::default().eval(&g, &ours.flow));
        }
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if sorted[0] - sorted[1] < 1e-6 {
            continue;
        }
        let best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(out.winner, best);
        compared += 1;
    }
    assert!(compared >= 5);
}
