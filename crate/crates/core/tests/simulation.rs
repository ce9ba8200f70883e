//! Monte Carlo estimates against exact evaluation, and the statistical
//! behaviour of the estimator.

use invctl_core::balancing::{BalancingPolicy, HoldingProxy};
use invctl_core::dp;
use invctl_core::instances::{self, InstanceId};
use invctl_core::model::{Horizon, OrderingCost, Problem};
use invctl_core::policies::{self, Policy};
use invctl_core::sim::{self, InitialStates, Side, SimConfig};
use invctl_core::{rng, stationary};

fn at(states: Vec<Vec<f64>>, runs: usize, seed: u64) -> SimConfig {
    SimConfig {
        runs,
        seed,
        initial: InitialStates::List(states),
        ..SimConfig::default()
    }
}

fn within_3se(p: &Problem, policy: &Policy, x: &[f64], runs: usize) {
    let ev = dp::evaluate_policy_exact(p, policy).unwrap();
    let space = dp::StateSpace::new(p.locations, &p.grid).unwrap();
    let exact = ev.cost[space.index_of(&p.grid, x).unwrap()];
    let est =
        sim::estimate_cost(p, policy, "policy", x, 0, &at(vec![x.to_vec()], runs, 21)).unwrap();
    let se = est.se.unwrap();
    assert!(
        (est.mean - exact).abs() <= 3.0 * se + 1e-12,
        "x {x:?}: simulated {} +- {se}, exact {exact}",
        est.mean
    );
}

#[test]
fn fig1_simulation_matches_exact() {
    let p = instances::build(&InstanceId::Fig1Nonlinear).unwrap();
    let (_, table) = dp::solve_joint_dp(&p).unwrap();
    let opt = Policy::Tabular(table);
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    for x in [[0.0, 0.0], [-2.0, 3.0], [4.0, 4.0]] {
        within_3se(&p, &opt, &x, 4000);
        within_3se(&p, &sq, &x, 4000);
    }
}

#[test]
fn sector_pi_square_simulation_matches_exact() {
    let p = instances::build(&InstanceId::SectorSim).unwrap();
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    for x in [[0.0, 0.0], [-2.0, 8.0], [3.5, 1.0]] {
        within_3se(&p, &sq, &x, 2000);
    }
}

#[test]
fn standard_error_shrinks_as_root_n() {
    let p = instances::build(&InstanceId::SectorSim).unwrap();
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    let x = [0.0, 0.0];
    let small = sim::estimate_cost(&p, &sq, "sq", &x, 0, &at(vec![x.to_vec()], 1000, 3)).unwrap();
    let large = sim::estimate_cost(&p, &sq, "sq", &x, 0, &at(vec![x.to_vec()], 4000, 3)).unwrap();
    let ratio = small.se.unwrap() / large.se.unwrap();
    assert!((1.7..2.3).contains(&ratio), "se ratio {ratio}");
}

/// Two policies compared on shared demand paths have a less noisy cost
/// difference than on independent paths.
#[test]
fn common_random_numbers_reduce_variance() {
    let p = instances::build(&InstanceId::SectorSim).unwrap();
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    let alt = policies::make_pi_square(&p, 3.0).unwrap().policy;
    let x = vec![1.0, 1.0];
    let diff_se = |crn: bool| {
        let cfg = SimConfig {
            crn,
            ..at(vec![x.clone()], 500, 9)
        };
        let r = sim::ratio_heatmap(
            &p,
            &Side::monte_carlo("a", sq.clone()),
            &Side::monte_carlo("b", alt.clone()),
            &cfg,
        )
        .unwrap();
        let q = cfg.problem(&p).unwrap();
        let mut d = Vec::new();
        for run in 0..cfg.runs {
            let costs: Vec<f64> = [("a", &sq), ("b", &alt)]
                .iter()
                .map(|(name, pol)| {
                    let (mut dem, mut pol_rng) = cfg.streams(rng::tag(name), 0, run);
                    sim::simulate_run(&q, pol, &x, &mut dem, &mut pol_rng, None).unwrap()
                })
                .collect();
            d.push(costs[0] - costs[1]);
        }
        let est = sim::Estimate::from_samples(&d);
        assert!((est.mean - (r.rows[0].num.mean - r.rows[0].den.mean)).abs() < 1e-9);
        est.se.unwrap()
    };
    let with = diff_se(true);
    let without = diff_se(false);
    assert!(with < 0.5 * without, "crn {with} vs independent {without}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = instances::build(&InstanceId::Fig1Nonlinear).unwrap();
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    let bal = Policy::Balancing(BalancingPolicy::new(&p, 1.0, HoldingProxy::Printed).unwrap());
    let csv = |threads| {
        let cfg = SimConfig {
            runs: 50,
            seed: 5,
            threads: Some(threads),
            ..SimConfig::default()
        };
        sim::ratio_heatmap(
            &p,
            &Side::monte_carlo("bal", bal.clone()),
            &Side::monte_carlo("sq", sq.clone()),
            &cfg,
        )
        .unwrap()
        .to_csv()
    };
    assert_eq!(csv(1), csv(3));
}

#[test]
fn different_seeds_differ() {
    let p = instances::build(&InstanceId::SectorSim).unwrap();
    let sq = policies::make_pi_square(&p, 2.0).unwrap().policy;
    let x = vec![0.0, 0.0];
    let a = sim::estimate_cost(&p, &sq, "sq", &x, 0, &at(vec![x.clone()], 20, 1)).unwrap();
    let b = sim::estimate_cost(&p, &sq, "sq", &x, 0, &at(vec![x.clone()], 20, 2)).unwrap();
    assert_ne!(a.mean, b.mean);
}

/// The simulated long-run cost of the best stationary base-stock policy
/// approaches its steady-state formula.
#[test]
fn stationary_cost_matches_long_simulation() {
    for id in [
        InstanceId::Fig1Linear,
        InstanceId::Fig1Nonlinear,
        InstanceId::SectorSim,
    ] {
        let base = instances::build(&id).unwrap();
        let levels = stationary::optimize_individual(&base).unwrap();
        let target = stationary::stationary_cost(&levels, &base).unwrap();
        let pol = Policy::BaseStock {
            levels: vec![levels.clone()],
            stationary: true,
        };
        for periods in [1_000, 10_000] {
            let p = base.with_horizon(Horizon::InfiniteAveraged {
                sim_periods: periods,
                burn_in: 0,
            });
            let x0 = vec![0.0; p.locations];
            let runs = if periods == 1_000 { 200 } else { 40 };
            let est =
                sim::estimate_cost(&p, &pol, "bs", &x0, 0, &at(vec![x0.clone()], runs, 8)).unwrap();
            let se = est.se.unwrap();
            assert!(
                (est.mean - target).abs() <= 3.0 * se,
                "{id} N={periods}: simulated {} +- {se}, steady state {target}",
                est.mean
            );
        }
    }
}

/// Online policy against the DP optimum on single-location problems:
/// within twice the optimum for linear costs and three times for affine.
#[test]
fn balancing_competitive_on_one_location() {
    let base = instances::build(&InstanceId::SectorSim)
        .unwrap()
        .restrict(0)
        .unwrap();
    for (cost, fixed, factor) in [
        (OrderingCost::linear(2.0), 0.0, 2.0),
        (OrderingCost::affine(4.0, 2.0), 4.0, 3.0),
    ] {
        let p = base.with_ordering(cost);
        let (v, _) = dp::solve_joint_dp(&p).unwrap();
        let opt = v.average_cost();
        for variant in [HoldingProxy::Printed, HoldingProxy::Cumulative] {
            let bal = Policy::Balancing(BalancingPolicy::new(&p, fixed, variant).unwrap());
            for x in [-2.0, 0.0, 3.0] {
                let est = sim::estimate_cost(&p, &bal, "bal", &[x], 0, &at(vec![vec![x]], 400, 4))
                    .unwrap();
                let s = p.grid.index_of(x).unwrap();
                assert!(
                    est.mean <= factor * opt[s] + 3.0 * est.se.unwrap(),
                    "{variant} K={fixed} x={x}: {} vs optimum {}",
                    est.mean,
                    opt[s]
                );
            }
        }
    }
}
