//! Named property suites for `invctl verify`.

use invctl_core::balancing::{BalancingPolicy, HoldingProxy};
use invctl_core::dp::{self, TabularPolicy};
use invctl_core::instances::{self, InstanceId};
use invctl_core::model::Problem;
use invctl_core::policies::{self, ActionBox, Policy};
use invctl_core::sim::{self, InitialStates, SimConfig};
use invctl_core::stationary;

/// One checked property.
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Joint and individual stationary optimization agree in cost and levels.
pub fn theorem1(seed: u64) -> anyhow::Result<Vec<Check>> {
    let mut problems: Vec<(String, Problem)> = vec![
        (
            "fig1_linear".into(),
            instances::build(&InstanceId::Fig1Linear)?,
        ),
        (
            "fig1_nonlinear".into(),
            instances::build(&InstanceId::Fig1Nonlinear)?,
        ),
    ];
    for j in 0..5 {
        problems.push((
            format!("random[{}]", seed + j),
            instances::random_small(seed + j),
        ));
    }
    let mut out = Vec::new();
    for (name, p) in problems {
        let joint = stationary::optimize_joint(&p)?;
        let indiv = stationary::optimize_individual(&p)?;
        let cj = stationary::stationary_cost(&joint, &p)?;
        let ci = stationary::stationary_cost(&indiv, &p)?;
        let diff = (cj - ci).abs();
        out.push(Check::new(
            name,
            diff <= 1e-12 && joint == indiv,
            format!("joint {joint:?} cost {cj}, individual {indiv:?} cost {ci}, |diff| = {diff:e}"),
        ));
    }
    Ok(out)
}

/// Policies used by the transformation suite on a DP-ready problem.
pub fn transform_policies(
    p: &Problem,
    slope: f64,
    seed: u64,
) -> anyhow::Result<Vec<(String, Policy)>> {
    Ok(vec![
        (
            "pi_square".into(),
            policies::make_pi_square(p, slope)?.policy,
        ),
        (
            "pi_diamond".into(),
            policies::make_pi_diamond(p, 1.0, slope)?.policy,
        ),
        (
            "random_tabular".into(),
            Policy::Tabular(TabularPolicy::random(p, seed)?),
        ),
    ])
}

/// Cost difference after removing `slope * z` from the ordering cost.
/// Both the demand-only identity and the one with the finite-horizon
/// boundary term are reported; the suite passes on the latter.
pub fn transform(p: &Problem, slope: f64, cfg: &SimConfig) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, pol) in transform_policies(p, slope, cfg.seed)? {
        let r = sim::verify_cost_transformation(p, &pol, slope, cfg)?;
        let tol = 1e-9;
        out.push(Check::new(
            format!("{name} demand-only identity"),
            r.literal_holds(tol),
            format!(
                "max |residual| = {:e} ({})",
                r.max_literal_residual,
                if r.exact { "exact" } else { "simulated" }
            ),
        ));
        out.push(Check::new(
            format!("{name} with boundary term"),
            r.corrected_holds(tol),
            format!(
                "max |residual| = {:e}, path violations {}",
                r.max_corrected_residual, r.path_violations
            ),
        ));
    }
    Ok(out)
}

/// DP stage-0 values against exhaustive scenario trees on random instances.
pub fn oracle(seed: u64, count: u64) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for j in 0..count {
        let p = instances::random_small(seed + j);
        let (v, _) = dp::solve_joint_dp(&p)?;
        let space = v.space();
        let mut worst: f64 = 0.0;
        for s in 0..space.size() {
            let x = space.state(&p.grid, s);
            worst = worst.max((dp::scenario_tree_value(&p, &x)? - v.at(0, s)).abs());
        }
        out.push(Check::new(
            format!(
                "random[{}] M={} N={} points={}",
                seed + j,
                p.locations,
                p.horizon.periods(),
                p.grid.count()
            ),
            worst <= 1e-12,
            format!("max |V0 - tree| = {worst:e}"),
        ));
    }
    Ok(out)
}

/// Holding proxy nondecreasing and backlog proxy nonincreasing in the
/// order, and the balancing order balancing them.
pub fn balancing_monotone() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for id in [InstanceId::SectorSim, InstanceId::AffineSim] {
        let p = instances::build(&id)?;
        let bx = ActionBox::of(&p);
        let n = p.horizon.periods();
        for variant in [HoldingProxy::Printed, HoldingProxy::Cumulative] {
            let b = BalancingPolicy::new(&p, p.ordering.fixed_at_zero(), variant)?;
            let mut bad = Vec::new();
            let mut worst_gap: f64 = 0.0;
            for k in [0, n / 2, n - 1] {
                for x in p.grid.points() {
                    let cap = bx.cap(x);
                    let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
                    for j in 0..=200 {
                        let u = cap * j as f64 / 200.0;
                        let h = b.expected_holding_proxy(0, k, x, u)?;
                        let bl = b.expected_backlog_proxy(0, x, u)?;
                        if h < prev.0 - 1e-12 || bl > prev.1 + 1e-12 {
                            bad.push((k, x, u));
                        }
                        prev = (h, bl);
                    }
                    let (u, _, saturated) = b.balancing_order(0, k, x, cap)?;
                    if !saturated && u > 0.0 {
                        let gap = (b.expected_holding_proxy(0, k, x, u)?
                            - b.expected_backlog_proxy(0, x, u)?)
                        .abs();
                        worst_gap = worst_gap.max(gap);
                    }
                }
            }
            out.push(Check::new(
                format!("{id} {variant}"),
                bad.is_empty() && worst_gap <= 1e-6,
                format!(
                    "{} monotonicity violation(s){}, max |H - B| at the balancing order {worst_gap:e}",
                    bad.len(),
                    bad.first().map_or(String::new(), |v| format!(" first at (k, x, u) = {v:?}"))
                ),
            ));
        }
    }
    Ok(out)
}

/// Default slope removed by the transformation suite: the smallest slope
/// of the cost, so every piece stays nonnegative.
pub fn default_slope(p: &Problem) -> f64 {
    p.ordering
        .pieces
        .iter()
        .map(|q| q.slope)
        .chain(p.ordering.discounts.iter().map(|d| d.slope))
        .fold(f64::INFINITY, f64::min)
}

pub fn grid_config(seed: u64, runs: usize) -> SimConfig {
    SimConfig {
        runs,
        seed,
        initial: InitialStates::Grid,
        crn: true,
        ..SimConfig::default()
    }
}
