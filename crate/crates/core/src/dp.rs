//! Exact finite-horizon dynamic programming on the joint state grid.
//!
//! States are indexed row-major with location 0 most significant. Next
//! states clamp componentwise to the grid box while holding/backlog cost is
//! charged on the unclamped inventory. Values are stored as un-normalized
//! cost sums; reports divide by the horizon.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grid, Problem, Purpose};
use crate::policies::Policy;

/// Largest joint table the solvers will allocate.
pub const MAX_JOINT_STATES: usize = 4_000_000;
/// Relative tolerance under which two action values count as tied.
pub const TIE_TOL: f64 = 1e-12;
pub const TIE_BREAK: &str = "lexicographically smallest order vector (location 0 first)";

/// Joint grid over `m` locations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    m: usize,
    n: usize,
    size: usize,
    strides: Vec<usize>,
}

impl StateSpace {
    pub fn new(m: usize, grid: &Grid) -> Result<Self> {
        let n = grid.count();
        let size = (n as u128).pow(m as u32);
        if size > MAX_JOINT_STATES as u128 {
            return Err(Error::TooLarge {
                locations: m,
                points: n,
                size,
                limit: MAX_JOINT_STATES,
            });
        }
        let mut strides = vec![1; m];
        for i in (0..m.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * n;
        }
        Ok(Self {
            m,
            n,
            size: size as usize,
            strides,
        })
    }

    pub fn locations(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    #[inline]
    pub fn coord(&self, s: usize, i: usize) -> usize {
        (s / self.strides[i]) % self.n
    }

    pub fn coords(&self, s: usize, out: &mut [usize]) {
        for (i, c) in out.iter_mut().enumerate() {
            *c = self.coord(s, i);
        }
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn index_of(&self, grid: &Grid, x: &[f64]) -> Result<usize> {
        if x.len() != self.m {
            return Err(Error::OffGrid { state: x.to_vec() });
        }
        let mut s = 0;
        for (i, &xi) in x.iter().enumerate() {
            let c = grid
                .index_of(xi)
                .ok_or_else(|| Error::OffGrid { state: x.to_vec() })?;
            s += c * self.strides[i];
        }
        Ok(s)
    }

    pub fn state(&self, grid: &Grid, s: usize) -> Vec<f64> {
        (0..self.m).map(|i| grid.point(self.coord(s, i))).collect()
    }
}

/// Cost-to-go tables `V_0, ..., V_N` over the joint grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub locations: usize,
    pub grid: Grid,
    pub stages: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.locations, &self.grid).expect("validated at construction")
    }

    pub fn at(&self, k: usize, s: usize) -> f64 {
        self.stages[k][s]
    }

    pub fn value(&self, k: usize, x: &[f64]) -> Result<f64> {
        let stage = self.stages.get(k).ok_or(Error::StageOutOfRange {
            stage: k,
            stages: self.stages.len(),
        })?;
        Ok(stage[self.space().index_of(&self.grid, x)?])
    }

    /// Stage-0 value divided by the horizon, per initial state.
    pub fn average_cost(&self) -> Vec<f64> {
        let n = self.horizon() as f64;
        self.stages[0].iter().map(|v| v / n).collect()
    }

    /// CSV with columns `x1..xM,value,stage`, one row per stage and state.
    pub fn to_csv(&self) -> String {
        let space = self.space();
        let mut out = String::new();
        for i in 0..self.locations {
            let _ = write!(out, "x{},", i + 1);
        }
        out.push_str("value,stage\n");
        for (k, stage) in self.stages.iter().enumerate() {
            for (s, v) in stage.iter().enumerate() {
                for x in space.state(&self.grid, s) {
                    let _ = write!(out, "{x},");
                }
                let _ = writeln!(out, "{v},{k}");
            }
        }
        out
    }
}

/// Deterministic stage-indexed order table; orders are stored in grid steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub locations: usize,
    pub grid: Grid,
    pub tie_break: String,
    /// `orders[k][s * M + i]` is the order of location `i` at state `s`.
    pub orders: Vec<Vec<u32>>,
}

impl TabularPolicy {
    pub fn stages(&self) -> usize {
        self.orders.len()
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.locations, &self.grid).expect("validated at construction")
    }

    /// Feasible table with orders drawn uniformly from each state's action
    /// box; reproducible from `seed`.
    pub fn random(p: &Problem, seed: u64) -> Result<Self> {
        let n = p.horizon.finite_periods()?;
        let space = StateSpace::new(p.locations, &p.grid)?;
        let bx = crate::policies::ActionBox::of(p);
        let mut rng = crate::rng::derive_stream(
            seed,
            &[crate::rng::kind::TEST, crate::rng::tag("random_table")],
        );
        let orders = (0..n)
            .map(|_| {
                let mut stage = Vec::with_capacity(space.size() * p.locations);
                for s in 0..space.size() {
                    for x in space.state(&p.grid, s) {
                        let cap = (bx.cap(x) / p.grid.step + crate::model::GRID_TOL).floor() as u32;
                        stage.push(rng.gen_range(0..=cap));
                    }
                }
                stage
            })
            .collect();
        Ok(Self {
            locations: p.locations,
            grid: p.grid,
            tie_break: "random".into(),
            orders,
        })
    }

    pub fn order_steps(&self, k: usize, s: usize) -> &[u32] {
        &self.orders[k][s * self.locations..(s + 1) * self.locations]
    }

    pub fn act(&self, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.locations];
        self.act_into(k, x, &mut out)?;
        Ok(out)
    }

    pub fn act_into(&self, k: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        if k >= self.stages() {
            return Err(Error::StageOutOfRange {
                stage: k,
                stages: self.stages(),
            });
        }
        let s = self.space().index_of(&self.grid, x)?;
        for (o, &u) in out.iter_mut().zip(self.order_steps(k, s)) {
            *o = u as f64 * self.grid.step;
        }
        Ok(())
    }

    /// Single-location table of location `i` at stage `k`, read along the
    /// axis through the origin of the other coordinates.
    pub fn axis(&self, k: usize, i: usize, others: &[usize]) -> Vec<u32> {
        let space = self.space();
        let mut coords = others.to_vec();
        (0..space.points())
            .map(|j| {
                coords[i] = j;
                self.order_steps(k, space.index(&coords))[i]
            })
            .collect()
    }

    /// CSV with columns `x1..xM,u1..uM,stage`.
    pub fn to_csv(&self) -> String {
        let space = self.space();
        let mut out = String::new();
        for i in 0..self.locations {
            let _ = write!(out, "x{},", i + 1);
        }
        for i in 0..self.locations {
            let _ = write!(out, "u{},", i + 1);
        }
        out.push_str("stage\n");
        for k in 0..self.stages() {
            for s in 0..space.size() {
                for x in space.state(&self.grid, s) {
                    let _ = write!(out, "{x},");
                }
                for &u in self.order_steps(k, s) {
                    let _ = write!(out, "{},", u as f64 * self.grid.step);
                }
                let _ = writeln!(out, "{k}");
            }
        }
        out
    }
}

/// Precomputed per-problem data shared by the solvers and evaluators.
struct Tables {
    space: StateSpace,
    grid: Grid,
    periods: usize,
    max_steps: usize,
    /// Demand atoms per location as (grid steps, probability).
    demand: Vec<Vec<(usize, f64)>>,
    /// `holding[i][j]`: expected holding/backlog cost at post-order level `j`.
    holding: Vec<Vec<f64>>,
    /// Ordering cost by total order in grid steps.
    ordering: Vec<f64>,
}

impl Tables {
    fn new(p: &Problem) -> Result<Self> {
        if !p.demand.is_discrete() {
            return Err(Error::Unsupported(
                "exact dynamic programming with continuous demand".into(),
            ));
        }
        p.validate(Purpose::DynamicProgramming)?;
        let periods = p.horizon.finite_periods()?;
        let space = StateSpace::new(p.locations, &p.grid)?;
        let grid = p.grid;
        let max_steps = grid.steps_of(p.max_order_per_location).expect("validated");
        let mut demand = Vec::with_capacity(p.locations);
        let mut holding = Vec::with_capacity(p.locations);
        for i in 0..p.locations {
            let pmf = p.demand.pmf(i)?;
            let rates = *p.holding.rates(i)?;
            let atoms: Vec<(usize, f64)> = pmf
                .iter()
                .map(|&(w, q)| (grid.steps_of(w).expect("validated"), q))
                .filter(|&(_, q)| q > 0.0)
                .collect();
            holding.push(
                (0..space.points())
                    .map(|j| {
                        let y = grid.point(j);
                        atoms
                            .iter()
                            .map(|&(w, q)| q * rates.cost(y - w as f64 * grid.step))
                            .sum()
                    })
                    .collect(),
            );
            demand.push(atoms);
        }
        let ordering = (0..=p.locations * max_steps)
            .map(|t| p.ordering.value(t as f64 * grid.step))
            .collect();
        Ok(Self {
            space,
            grid,
            periods,
            max_steps,
            demand,
            holding,
            ordering,
        })
    }

    fn cap(&self, c: usize) -> usize {
        self.max_steps.min(self.space.points() - 1 - c)
    }

    /// `E next(clamp(y - w))` for every post-order state `y`.
    fn expect_next(&self, next: &[f64]) -> Vec<f64> {
        let mut cur = next.to_vec();
        for i in 0..self.space.locations() {
            let stride = self.space.stride(i);
            let atoms = &self.demand[i];
            cur = (0..self.space.size())
                .into_par_iter()
                .map(|s| {
                    let c = self.space.coord(s, i);
                    atoms
                        .iter()
                        .map(|&(w, q)| q * cur[s - (c - c.saturating_sub(w)) * stride])
                        .sum()
                })
                .collect();
        }
        cur
    }

    /// `G(y)`: expected stage cost after ordering plus expected continuation.
    fn post_order(&self, next: &[f64]) -> Vec<f64> {
        let ev = self.expect_next(next);
        let m = self.space.locations();
        ev.into_par_iter()
            .enumerate()
            .map(|(s, e)| {
                let mut g = e;
                for i in 0..m {
                    g += self.holding[i][self.space.coord(s, i)];
                }
                g
            })
            .collect()
    }
}

/// Visits every order vector in the box `0..=caps[i]` in lexicographic order.
fn for_each_order(caps: &[usize], mut f: impl FnMut(&[usize])) {
    let m = caps.len();
    let mut u = vec![0usize; m];
    loop {
        f(&u);
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if u[i] < caps[i] {
                u[i] += 1;
                for v in &mut u[i + 1..] {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Optimal joint policy and value function by backward induction.
pub fn solve_joint_dp(p: &Problem) -> Result<(ValueFunction, TabularPolicy)> {
    let t = Tables::new(p)?;
    let m = t.space.locations();
    let size = t.space.size();
    let mut stages = vec![vec![0.0; size]; t.periods + 1];
    let mut orders = vec![Vec::new(); t.periods];
    for k in (0..t.periods).rev() {
        let g = t.post_order(&stages[k + 1]);
        let solved: Vec<(f64, Vec<u32>)> = (0..size)
            .into_par_iter()
            .map(|s| {
                let mut coords = vec![0; m];
                t.space.coords(s, &mut coords);
                let caps: Vec<usize> = coords.iter().map(|&c| t.cap(c)).collect();
                let eval = |u: &[usize]| {
                    let total: usize = u.iter().sum();
                    let y = s + u
                        .iter()
                        .enumerate()
                        .map(|(i, &ui)| ui * t.space.stride(i))
                        .sum::<usize>();
                    t.ordering[total] + g[y]
                };
                let mut best = f64::INFINITY;
                for_each_order(&caps, |u| best = best.min(eval(u)));
                let tol = TIE_TOL * best.abs().max(1.0);
                let mut chosen: Option<Vec<u32>> = None;
                for_each_order(&caps, |u| {
                    if chosen.is_none() && eval(u) <= best + tol {
                        chosen = Some(u.iter().map(|&v| v as u32).collect());
                    }
                });
                (best, chosen.expect("nonempty action set"))
            })
            .collect();
        let mut table = Vec::with_capacity(size * m);
        for (s, (v, u)) in solved.into_iter().enumerate() {
            stages[k][s] = v;
            table.extend(u);
        }
        orders[k] = table;
    }
    Ok((
        ValueFunction {
            locations: m,
            grid: t.grid,
            stages,
        },
        TabularPolicy {
            locations: m,
            grid: t.grid,
            tie_break: TIE_BREAK.to_string(),
            orders,
        },
    ))
}

/// Single-location specialization of [`solve_joint_dp`].
pub fn solve_single_dp(p: &Problem) -> Result<(ValueFunction, TabularPolicy)> {
    if p.locations != 1 {
        return Err(Error::Domain(format!(
            "single-location solve on a {}-location problem",
            p.locations
        )));
    }
    solve_joint_dp(p)
}

/// Exact expected statistics of a deterministic policy, per initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub periods: usize,
    /// `J(x0)`: expected total cost divided by the horizon.
    pub cost: Vec<f64>,
    /// Expected total ordered volume over the horizon and all locations.
    pub ordered: Vec<f64>,
    /// Expected total inventory `sum_i x_N^i` at the end of the horizon.
    pub terminal: Vec<f64>,
    /// Expected total inventory added by clamping at the grid floor.
    pub clamped: Vec<f64>,
    /// Expected total demand over the horizon and all locations.
    pub demand: f64,
}

/// Orders of `policy` at every stage and grid state, checked for feasibility.
pub fn tabulate(p: &Problem, policy: &Policy) -> Result<TabularPolicy> {
    if let Policy::Tabular(t) = policy {
        if t.locations != p.locations || t.grid != p.grid {
            return Err(Error::Incompatible(
                "table grid differs from the problem grid".into(),
            ));
        }
        return Ok(t.clone());
    }
    if !policy.is_deterministic() {
        return Err(Error::Unsupported(
            "exact evaluation of a randomized policy; use Monte Carlo".into(),
        ));
    }
    let t = Tables::new(p)?;
    let m = p.locations;
    let bx = crate::policies::ActionBox::of(p);
    let orders = (0..t.periods)
        .map(|k| {
            let rows: Result<Vec<Vec<u32>>> = (0..t.space.size())
                .into_par_iter()
                .map(|s| {
                    let x = t.space.state(&t.grid, s);
                    let mut u = vec![0.0; m];
                    let mut rng = crate::rng::derive_stream(0, &[]);
                    policy.act_into(&bx, k, &x, &mut rng, &mut u)?;
                    u.iter()
                        .enumerate()
                        .map(|(i, &ui)| {
                            let c = t.space.coord(s, i);
                            match t.grid.steps_of(ui) {
                                Some(n) if n <= t.cap(c) => Ok(n as u32),
                                _ => Err(Error::Incompatible(format!(
                                    "order {ui} at location {i}, state {x:?}, stage {k} is off-grid or infeasible"
                                ))),
                            }
                        })
                        .collect()
                })
                .collect();
            Ok(rows?.concat())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TabularPolicy {
        locations: m,
        grid: p.grid,
        tie_break: "tabulated".into(),
        orders,
    })
}

/// Exact per-initial-state cost of a deterministic policy by forward
/// propagation of the state distribution.
pub fn evaluate_policy_exact(p: &Problem, policy: &Policy) -> Result<Evaluation> {
    let table = tabulate(p, policy)?;
    evaluate_table_exact(p, &table)
}

pub fn evaluate_table_exact(p: &Problem, table: &TabularPolicy) -> Result<Evaluation> {
    let t = Tables::new(p)?;
    check_table(&t, table)?;
    let size = t.space.size();
    let m = t.space.locations();
    let step = t.grid.step;
    let floor_gain: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..t.space.points())
                .map(|c| {
                    t.demand[i]
                        .iter()
                        .map(|&(w, q)| q * w.saturating_sub(c) as f64 * step)
                        .sum()
                })
                .collect()
        })
        .collect();
    let per_state: Vec<[f64; 4]> = (0..size)
        .into_par_iter()
        .map(|x0| {
            let mut dist = vec![0.0; size];
            dist[x0] = 1.0;
            let (mut cost, mut ordered, mut clamped) = (0.0, 0.0, 0.0);
            for k in 0..t.periods {
                let mut post = vec![0.0; size];
                for (s, &mass) in dist.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    let u = table.order_steps(k, s);
                    let total: usize = u.iter().map(|&v| v as usize).sum();
                    let y = s + u
                        .iter()
                        .enumerate()
                        .map(|(i, &ui)| ui as usize * t.space.stride(i))
                        .sum::<usize>();
                    let mut stage = t.ordering[total];
                    for i in 0..m {
                        let c = t.space.coord(y, i);
                        stage += t.holding[i][c];
                        clamped += mass * floor_gain[i][c];
                    }
                    cost += mass * stage;
                    ordered += mass * total as f64 * step;
                    post[y] += mass;
                }
                dist = propagate(&t, post);
            }
            let terminal = dist
                .iter()
                .enumerate()
                .filter(|(_, &q)| q != 0.0)
                .map(|(s, q)| {
                    q * (0..m)
                        .map(|i| t.grid.point(t.space.coord(s, i)))
                        .sum::<f64>()
                })
                .sum();
            [cost / t.periods as f64, ordered, terminal, clamped]
        })
        .collect();
    let demand = t.periods as f64 * p.mean_total_demand();
    Ok(Evaluation {
        periods: t.periods,
        cost: per_state.iter().map(|r| r[0]).collect(),
        ordered: per_state.iter().map(|r| r[1]).collect(),
        terminal: per_state.iter().map(|r| r[2]).collect(),
        clamped: per_state.iter().map(|r| r[3]).collect(),
        demand,
    })
}

/// Pushes a post-order distribution through one period of demand.
fn propagate(t: &Tables, mut cur: Vec<f64>) -> Vec<f64> {
    for i in 0..t.space.locations() {
        let stride = t.space.stride(i);
        let mut next = vec![0.0; cur.len()];
        for (s, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let c = t.space.coord(s, i);
            for &(w, q) in &t.demand[i] {
                next[s - (c - c.saturating_sub(w)) * stride] += mass * q;
            }
        }
        cur = next;
    }
    cur
}

/// Per-initial-state cost of a table by backward recursion on its own
/// cost-to-go; an independent route to the same numbers as the forward pass.
pub fn evaluate_policy_backward(p: &Problem, table: &TabularPolicy) -> Result<Vec<f64>> {
    let t = Tables::new(p)?;
    check_table(&t, table)?;
    let size = t.space.size();
    let mut w = vec![0.0; size];
    for k in (0..t.periods).rev() {
        let g = t.post_order(&w);
        w = (0..size)
            .into_par_iter()
            .map(|s| {
                let u = table.order_steps(k, s);
                let total: usize = u.iter().map(|&v| v as usize).sum();
                let y = s + u
                    .iter()
                    .enumerate()
                    .map(|(i, &ui)| ui as usize * t.space.stride(i))
                    .sum::<usize>();
                t.ordering[total] + g[y]
            })
            .collect();
    }
    Ok(w.into_iter().map(|v| v / t.periods as f64).collect())
}

fn check_table(t: &Tables, table: &TabularPolicy) -> Result<()> {
    if table.locations != t.space.locations() || table.grid != t.grid {
        return Err(Error::Incompatible(
            "table grid differs from the problem grid".into(),
        ));
    }
    if table.stages() < t.periods {
        return Err(Error::StageOutOfRange {
            stage: t.periods - 1,
            stages: table.stages(),
        });
    }
    for k in 0..t.periods {
        for s in 0..t.space.size() {
            for (i, &u) in table.order_steps(k, s).iter().enumerate() {
                if u as usize > t.cap(t.space.coord(s, i)) {
                    return Err(Error::Incompatible(format!(
                        "stage {k}: order of {} steps at location {i} leaves the grid box from state {:?}",
                        u,
                        t.space.state(&t.grid, s)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A structural fit of one single-location stage, with any grid states left
/// out of the check.
#[derive(Clone, Debug, PartialEq)]
pub struct Extracted<T> {
    pub levels: T,
    /// States excluded from the scan whose orders disagree with the fit.
    pub exceptions: Vec<f64>,
}

fn single_stage(pi: &TabularPolicy, k: usize) -> Result<&[u32]> {
    if pi.locations != 1 {
        return Err(Error::Domain(format!(
            "structure extraction needs a single-location table, got {} locations",
            pi.locations
        )));
    }
    pi.orders
        .get(k)
        .map(Vec::as_slice)
        .ok_or(Error::StageOutOfRange {
            stage: k,
            stages: pi.stages(),
        })
}

/// Base-stock level `S_k` of a single-location stage; the whole grid must
/// equal `max(S - x, 0)` truncated to the action box.
pub fn extract_base_stock(pi: &TabularPolicy, k: usize, max_order: f64) -> Result<f64> {
    let table = single_stage(pi, k)?;
    let max_steps = pi.grid.steps_of(max_order).unwrap_or(usize::MAX);
    let (small, big) = fit_ss(table, &pi.grid, max_steps, 0, table.len(), "base-stock", k)?;
    if small != big {
        let x = pi.grid.point(small);
        return Err(structure_error(
            "base-stock",
            k,
            x,
            format!("orders up to {} only below {}", pi.grid.point(big), x),
        ));
    }
    Ok(pi.grid.point(big))
}

/// `(s_k, S_k)` of a single-location stage: order up to `S` below `s`,
/// nothing at or above `s`, over the whole grid.
pub fn extract_ss(pi: &TabularPolicy, k: usize, max_order: f64) -> Result<(f64, f64)> {
    let table = single_stage(pi, k)?;
    let max_steps = pi.grid.steps_of(max_order).unwrap_or(usize::MAX);
    let (s, big) = fit_ss(table, &pi.grid, max_steps, 0, table.len(), "(s,S)", k)?;
    Ok((pi.grid.point(s), pi.grid.point(big)))
}

/// Boundary margin, in grid points, for the interior scans.
pub fn boundary_margin(p: &Problem) -> usize {
    let max_w = p
        .demand
        .locations
        .iter()
        .map(|d| d.max_value())
        .fold(0.0, f64::max);
    (max_w / p.grid.step - crate::model::GRID_TOL)
        .ceil()
        .max(0.0) as usize
}

/// [`extract_ss`] restricted to states at least `margin` points from either
/// end of the grid; disagreeing boundary states are reported, not rejected.
pub fn extract_ss_interior(
    pi: &TabularPolicy,
    k: usize,
    max_order: f64,
    margin: usize,
) -> Result<Extracted<(f64, f64)>> {
    let table = single_stage(pi, k)?;
    let n = table.len();
    let max_steps = pi.grid.steps_of(max_order).unwrap_or(usize::MAX);
    let (lo, hi) = if 2 * margin < n {
        (margin, n - margin)
    } else {
        (0, n)
    };
    let (mut s, mut big) = fit_ss(table, &pi.grid, max_steps, lo, hi, "(s,S)", k)?;
    if s == lo && big == lo {
        // No order anywhere in the interior: lower the reorder point through
        // any boundary states that also do not order.
        while s > 0 && table[s - 1] == 0 {
            s -= 1;
        }
        big = s;
    }
    let exceptions = (0..n)
        .filter(|&j| table[j] as usize != ss_order(j, s, big, n, max_steps))
        .map(|j| pi.grid.point(j))
        .collect();
    Ok(Extracted {
        levels: (pi.grid.point(s), pi.grid.point(big)),
        exceptions,
    })
}

/// Interior base-stock extraction; see [`extract_ss_interior`].
pub fn extract_base_stock_interior(
    pi: &TabularPolicy,
    k: usize,
    max_order: f64,
    margin: usize,
) -> Result<Extracted<f64>> {
    let e = extract_ss_interior(pi, k, max_order, margin)?;
    let (s, big) = e.levels;
    if s != big {
        return Err(structure_error(
            "base-stock",
            k,
            s,
            format!("orders up to {big} only below {s}"),
        ));
    }
    Ok(Extracted {
        levels: big,
        exceptions: e.exceptions,
    })
}

fn ss_order(j: usize, s: usize, big: usize, n: usize, max_steps: usize) -> usize {
    if j < s {
        (big - j).min(max_steps).min(n - 1 - j)
    } else {
        0
    }
}

fn structure_error(expected: &'static str, stage: usize, state: f64, detail: String) -> Error {
    Error::Structure {
        expected,
        stage,
        state,
        detail,
    }
}

/// Fits `(s, S)` grid indices to `table[lo..hi]`.
fn fit_ss(
    table: &[u32],
    grid: &Grid,
    max_steps: usize,
    lo: usize,
    hi: usize,
    expected: &'static str,
    k: usize,
) -> Result<(usize, usize)> {
    let n = table.len();
    // s: the first state of the trailing run of zero orders.
    let mut s = hi;
    while s > lo && table[s - 1] == 0 {
        s -= 1;
    }
    if s == hi {
        return Err(structure_error(
            expected,
            k,
            grid.point(hi - 1),
            "orders at the top of the scanned range".into(),
        ));
    }
    // S: pinned by untruncated orders, bounded below by truncated ones.
    let mut pinned: Option<usize> = None;
    let mut floor = s;
    for j in lo..s {
        let u = table[j] as usize;
        let cap = max_steps.min(n - 1 - j);
        if u == 0 {
            return Err(structure_error(
                expected,
                k,
                grid.point(j),
                format!("no order below the reorder point {}", grid.point(s)),
            ));
        }
        if u < cap {
            match pinned {
                None => pinned = Some(j + u),
                Some(t) if t != j + u => {
                    return Err(structure_error(
                        expected,
                        k,
                        grid.point(j),
                        format!(
                            "orders up to {} but a lower state orders up to {}",
                            grid.point(j + u),
                            grid.point(t)
                        ),
                    ))
                }
                _ => {}
            }
        }
        floor = floor.max(j + u);
    }
    let big = pinned.unwrap_or(floor);
    if big < s || (s > lo && big < floor) {
        let j = (lo..s).find(|&j| j + table[j] as usize > big).unwrap_or(lo);
        return Err(structure_error(
            expected,
            k,
            grid.point(j),
            format!(
                "order-up-to level {} below the reorder point {}",
                grid.point(big),
                grid.point(s)
            ),
        ));
    }
    for j in lo..hi {
        let want = ss_order(j, s, big, n, max_steps);
        if table[j] as usize != want {
            return Err(structure_error(
                expected,
                k,
                grid.point(j),
                format!(
                    "order {} where the fit gives {}",
                    table[j] as f64 * grid.step,
                    want as f64 * grid.step
                ),
            ));
        }
    }
    Ok((s, big))
}

/// Structural summary of one joint stage.
#[derive(Clone, Debug, PartialEq)]
pub enum StageStructure {
    /// Each location's order depends only on its own state; per-location
    /// `(s, S)` levels.
    Decoupled(Vec<(f64, f64)>),
    Coupled {
        state: Vec<f64>,
    },
}

impl std::fmt::Display for StageStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Decoupled(levels) if levels.iter().all(|(s, b)| s == b) => {
                let ls: Vec<String> = levels.iter().map(|(_, b)| b.to_string()).collect();
                write!(f, "decoupled base-stock S=[{}]", ls.join(","))
            }
            Self::Decoupled(levels) => {
                let ls: Vec<String> = levels.iter().map(|(s, b)| format!("({s},{b})")).collect();
                write!(f, "decoupled (s,S)=[{}]", ls.join(","))
            }
            Self::Coupled { state } => write!(f, "coupled (first coupled state {state:?})"),
        }
    }
}

/// Checks stage `k` for decoupling and fits per-location (s,S) levels.
pub fn analyze_stage(pi: &TabularPolicy, k: usize, max_order: f64) -> Result<StageStructure> {
    if k >= pi.stages() {
        return Err(Error::StageOutOfRange {
            stage: k,
            stages: pi.stages(),
        });
    }
    let space = pi.space();
    let m = pi.locations;
    let mut coords = vec![0; m];
    for s in 0..space.size() {
        space.coords(s, &mut coords);
        for i in 0..m {
            let mut base = vec![0; m];
            base[i] = coords[i];
            if pi.order_steps(k, s)[i] != pi.order_steps(k, space.index(&base))[i] {
                return Ok(StageStructure::Coupled {
                    state: space.state(&pi.grid, s),
                });
            }
        }
    }
    let mut levels = Vec::with_capacity(m);
    for i in 0..m {
        let single = TabularPolicy {
            locations: 1,
            grid: pi.grid,
            tie_break: pi.tie_break.clone(),
            orders: vec![pi.axis(k, i, &vec![0; m])],
        };
        levels.push(extract_ss(&single, 0, max_order)?);
    }
    Ok(StageStructure::Decoupled(levels))
}

/// Optimal expected total cost from `x0` by exhaustive expansion of the
/// scenario tree: every on-grid order vector at every node, every joint
/// demand outcome below it. Exponential in the horizon; meant as an
/// independent check of [`solve_joint_dp`] on tiny problems.
pub fn scenario_tree_value(p: &Problem, x0: &[f64]) -> Result<f64> {
    p.validate(Purpose::DynamicProgramming)?;
    let n = p.horizon.finite_periods()?;
    let m = p.locations;
    let pmfs = (0..m)
        .map(|i| p.demand.pmf(i))
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for pmf in &pmfs {
        outcomes = outcomes
            .iter()
            .flat_map(|(w, q)| {
                pmf.iter().map(move |&(v, r)| {
                    let mut w = w.clone();
                    w.push(v);
                    (w, q * r)
                })
            })
            .collect();
    }
    fn orders(p: &Problem, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for &xi in x {
            let cap = p.max_order_per_location.min(p.grid.max - xi).max(0.0);
            let steps = (cap / p.grid.step + crate::model::GRID_TOL).floor() as usize;
            out = out
                .iter()
                .flat_map(|u| {
                    (0..=steps).map(move |j| {
                        let mut u = u.clone();
                        u.push(j as f64 * p.grid.step);
                        u
                    })
                })
                .collect();
        }
        out
    }
    fn node(p: &Problem, outcomes: &[(Vec<f64>, f64)], k: usize, n: usize, x: &[f64]) -> f64 {
        if k == n {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for u in orders(p, x) {
            let mut total = p.ordering.value(u.iter().sum());
            for (w, q) in outcomes {
                let y: Vec<f64> = (0..x.len()).map(|i| x[i] + u[i] - w[i]).collect();
                let next: Vec<f64> = y.iter().map(|&v| p.grid.clamp(v)).collect();
                total += q * (p.holding.total(&y) + node(p, outcomes, k + 1, n, &next));
            }
            best = best.min(total);
        }
        best
    }
    Ok(node(p, &outcomes, 0, n, x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{self, InstanceId};
    use crate::model::{
        DemandModel, Distribution, HoldingBacklogCost, Horizon, OrderingCost, Rates,
    };

    fn single(
        c: OrderingCost,
        demand: Distribution,
        periods: usize,
        grid: Grid,
        max_order: f64,
    ) -> Problem {
        Problem {
            locations: 1,
            horizon: Horizon::Finite { periods },
            max_order_per_location: max_order,
            grid,
            ordering: c,
            holding: HoldingBacklogCost::replicated(Rates::new(1.0, 10.0), 1),
            demand: DemandModel::iid(vec![demand]),
        }
    }

    fn table(grid: Grid, orders: &[u32]) -> TabularPolicy {
        TabularPolicy {
            locations: 1,
            grid,
            tie_break: TIE_BREAK.into(),
            orders: vec![orders.to_vec()],
        }
    }

    #[test]
    fn one_period_enumeration() {
        let p = single(
            OrderingCost::linear(0.0),
            Distribution::discrete(vec![0.0, 1.0], vec![0.5, 0.5]),
            1,
            Grid::new(0.0, 2.0, 1.0).unwrap(),
            2.0,
        );
        let (v, pi) = solve_joint_dp(&p).unwrap();
        // u=0: 0.5*0 + 0.5*10 = 5; u=1: 0.5*1 = 0.5; u=2: 0.5*2 + 0.5*1 = 1.5
        assert_eq!(v.value(0, &[0.0]).unwrap(), 0.5);
        assert_eq!(pi.act(0, &[0.0]).unwrap(), vec![1.0]);
        assert!(v.stages[1].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn scenario_tree_matches_on_fig1() {
        let p = instances::build(&InstanceId::Fig1Nonlinear).unwrap();
        let (v, _) = solve_joint_dp(&p).unwrap();
        assert!(
            (scenario_tree_value(&p, &[0.0, 0.0]).unwrap() - v.value(0, &[0.0, 0.0]).unwrap())
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn random_table_is_feasible_and_reproducible() {
        let p = instances::build(&InstanceId::Fig1Linear).unwrap();
        let t = TabularPolicy::random(&p, 5).unwrap();
        assert_eq!(t, TabularPolicy::random(&p, 5).unwrap());
        let pol = Policy::Tabular(t);
        assert!(tabulate(&p, &pol).is_ok());
        assert!(evaluate_policy_exact(&p, &pol).is_ok());
    }

    #[test]
    fn fig1_linear_stage0_base_stock() {
        let p = instances::build(&InstanceId::Fig1Linear).unwrap();
        let (_, pi) = solve_joint_dp(&p).unwrap();
        let st = analyze_stage(&pi, 0, p.max_order_per_location).unwrap();
        assert_eq!(st, StageStructure::Decoupled(vec![(1.0, 1.0), (1.0, 1.0)]));
        assert_eq!(st.to_string(), "decoupled base-stock S=[1,1]");
        let single = solve_single_dp(&p.restrict(0).unwrap()).unwrap().1;
        assert_eq!(
            extract_base_stock(&single, 0, p.max_order_per_location).unwrap(),
            1.0
        );
    }

    #[test]
    fn fig1_nonlinear_at_origin() {
        // Hand enumeration: in the last period one unit (7.5) beats none (10)
        // and two (9). In the first, (1,1) gives 8 + 1 + 3.625 = 12.625
        // against 2 + 5.5 + 7.5 = 15 for a single unit.
        let p = instances::build(&InstanceId::Fig1Nonlinear).unwrap();
        let (v, pi) = solve_joint_dp(&p).unwrap();
        let u = pi.act(1, &[0.0, 0.0]).unwrap();
        assert_eq!(u.iter().sum::<f64>(), 1.0);
        assert!(u.contains(&0.0));
        assert!((v.value(1, &[0.0, 0.0]).unwrap() - 7.5).abs() < 1e-12);
        assert_eq!(pi.act(0, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert!((v.value(0, &[0.0, 0.0]).unwrap() - 12.625).abs() < 1e-12);
        let space = v.space();
        for s in 0..space.size() {
            let x = space.state(&p.grid, s);
            let swapped = v.value(0, &[x[1], x[0]]).unwrap();
            assert!((v.at(0, s) - swapped).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_demand_never_orders_from_nonnegative() {
        let p = single(
            OrderingCost::linear(2.0),
            Distribution::constant(0.0),
            3,
            Grid::new(-2.0, 4.0, 1.0).unwrap(),
            4.0,
        );
        let (_, pi) = solve_single_dp(&p).unwrap();
        for k in 0..3 {
            for x in [0.0, 1.0, 2.0, 4.0] {
                assert_eq!(pi.act(k, &[x]).unwrap(), vec![0.0]);
            }
        }
    }

    #[test]
    fn affine_single_location_is_ss() {
        let mut p = instances::build(&InstanceId::SectorSim)
            .unwrap()
            .restrict(0)
            .unwrap();
        p.ordering = OrderingCost::affine(4.0, 2.0);
        let (_, pi) = solve_single_dp(&p).unwrap();
        let margin = boundary_margin(&p);
        for k in 0..pi.stages() {
            let e = extract_ss_interior(&pi, k, p.max_order_per_location, margin).unwrap();
            let (s, big) = e.levels;
            assert!(s <= big, "stage {k}: ({s}, {big})");
        }
    }

    #[test]
    fn extraction_examples() {
        let g = Grid::new(-2.0, 4.0, 1.0).unwrap();
        let bs = table(g, &[3, 2, 1, 0, 0, 0, 0]);
        assert_eq!(extract_base_stock(&bs, 0, 4.0).unwrap(), 1.0);
        assert_eq!(extract_ss(&bs, 0, 4.0).unwrap(), (1.0, 1.0));

        let g2 = Grid::new(0.0, 1.0, 1.0).unwrap();
        let bad = table(g2, &[2, 0]);
        assert!(matches!(
            extract_base_stock(&bad, 0, 4.0),
            Err(Error::Structure { .. })
        ));

        let non_monotone = table(g, &[3, 0, 1, 0, 0, 0, 0]);
        match extract_ss(&non_monotone, 0, 4.0) {
            Err(Error::Structure { state, .. }) => assert_eq!(state, -1.0),
            other => panic!("{other:?}"),
        }
        // (s,S) = (0, 2): order up to 2 below 0
        let ss = table(g, &[4, 3, 0, 0, 0, 0, 0]);
        assert_eq!(extract_ss(&ss, 0, 4.0).unwrap(), (0.0, 2.0));
        assert!(extract_base_stock(&ss, 0, 4.0).is_err());
        // truncated by the max order
        let trunc = table(g, &[2, 2, 1, 0, 0, 0, 0]);
        assert_eq!(extract_base_stock(&trunc, 0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn continuous_demand_unsupported() {
        let p = instances::build(&InstanceId::Tightness(instances::TightnessParams::default()))
            .unwrap();
        assert!(matches!(solve_joint_dp(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn forward_and_backward_evaluation_agree() {
        let p = instances::build(&InstanceId::Fig1Nonlinear).unwrap();
        let (v, pi) = solve_joint_dp(&p).unwrap();
        let fwd = evaluate_table_exact(&p, &pi).unwrap();
        let bwd = evaluate_policy_backward(&p, &pi).unwrap();
        for (s, (a, b)) in fwd.cost.iter().zip(&bwd).enumerate() {
            assert!((a - b).abs() < 1e-12);
            assert!((a - v.at(0, s) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large_is_reported() {
        let g = Grid::new(0.0, 100.0, 1.0).unwrap();
        assert!(matches!(
            StateSpace::new(4, &g),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn csv_columns() {
        let p = instances::build(&InstanceId::Fig1Linear).unwrap();
        let (v, pi) = solve_joint_dp(&p).unwrap();
        assert!(v.to_csv().starts_with("x1,x2,value,stage\n-2,-2,"));
        assert!(pi.to_csv().starts_with("x1,x2,u1,u2,stage\n-2,-2,3,3,0\n"));
    }
}
