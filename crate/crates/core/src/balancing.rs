//! Randomized cost-balancing online policy.
//!
//! Each location is controlled independently. At stage `k` the order balances
//! a holding-cost proxy over the remaining horizon against the next-period
//! backlog cost, with a randomized rule when a fixed charge `K` is present.

use std::convert::TryFrom;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, Problem, Rates};
use crate::policies::ActionBox;

pub const BISECTION_TOL: f64 = 1e-9;
pub const BISECTION_MAX_ITER: usize = 200;
/// Midpoint-rule nodes replacing a continuous demand distribution.
pub const QUADRATURE_NODES: usize = 1024;

/// Which demand enters the holding proxy for the `n`-th remaining period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldingProxy {
    /// That period's own demand `w_n`.
    #[default]
    Printed,
    /// Cumulative demand from the current period through period `n`.
    Cumulative,
}

impl std::str::FromStr for HoldingProxy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "cumulative" => Ok(Self::Cumulative),
            other => Err(Error::Config(format!(
                "unknown balancing variant {other:?} (expected printed or cumulative)"
            ))),
        }
    }
}

impl std::fmt::Display for HoldingProxy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Printed => "printed",
            Self::Cumulative => "cumulative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationParams {
    pub rates: Rates,
    pub demand: Distribution,
}

/// Serialized form of a [`BalancingPolicy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancingParams {
    /// Fixed charge `K`; zero gives the deterministic linear-cost rule.
    pub fixed: f64,
    /// Horizon length `N`.
    pub periods: usize,
    #[serde(default)]
    pub variant: HoldingProxy,
    pub locations: Vec<LocationParams>,
}

/// Sorted atoms with prefix sums of `q` and `q * w`.
#[derive(Clone, Debug, PartialEq)]
struct AtomTable {
    values: Vec<f64>,
    cum_p: Vec<f64>,
    cum_pw: Vec<f64>,
}

impl AtomTable {
    fn new(atoms: &[(f64, f64)]) -> Self {
        let mut values = Vec::with_capacity(atoms.len());
        let mut cum_p = vec![0.0];
        let mut cum_pw = vec![0.0];
        for &(w, q) in atoms {
            values.push(w);
            cum_p.push(cum_p.last().unwrap() + q);
            cum_pw.push(cum_pw.last().unwrap() + q * w);
        }
        Self {
            values,
            cum_p,
            cum_pw,
        }
    }

    /// Number of atoms with value `<= t`.
    fn count_le(&self, t: f64) -> usize {
        self.values.partition_point(|&w| w <= t)
    }

    fn count_lt(&self, t: f64) -> usize {
        self.values.partition_point(|&w| w < t)
    }

    /// `E max(0, u - max(0, w - x))` for `u >= 0`.
    fn holding_term(&self, x: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let i1 = self.count_le(x);
        let i2 = self.count_lt(x + u).max(i1);
        let (p1, p2) = (self.cum_p[i1], self.cum_p[i2]);
        let inner = (u + x) * (p2 - p1) - (self.cum_pw[i2] - self.cum_pw[i1]);
        (u * p1 + inner).max(0.0)
    }

    /// `E max(0, w - c)`.
    fn excess(&self, c: f64) -> f64 {
        let i = self.count_le(c);
        let n = self.values.len();
        let tail_p = self.cum_p[n] - self.cum_p[i];
        let tail_pw = self.cum_pw[n] - self.cum_pw[i];
        (tail_pw - c * tail_p).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct LocationState {
    rates: Rates,
    /// One-period demand.
    one: AtomTable,
    /// `cumulative[j]`: the atoms of the demand summed over `1, ..., j + 1`
    /// periods pooled into one table, so its weights add up to `j + 1` and a
    /// single lookup gives the sum of the per-horizon expectations.
    cumulative: Vec<AtomTable>,
}

/// Outcome of one balancing decision, for traces and tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub theta: f64,
    pub u_hat: f64,
    pub u_tilde: Option<f64>,
    pub p: Option<f64>,
    pub saturated: bool,
    pub order: f64,
}

/// Per-location balancing state; the multi-location policy applies each
/// location's rule independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BalancingParams", into = "BalancingParams")]
pub struct BalancingPolicy {
    params: BalancingParams,
    states: Vec<LocationState>,
}

impl TryFrom<BalancingParams> for BalancingPolicy {
    type Error = Error;

    fn try_from(params: BalancingParams) -> Result<Self> {
        if !(params.fixed >= 0.0) {
            return Err(Error::Domain(format!(
                "negative fixed charge {}",
                params.fixed
            )));
        }
        if params.periods == 0 {
            return Err(Error::Domain("balancing needs at least one period".into()));
        }
        let mut states = Vec::with_capacity(params.locations.len());
        for loc in &params.locations {
            if !(loc.rates.holding >= 0.0 && loc.rates.backlog >= 0.0) {
                return Err(Error::Domain("negative holding or backlog rate".into()));
            }
            let one = loc.demand.quadrature(QUADRATURE_NODES);
            let cumulative = match params.variant {
                HoldingProxy::Printed => Vec::new(),
                HoldingProxy::Cumulative => {
                    let pmf = loc.demand.pmf().map_err(|_| {
                        Error::Unsupported(
                            "the cumulative holding proxy needs discrete demand".into(),
                        )
                    })?;
                    let mut out = Vec::with_capacity(params.periods);
                    let mut cur = pmf.clone();
                    let mut pooled: Vec<(f64, f64)> = Vec::new();
                    for _ in 0..params.periods {
                        pooled.extend_from_slice(&cur);
                        pooled = merge(pooled);
                        out.push(AtomTable::new(&pooled));
                        cur = convolve(&cur, &pmf);
                    }
                    out
                }
            };
            states.push(LocationState {
                rates: loc.rates,
                one: AtomTable::new(&one),
                cumulative,
            });
        }
        Ok(Self { params, states })
    }
}

impl From<BalancingPolicy> for BalancingParams {
    fn from(b: BalancingPolicy) -> Self {
        b.params
    }
}

/// Distribution of the sum of two independent discrete variables.
fn convolve(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(a.len() * b.len());
    for &(x, p) in a {
        for &(y, q) in b {
            out.push((x + y, p * q));
        }
    }
    merge(out)
}

/// Sorts atoms and merges values equal up to rounding.
fn merge(mut out: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    out.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (v, p) in out {
        match merged.last_mut() {
            // Sums of grid-valued demands may differ by rounding only.
            Some(last) if (last.0 - v).abs() <= 1e-9 * v.abs().max(1.0) => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    merged
}

impl BalancingPolicy {
    pub fn new(p: &Problem, fixed: f64, variant: HoldingProxy) -> Result<Self> {
        let locations = (0..p.locations)
            .map(|i| {
                Ok(LocationParams {
                    rates: *p.holding.rates(i)?,
                    demand: p.demand.location(i)?.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::try_from(BalancingParams {
            fixed,
            periods: p.horizon.periods(),
            variant,
            locations,
        })
    }

    pub fn params(&self) -> &BalancingParams {
        &self.params
    }

    pub fn fixed(&self) -> f64 {
        self.params.fixed
    }

    pub fn locations(&self) -> usize {
        self.states.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.params.fixed == 0.0
    }

    fn state(&self, i: usize) -> Result<&LocationState> {
        self.states.get(i).ok_or_else(|| {
            Error::Domain(format!(
                "location {i} out of range for {} location(s)",
                self.states.len()
            ))
        })
    }

    fn remaining(&self, k: usize) -> Result<usize> {
        if k >= self.params.periods {
            return Err(Error::StageOutOfRange {
                stage: k,
                stages: self.params.periods,
            });
        }
        Ok(self.params.periods - k)
    }

    /// Expected holding proxy of ordering `u` at stage `k` from inventory `x`:
    /// `a` times the expected excess of `u` over the unmet demand of each
    /// remaining period.
    pub fn expected_holding_proxy(&self, i: usize, k: usize, x: f64, u: f64) -> Result<f64> {
        let st = self.state(i)?;
        let r = self.remaining(k)?;
        Ok(self.holding_with(st, r, x, u))
    }

    fn holding_with(&self, st: &LocationState, r: usize, x: f64, u: f64) -> f64 {
        let a = st.rates.holding;
        if u <= 0.0 || a == 0.0 {
            return 0.0;
        }
        match self.params.variant {
            HoldingProxy::Printed => a * r as f64 * st.one.holding_term(x, u),
            HoldingProxy::Cumulative => a * st.cumulative[r - 1].holding_term(x, u),
        }
    }

    /// `b E max(0, w - max(0, x + u))`.
    pub fn expected_backlog_proxy(&self, i: usize, x: f64, u: f64) -> Result<f64> {
        let st = self.state(i)?;
        Ok(backlog_with(st, x, u))
    }

    /// Balancing order `u_hat` and balanced cost `theta` on `[0, u_max]`.
    pub fn balancing_order(
        &self,
        i: usize,
        k: usize,
        x: f64,
        u_max: f64,
    ) -> Result<(f64, f64, bool)> {
        let st = self.state(i)?;
        let r = self.remaining(k)?;
        Ok(self.balance(st, r, x, u_max))
    }

    fn balance(&self, st: &LocationState, r: usize, x: f64, u_max: f64) -> (f64, f64, bool) {
        let b0 = backlog_with(st, x, 0.0);
        if b0 <= 0.0 {
            return (0.0, 0.0, false);
        }
        let f = |u: f64| self.holding_with(st, r, x, u) - backlog_with(st, x, u);
        if f(u_max) <= 0.0 {
            let h = self.holding_with(st, r, x, u_max);
            let b = backlog_with(st, x, u_max);
            return (u_max, h.max(b), true);
        }
        let u = bisect(f, 0.0, u_max);
        let h = self.holding_with(st, r, x, u);
        let b = backlog_with(st, x, u);
        (u, 0.5 * (h + b), false)
    }

    /// Order `u_tilde` whose expected holding proxy equals `K`; saturates at
    /// `u_max` with the flag set.
    pub fn holding_cost_k_order(
        &self,
        i: usize,
        k: usize,
        x: f64,
        u_max: f64,
    ) -> Result<(f64, bool)> {
        let fixed = self.params.fixed;
        if fixed <= 0.0 {
            return Err(Error::Domain("the holding-cost-K order needs K > 0".into()));
        }
        let st = self.state(i)?;
        let r = self.remaining(k)?;
        Ok(self.k_order(st, r, x, u_max))
    }

    fn k_order(&self, st: &LocationState, r: usize, x: f64, u_max: f64) -> (f64, bool) {
        let fixed = self.params.fixed;
        let f = |u: f64| self.holding_with(st, r, x, u) - fixed;
        if f(u_max) < 0.0 {
            (u_max, true)
        } else {
            (bisect(f, 0.0, u_max), false)
        }
    }

    /// Probability `p` solving `p K = p E B(u_tilde) + (1 - p) E B(0)`.
    pub fn balancing_probability(&self, i: usize, x: f64, u_tilde: f64) -> Result<f64> {
        let st = self.state(i)?;
        Ok(self.probability(st, x, u_tilde))
    }

    fn probability(&self, st: &LocationState, x: f64, u_tilde: f64) -> f64 {
        let b0 = backlog_with(st, x, 0.0);
        if b0 <= 0.0 {
            return 0.0;
        }
        let denom = self.params.fixed - backlog_with(st, x, u_tilde) + b0;
        if denom <= 0.0 {
            log::debug!("degenerate balancing probability at x = {x}: denominator {denom}");
            return 1.0;
        }
        (b0 / denom).clamp(0.0, 1.0)
    }

    /// Applies the three-case ordering rule for location `i`.
    pub fn decide<R: RngCore + ?Sized>(
        &self,
        i: usize,
        k: usize,
        x: f64,
        bx: &ActionBox,
        rng: &mut R,
    ) -> Result<Decision> {
        let st = self.state(i)?;
        let r = self.remaining(k)?;
        let u_max = bx.cap(x);
        let (u_hat, theta, sat_hat) = self.balance(st, r, x, u_max);
        let fixed = self.params.fixed;
        if theta >= fixed {
            return Ok(Decision {
                theta,
                u_hat,
                u_tilde: None,
                p: None,
                saturated: sat_hat,
                order: u_hat,
            });
        }
        let (u_tilde, sat) = self.k_order(st, r, x, u_max);
        let p = self.probability(st, x, u_tilde);
        let draw: f64 = rng.gen();
        Ok(Decision {
            theta,
            u_hat,
            u_tilde: Some(u_tilde),
            p: Some(p),
            saturated: sat,
            order: if draw < p { u_tilde } else { 0.0 },
        })
    }
}

fn backlog_with(st: &LocationState, x: f64, u: f64) -> f64 {
    let b = st.rates.backlog;
    if b == 0.0 {
        return 0.0;
    }
    b * st.one.excess((x + u).max(0.0))
}

/// Root of a nondecreasing `f` on `[lo, hi]` with `f(lo) < 0 <= f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() <= BISECTION_TOL && hi - lo <= 1e-12 * hi.abs().max(1.0) {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
