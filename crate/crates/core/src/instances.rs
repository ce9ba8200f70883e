//! Built-in problem instances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    DemandModel, Discount, Distribution, Grid, HoldingBacklogCost, Horizon, OrderingCost, Problem,
    Rates,
};
use crate::rng;

/// Parameters of the base-stock tightness instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessParams {
    pub locations: usize,
    pub epsilon: f64,
    pub l: f64,
    pub h: f64,
    /// Backlog rate; must dominate `h`.
    pub p: f64,
}

impl Default for TightnessParams {
    fn default() -> Self {
        Self {
            locations: 2,
            epsilon: 0.1,
            l: 1.0,
            h: 4.0,
            p: 100.0,
        }
    }
}

impl TightnessParams {
    pub fn delta(&self) -> f64 {
        self.epsilon / (self.l + 2.0)
    }

    /// The two discounted order totals `M` and `M(1 + delta)`.
    pub fn discount_orders(&self) -> Vec<f64> {
        let m = self.locations as f64;
        vec![m, m * (1.0 + self.delta())]
    }

    /// Limit ratio `h / (l + epsilon)` between base-stock and explicit costs.
    pub fn limit_ratio(&self) -> f64 {
        self.h / (self.l + self.epsilon)
    }

    /// Base-stock level used against the explicit policy.
    pub fn auto_level(&self) -> f64 {
        1.0 + self.delta()
    }

    pub fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.locations == 0 {
            bad.push("M >= 1".to_string());
        }
        if !(self.epsilon > 0.0) {
            bad.push(format!("epsilon > 0 (got {})", self.epsilon));
        }
        if !(self.l > 0.0 && self.h >= self.l) {
            bad.push(format!("h >= l > 0 (got l = {}, h = {})", self.l, self.h));
        }
        if !(self.p >= 10.0 * self.h) {
            bad.push(format!("p >= 10 h (got p = {}, h = {})", self.p, self.h));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "tightness parameters need {}",
                bad.join(", ")
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InstanceId {
    Fig1Linear,
    Fig1Nonlinear,
    SectorSim,
    AffineSim,
    Tightness(TightnessParams),
    TransformCheck,
}

impl InstanceId {
    pub const NAMES: [&'static str; 6] = [
        "fig1_linear",
        "fig1_nonlinear",
        "sector_sim",
        "affine_sim",
        "tightness",
        "transform_check",
    ];
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fig1Linear => f.write_str("fig1_linear"),
            Self::Fig1Nonlinear => f.write_str("fig1_nonlinear"),
            Self::SectorSim => f.write_str("sector_sim"),
            Self::AffineSim => f.write_str("affine_sim"),
            Self::TransformCheck => f.write_str("transform_check"),
            Self::Tightness(t) => write!(
                f,
                "tightness:M={},eps={},l={},h={},p={}",
                t.locations, t.epsilon, t.l, t.h, t.p
            ),
        }
    }
}

/// Parses `name` or `tightness[:key=value,...]` with keys `M, eps, l, h, p`.
impl FromStr for InstanceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let id = match name {
            "fig1_linear" => Self::Fig1Linear,
            "fig1_nonlinear" => Self::Fig1Nonlinear,
            "sector_sim" => Self::SectorSim,
            "affine_sim" => Self::AffineSim,
            "transform_check" => Self::TransformCheck,
            "tightness" => {
                let mut t = TightnessParams::default();
                for kv in args.split(',').filter(|a| !a.is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
                    let num: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("{k}: not a number: {v:?}")))?;
                    match k {
                        "M" | "m" | "locations" => {
                            if num < 1.0 || num.fract() != 0.0 {
                                return Err(Error::Config(format!(
                                    "M must be a positive integer, got {v}"
                                )));
                            }
                            t.locations = num as usize;
                        }
                        "eps" | "epsilon" => t.epsilon = num,
                        "l" => t.l = num,
                        "h" => t.h = num,
                        "p" => t.p = num,
                        other => {
                            return Err(Error::Config(format!(
                                "unknown tightness parameter {other:?}"
                            )))
                        }
                    }
                }
                t.check()?;
                return Ok(Self::Tightness(t));
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown instance {other:?}; known: {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        if !args.is_empty() {
            return Err(Error::Config(format!(
                "instance {name} takes no parameters"
            )));
        }
        Ok(id)
    }
}

fn fig1(ordering: OrderingCost) -> Problem {
    Problem {
        locations: 2,
        horizon: Horizon::Finite { periods: 2 },
        max_order_per_location: 4.0,
        grid: Grid {
            min: -2.0,
            max: 4.0,
            step: 1.0,
        },
        ordering,
        holding: HoldingBacklogCost::replicated(Rates::new(1.0, 10.0), 2),
        demand: DemandModel::replicated(Distribution::discrete(vec![0.0, 1.0], vec![0.5, 0.5]), 2),
    }
}

fn fig2(ordering: OrderingCost, holding: f64) -> Problem {
    Problem {
        locations: 2,
        horizon: Horizon::Finite { periods: 20 },
        max_order_per_location: 10.0,
        grid: Grid {
            min: -2.0,
            max: 8.0,
            step: 0.5,
        },
        ordering,
        holding: HoldingBacklogCost::replicated(Rates::new(holding, 10.0), 2),
        demand: DemandModel::replicated(Distribution::scaled_binomial(3, 0.5, 0.5), 2),
    }
}

/// `2z` below one unit, `4z` above.
pub fn fig1_nonlinear_cost() -> OrderingCost {
    OrderingCost::piecewise(&[(1.0, 0.0, 2.0), (f64::INFINITY, 0.0, 4.0)])
}

/// `4z` up to 6, `2z + 12` beyond.
pub fn sector_cost() -> OrderingCost {
    OrderingCost::piecewise(&[(6.0, 0.0, 4.0), (f64::INFINITY, 12.0, 2.0)])
}

/// `4 + 2z` up to 6, `10 + z` beyond.
pub fn affine_cost() -> OrderingCost {
    OrderingCost::piecewise(&[(6.0, 4.0, 2.0), (f64::INFINITY, 10.0, 1.0)])
}

pub fn build(id: &InstanceId) -> Result<Problem> {
    Ok(match id {
        InstanceId::Fig1Linear | InstanceId::TransformCheck => fig1(OrderingCost::linear(2.0)),
        InstanceId::Fig1Nonlinear => fig1(fig1_nonlinear_cost()),
        InstanceId::SectorSim => fig2(sector_cost(), 0.1),
        InstanceId::AffineSim => fig2(affine_cost(), 0.2),
        InstanceId::Tightness(t) => {
            t.check()?;
            let delta = t.delta();
            let ordering = OrderingCost::linear(t.h).with_discounts(
                t.discount_orders()
                    .into_iter()
                    .map(|order| Discount { order, slope: t.l })
                    .collect(),
            );
            Problem {
                locations: t.locations,
                horizon: Horizon::InfiniteAveraged {
                    sim_periods: 2000,
                    burn_in: 0,
                },
                max_order_per_location: 4.0,
                grid: Grid {
                    min: -2.0,
                    max: 6.0,
                    step: 0.5,
                },
                ordering,
                holding: HoldingBacklogCost::replicated(Rates::new(delta, t.p), t.locations),
                demand: DemandModel::replicated(
                    Distribution::uniform(1.0, 1.0 + delta),
                    t.locations,
                ),
            }
        }
    })
}

/// A small random problem for the oracle suites: one or two locations, at
/// most two periods and six grid points, discrete on-grid demand and a
/// lower semicontinuous piecewise-affine ordering cost.
pub fn random_small(seed: u64) -> Problem {
    let mut rng = rng::derive_stream(seed, &[rng::kind::TEST, rng::tag("random_small")]);
    let locations = rng.gen_range(1..=2);
    let step = if rng.gen_bool(0.5) { 1.0 } else { 0.5 };
    let points = rng.gen_range(3..=6);
    let min = -step * rng.gen_range(0..=2) as f64;
    let grid = Grid {
        min,
        max: min + step * (points - 1) as f64,
        step,
    };
    let demand = (0..locations)
        .map(|_| {
            let support = rng.gen_range(2..=3);
            let values: Vec<f64> = (0..support).map(|j| step * j as f64).collect();
            let raw: Vec<f64> = (0..support).map(|_| rng.gen_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            Distribution::discrete(values, raw.iter().map(|r| r / sum).collect())
        })
        .collect();
    let holding = (0..locations)
        .map(|_| Rates::new(rng.gen_range(0.0..2.0), rng.gen_range(1.0..10.0)))
        .collect();
    let mut parts = Vec::new();
    let (mut at, mut fixed, mut slope) = (0.0, rng.gen_range(0.0..2.0), rng.gen_range(0.5..4.0));
    for _ in 0..rng.gen_range(1..=3) {
        let upper = at + step * rng.gen_range(1..=3) as f64;
        parts.push((upper, fixed, slope));
        let next = rng.gen_range(0.5..4.0);
        // Keep the right limit at the breakpoint no lower than the value.
        fixed = (fixed + (slope - next) * upper + rng.gen_range(0.0..1.0)).max(0.0);
        slope = next;
        at = upper;
    }
    parts.push((f64::INFINITY, fixed, slope));
    Problem {
        locations,
        horizon: Horizon::Finite {
            periods: rng.gen_range(1..=2),
        },
        max_order_per_location: step * rng.gen_range(1..=3) as f64,
        grid,
        ordering: OrderingCost::piecewise(&parts),
        holding: HoldingBacklogCost { locations: holding },
        demand: DemandModel::iid(demand),
    }
}
