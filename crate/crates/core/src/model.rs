//! Problem instances: state grids, demand models, ordering and
//! holding/backlog costs, and their validation.
//!
//! A [`Problem`] is the universal input of every other module. All quantities
//! are in inventory units; costs are per period.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for grid alignment checks.
pub const GRID_TOL: f64 = 1e-9;
/// Tolerance on the normalization of discrete probabilities.
pub const PROB_TOL: f64 = 1e-12;
/// Relative tolerance used to decide that a total order equals a discount
/// point. Orders are sums of a handful of components, so the only drift is a
/// few ulps of rounding.
pub const DISCOUNT_TOL: f64 = 1e-12;

/// Uniform one-dimensional grid `min, min + step, ..., max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let grid = Self { min, max, step };
        let mut out = Vec::new();
        grid.check("grid", &mut out);
        if out.is_empty() {
            Ok(grid)
        } else {
            Err(Error::Invalid(out))
        }
    }

    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }

    /// Point `i`, computed from the index (never by accumulation).
    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count()).map(|i| self.point(i))
    }

    /// Index of `x` if it lies on the grid (within [`GRID_TOL`] steps).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let r = (x - self.min) / self.step;
        let i = r.round();
        if (r - i).abs() > GRID_TOL || i < 0.0 || i as usize >= self.count() {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Number of whole steps in a nonnegative `amount`, if it is a multiple.
    pub fn steps_of(&self, amount: f64) -> Option<usize> {
        is_multiple(amount, self.step)
            .filter(|&n| n >= 0)
            .map(|n| n as usize)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.step > 0.0) || !self.step.is_finite() {
            out.push(Violation::new(
                format!("{path}.step"),
                ViolationKind::GridStep,
                format!("step must be positive, got {}", self.step),
            ));
            return;
        }
        if !(self.min <= self.max) || !self.min.is_finite() || !self.max.is_finite() {
            out.push(Violation::new(
                format!("{path}.min"),
                ViolationKind::GridOrder,
                format!("need min <= max, got [{}, {}]", self.min, self.max),
            ));
            return;
        }
        if is_multiple(self.max - self.min, self.step).is_none() {
            out.push(Violation::new(
                format!("{path}.max"),
                ViolationKind::GridNotIntegral,
                format!(
                    "(max - min) / step = {} is not integral",
                    (self.max - self.min) / self.step
                ),
            ));
        }
    }
}

/// `Some(n)` when `value / unit` is the integer `n` within [`GRID_TOL`].
pub(crate) fn is_multiple(value: f64, unit: f64) -> Option<i64> {
    let r = value / unit;
    let n = r.round();
    ((r - n).abs() <= GRID_TOL && n.is_finite()).then_some(n as i64)
}

/// Per-location, per-period demand distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

impl Distribution {
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Self {
        Self::Discrete { values, probs }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    /// Single atom at `value`.
    pub fn constant(value: f64) -> Self {
        Self::Discrete {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    /// `scale * Bin(n, p)`.
    pub fn scaled_binomial(n: u32, p: f64, scale: f64) -> Self {
        let mut values = Vec::with_capacity(n as usize + 1);
        let mut probs = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            values.push(scale * k as f64);
            probs.push(binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
        }
        Self::Discrete { values, probs }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete { .. })
    }

    /// Atoms sorted by value with duplicates merged.
    pub fn pmf(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            Self::Discrete { values, probs } => {
                let mut atoms: Vec<(f64, f64)> =
                    values.iter().copied().zip(probs.iter().copied()).collect();
                atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
                for (v, p) in atoms {
                    match merged.last_mut() {
                        Some(last) if last.0 == v => last.1 += p,
                        _ => merged.push((v, p)),
                    }
                }
                Ok(merged)
            }
            Self::Uniform { .. } => Err(Error::Unsupported(
                "probability mass function of a continuous demand distribution".into(),
            )),
        }
    }

    /// Discrete atoms for the distribution; uniform demand is replaced by a
    /// `nodes`-point midpoint rule.
    pub fn quadrature(&self, nodes: usize) -> Vec<(f64, f64)> {
        match self {
            Self::Discrete { .. } => self.pmf().expect("discrete"),
            Self::Uniform { lo, hi } => {
                let width = (hi - lo) / nodes as f64;
                let w = 1.0 / nodes as f64;
                (0..nodes)
                    .map(|j| (lo + (j as f64 + 0.5) * width, w))
                    .collect()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Self::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&v, _)| v)
                .fold(f64::INFINITY, f64::min),
            Self::Uniform { lo, .. } => *lo,
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Self::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Uniform { hi, .. } => *hi,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Discrete { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                // Rounding left a sliver above the last cumulative sum.
                values
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, &p)| p > 0.0)
                    .map(|(v, _)| *v)
                    .unwrap_or(0.0)
            }
            Self::Uniform { lo, hi } => {
                let u: f64 = rng.gen();
                lo + (hi - lo) * u
            }
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        match self {
            Self::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    out.push(Violation::new(
                        path.to_string(),
                        ViolationKind::DiscreteShape,
                        format!(
                            "need as many probabilities as values (>0), got {} values and {} probs",
                            values.len(),
                            probs.len()
                        ),
                    ));
                    return;
                }
                for (j, v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        out.push(Violation::new(
                            format!("{path}.values[{j}]"),
                            ViolationKind::UnboundedSupport,
                            format!("demand value {v} is not finite"),
                        ));
                    } else if *v < 0.0 {
                        out.push(Violation::new(
                            format!("{path}.values[{j}]"),
                            ViolationKind::NegativeDemand,
                            format!("demand value {v} is negative"),
                        ));
                    }
                }
                for (j, p) in probs.iter().enumerate() {
                    if !(*p >= 0.0) {
                        out.push(Violation::new(
                            format!("{path}.probs[{j}]"),
                            ViolationKind::NegativeProbability,
                            format!("probability {p} is negative"),
                        ));
                    }
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    out.push(Violation::new(
                        format!("{path}.probs"),
                        ViolationKind::Normalization,
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
            }
            Self::Uniform { lo, hi } => {
                if !hi.is_finite() || !lo.is_finite() {
                    out.push(Violation::new(
                        path.to_string(),
                        ViolationKind::UnboundedSupport,
                        format!("uniform support [{lo}, {hi}] is not bounded"),
                    ));
                } else if !(0.0 <= *lo && lo < hi) {
                    out.push(Violation::new(
                        path.to_string(),
                        ViolationKind::UniformBounds,
                        format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
                    ));
                }
            }
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Demand for all locations; each location draws independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub locations: Vec<Distribution>,
    #[serde(default = "default_true")]
    pub iid: bool,
}

fn default_true() -> bool {
    true
}

impl DemandModel {
    pub fn iid(locations: Vec<Distribution>) -> Self {
        Self {
            locations,
            iid: true,
        }
    }

    pub fn replicated(dist: Distribution, locations: usize) -> Self {
        Self::iid(vec![dist; locations])
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn pmf(&self, location: usize) -> Result<Vec<(f64, f64)>> {
        self.location(location)?.pmf()
    }

    pub fn location(&self, location: usize) -> Result<&Distribution> {
        self.locations.get(location).ok_or_else(|| {
            Error::Domain(format!(
                "location {location} out of range for {} location(s)",
                self.locations.len()
            ))
        })
    }

    pub fn is_discrete(&self) -> bool {
        self.locations.iter().all(Distribution::is_discrete)
    }

    /// Demand vector for period `_period`. Demand is stationary, so the
    /// period only documents the call site.
    pub fn sample<R: Rng + ?Sized>(&self, _period: usize, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.locations.len()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (slot, dist) in out.iter_mut().zip(&self.locations) {
            *slot = dist.sample(rng);
        }
    }
}

/// One affine piece `fixed * 1(z > 0) + slope * z` on `(lower, upper]`.
/// `upper = None` means the piece extends to infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lower: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default)]
    pub fixed: f64,
    pub slope: f64,
}

impl Piece {
    pub fn value(&self, z: f64) -> f64 {
        if z > 0.0 {
            self.fixed + self.slope * z
        } else {
            0.0
        }
    }

    pub fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.lower && z <= self.upper_or_inf()
    }
}

/// A total-order value at which a different per-unit price applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discount {
    pub order: f64,
    pub slope: f64,
}

/// Ordering cost as a function of the total order across all locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingCost {
    pub pieces: Vec<Piece>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discounts: Vec<Discount>,
}

impl OrderingCost {
    pub fn linear(slope: f64) -> Self {
        Self::affine(0.0, slope)
    }

    pub fn affine(fixed: f64, slope: f64) -> Self {
        Self {
            pieces: vec![Piece {
                lower: 0.0,
                upper: None,
                fixed,
                slope,
            }],
            discounts: Vec::new(),
        }
    }

    /// Pieces given as `(upper breakpoint, fixed, slope)`; the last piece is
    /// unbounded and its breakpoint is ignored.
    pub fn piecewise(parts: &[(f64, f64, f64)]) -> Self {
        let mut pieces = Vec::with_capacity(parts.len());
        let mut lower = 0.0;
        for (j, &(upper, fixed, slope)) in parts.iter().enumerate() {
            let last = j + 1 == parts.len();
            pieces.push(Piece {
                lower,
                upper: (!last).then_some(upper),
                fixed,
                slope,
            });
            lower = upper;
        }
        Self {
            pieces,
            discounts: Vec::new(),
        }
    }

    pub fn with_discounts(mut self, discounts: Vec<Discount>) -> Self {
        self.discounts = discounts;
        self
    }

    /// `c(z)`; errors on negative `z`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if z < 0.0 || z.is_nan() {
            return Err(Error::Domain(format!(
                "ordering cost at negative total order {z}"
            )));
        }
        Ok(self.value(z))
    }

    /// `c(z)` for `z >= 0` without the domain check.
    pub fn value(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if let Some(d) = self.discount_at(z) {
            return d.slope * z;
        }
        self.piece_at(z).map_or(0.0, |p| p.value(z))
    }

    pub fn discount_at(&self, z: f64) -> Option<&Discount> {
        self.discounts
            .iter()
            .find(|d| (z - d.order).abs() <= DISCOUNT_TOL * d.order.abs().max(1.0))
    }

    pub fn piece_at(&self, z: f64) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.contains(z))
    }

    /// Fixed charge of the piece adjacent to zero.
    pub fn fixed_at_zero(&self) -> f64 {
        self.pieces.first().map_or(0.0, |p| p.fixed)
    }

    /// New cost with `m * z` removed from every piece and discount.
    pub fn without_linear_term(&self, m: f64) -> Result<Self> {
        if m < 0.0 {
            return Err(Error::InvalidTransformation(format!("negative slope {m}")));
        }
        let mut out = self.clone();
        for (j, p) in out.pieces.iter_mut().enumerate() {
            if p.slope < m {
                return Err(Error::InvalidTransformation(format!(
                    "piece {j} has slope {} < {m}",
                    p.slope
                )));
            }
            p.slope -= m;
        }
        for (j, d) in out.discounts.iter_mut().enumerate() {
            if d.slope < m {
                return Err(Error::InvalidTransformation(format!(
                    "discount {j} has slope {} < {m}",
                    d.slope
                )));
            }
            d.slope -= m;
        }
        Ok(out)
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if self.pieces.is_empty() {
            out.push(Violation::new(
                format!("{path}.pieces"),
                ViolationKind::PiecePartition,
                "at least one piece is required".into(),
            ));
            return;
        }
        let mut expected_lower = 0.0;
        for (j, p) in self.pieces.iter().enumerate() {
            let pp = format!("{path}.pieces[{j}]");
            if !(p.fixed >= 0.0)
                || !(p.slope >= 0.0)
                || !p.fixed.is_finite()
                || !p.slope.is_finite()
            {
                out.push(Violation::new(
                    pp.clone(),
                    ViolationKind::NegativeCost,
                    format!(
                        "need finite fixed >= 0 and slope >= 0, got ({}, {})",
                        p.fixed, p.slope
                    ),
                ));
            }
            if p.lower != expected_lower {
                let kind = if p.lower > expected_lower {
                    ViolationKind::PiecePartition
                } else {
                    ViolationKind::PieceOverlap
                };
                out.push(Violation::new(
                    format!("{pp}.lower"),
                    kind,
                    format!(
                        "piece starts at {} but the previous one ends at {expected_lower}",
                        p.lower
                    ),
                ));
            }
            match p.upper {
                Some(u) => {
                    if !(u > p.lower) {
                        out.push(Violation::new(
                            format!("{pp}.upper"),
                            ViolationKind::PieceOverlap,
                            format!("empty interval ({}, {u}]", p.lower),
                        ));
                    }
                    if j + 1 == self.pieces.len() {
                        out.push(Violation::new(
                            format!("{pp}.upper"),
                            ViolationKind::PiecePartition,
                            "the last piece must be unbounded".into(),
                        ));
                    }
                    expected_lower = u;
                }
                None => {
                    if j + 1 != self.pieces.len() {
                        out.push(Violation::new(
                            format!("{pp}.upper"),
                            ViolationKind::PieceOverlap,
                            "only the last piece may be unbounded".into(),
                        ));
                    }
                }
            }
        }
        for (j, d) in self.discounts.iter().enumerate() {
            let dp = format!("{path}.discounts[{j}]");
            if !(d.order > 0.0) || !d.order.is_finite() {
                out.push(Violation::new(
                    format!("{dp}.order"),
                    ViolationKind::DiscountPoint,
                    format!("discount order {} must be positive", d.order),
                ));
            }
            if !(d.slope >= 0.0) {
                out.push(Violation::new(
                    format!("{dp}.slope"),
                    ViolationKind::NegativeCost,
                    format!("discount slope {} is negative", d.slope),
                ));
            }
            if self.discounts[..j].iter().any(|e| e.order == d.order) {
                out.push(Violation::new(
                    format!("{dp}.order"),
                    ViolationKind::DiscountPoint,
                    format!("duplicate discount order {}", d.order),
                ));
            }
        }
    }
}

/// Holding rate `holding` and backlog rate `backlog` of one location.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub holding: f64,
    pub backlog: f64,
}

impl Rates {
    pub fn new(holding: f64, backlog: f64) -> Self {
        Self { holding, backlog }
    }

    #[inline]
    pub fn cost(&self, x: f64) -> f64 {
        self.holding * x.max(0.0) + self.backlog * (-x).max(0.0)
    }
}

/// Separable two-sided piecewise-linear holding/backlog cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldingBacklogCost {
    pub locations: Vec<Rates>,
}

impl HoldingBacklogCost {
    pub fn replicated(rates: Rates, locations: usize) -> Self {
        Self {
            locations: vec![rates; locations],
        }
    }

    pub fn eval(&self, location: usize, x: f64) -> Result<f64> {
        Ok(self.rates(location)?.cost(x))
    }

    pub fn rates(&self, location: usize) -> Result<&Rates> {
        self.locations.get(location).ok_or_else(|| {
            Error::Domain(format!(
                "location {location} out of range for {} location(s)",
                self.locations.len()
            ))
        })
    }

    pub fn total(&self, x: &[f64]) -> f64 {
        self.locations
            .iter()
            .zip(x)
            .map(|(r, &xi)| r.cost(xi))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    Finite {
        periods: usize,
    },
    /// Long simulation standing in for the infinite-horizon average; the
    /// first `burn_in` periods are excluded from the average.
    InfiniteAveraged {
        sim_periods: usize,
        #[serde(default)]
        burn_in: usize,
    },
}

impl Horizon {
    /// Number of periods actually simulated.
    pub fn periods(&self) -> usize {
        match *self {
            Self::Finite { periods } => periods,
            Self::InfiniteAveraged { sim_periods, .. } => sim_periods,
        }
    }

    /// First period whose cost enters the average.
    pub fn burn_in(&self) -> usize {
        match *self {
            Self::Finite { .. } => 0,
            Self::InfiniteAveraged { burn_in, .. } => burn_in,
        }
    }

    pub fn averaged_periods(&self) -> usize {
        self.periods() - self.burn_in()
    }

    pub fn finite_periods(&self) -> Result<usize> {
        match *self {
            Self::Finite { periods } => Ok(periods),
            Self::InfiniteAveraged { .. } => Err(Error::Unsupported(
                "dynamic programming needs a finite horizon".into(),
            )),
        }
    }
}

/// A complete multi-location inventory problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub locations: usize,
    pub horizon: Horizon,
    pub max_order_per_location: f64,
    pub grid: Grid,
    pub ordering: OrderingCost,
    pub holding: HoldingBacklogCost,
    pub demand: DemandModel,
}

/// What the problem is going to be used for; DP imposes extra constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Simulation,
    DynamicProgramming,
}

impl Problem {
    /// Single-location problem for `location` with its own holding and demand.
    pub fn restrict(&self, location: usize) -> Result<Problem> {
        Ok(Problem {
            locations: 1,
            horizon: self.horizon,
            max_order_per_location: self.max_order_per_location,
            grid: self.grid,
            ordering: self.ordering.clone(),
            holding: HoldingBacklogCost {
                locations: vec![*self.holding.rates(location)?],
            },
            demand: DemandModel {
                locations: vec![self.demand.location(location)?.clone()],
                iid: self.demand.iid,
            },
        })
    }

    pub fn with_ordering(&self, ordering: OrderingCost) -> Problem {
        Problem {
            ordering,
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: Horizon) -> Problem {
        Problem {
            horizon,
            ..self.clone()
        }
    }

    pub fn validate(&self, purpose: Purpose) -> Result<()> {
        validate_problem(self, purpose).map_err(Error::Invalid)
    }

    /// Mean total demand per period, summed over locations.
    pub fn mean_total_demand(&self) -> f64 {
        self.demand.locations.iter().map(Distribution::mean).sum()
    }
}

/// Every invariant violation of `p`, each with the path of the offending field.
pub fn validate_problem(p: &Problem, purpose: Purpose) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if p.locations == 0 {
        out.push(Violation::new(
            "locations".into(),
            ViolationKind::LocationCount,
            "at least one location is required".into(),
        ));
    }
    if p.horizon.periods() == 0 || p.horizon.burn_in() >= p.horizon.periods() {
        out.push(Violation::new(
            "horizon".into(),
            ViolationKind::Horizon,
            format!("need at least one averaged period, got {:?}", p.horizon),
        ));
    }
    p.grid.check("grid", &mut out);
    p.ordering.check("ordering", &mut out);
    if p.holding.locations.len() != p.locations {
        out.push(Violation::new(
            "holding.locations".into(),
            ViolationKind::LocationCount,
            format!(
                "{} holding entries for {} locations",
                p.holding.locations.len(),
                p.locations
            ),
        ));
    }
    for (i, r) in p.holding.locations.iter().enumerate() {
        let path = format!("holding.locations[{i}]");
        if !(r.holding >= 0.0) || !(r.backlog >= 0.0) {
            out.push(Violation::new(
                path,
                ViolationKind::NegativeRate,
                format!(
                    "rates must be nonnegative, got ({}, {})",
                    r.holding, r.backlog
                ),
            ));
        } else if r.holding == 0.0 && r.backlog == 0.0 {
            out.push(Violation::new(
                path,
                ViolationKind::NotRadiallyUnbounded,
                "at least one of holding, backlog must be positive".into(),
            ));
        }
    }
    if p.demand.locations.len() != p.locations {
        out.push(Violation::new(
            "demand.locations".into(),
            ViolationKind::LocationCount,
            format!(
                "{} demand entries for {} locations",
                p.demand.locations.len(),
                p.locations
            ),
        ));
    }
    for (i, d) in p.demand.locations.iter().enumerate() {
        d.check(&format!("demand.locations[{i}]"), &mut out);
    }
    if p.grid.step > 0.0 {
        if !(p.max_order_per_location >= 0.0) || p.grid.steps_of(p.max_order_per_location).is_none()
        {
            out.push(Violation::new(
                "max_order_per_location".into(),
                ViolationKind::MaxOrder,
                format!(
                    "{} is not a nonnegative multiple of the grid step {}",
                    p.max_order_per_location, p.grid.step
                ),
            ));
        }
        if purpose == Purpose::DynamicProgramming {
            if let Horizon::InfiniteAveraged { .. } = p.horizon {
                out.push(Violation::new(
                    "horizon".into(),
                    ViolationKind::Horizon,
                    "dynamic programming needs a finite horizon".into(),
                ));
            }
            for (i, d) in p.demand.locations.iter().enumerate() {
                match d {
                    Distribution::Uniform { .. } => out.push(Violation::new(
                        format!("demand.locations[{i}]"),
                        ViolationKind::ContinuousDemand,
                        "continuous demand is simulation-only".into(),
                    )),
                    Distribution::Discrete { values, .. } => {
                        for (j, v) in values.iter().enumerate() {
                            if v.is_finite() && p.grid.steps_of(*v).is_none() {
                                out.push(Violation::new(
                                    format!("demand.locations[{i}].values[{j}]"),
                                    ViolationKind::OffGridDemand,
                                    format!(
                                        "demand {v} is not a multiple of the grid step {}",
                                        p.grid.step
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    GridStep,
    GridOrder,
    GridNotIntegral,
    DiscreteShape,
    NegativeDemand,
    NegativeProbability,
    Normalization,
    UniformBounds,
    UnboundedSupport,
    PiecePartition,
    PieceOverlap,
    NegativeCost,
    DiscountPoint,
    NegativeRate,
    NotRadiallyUnbounded,
    LocationCount,
    Horizon,
    MaxOrder,
    ContinuousDemand,
    OffGridDemand,
}

/// One invariant violation, located by a dotted field path.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub path: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(path: String, kind: ViolationKind, detail: String) -> Self {
        Self { path, kind, detail }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.path, self.kind, self.detail)
    }
}
