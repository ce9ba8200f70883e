//! Policy representations, constructors for the named policies, and a
//! uniform action interface.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::balancing::BalancingPolicy;
use crate::dp::{self, TabularPolicy};
use crate::error::{Error, Result};
use crate::instances::TightnessParams;
use crate::model::{Grid, OrderingCost, Problem};

/// Feasible orders at a state: `0 <= u^i <= min(max_order, grid.max - x^i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionBox {
    pub grid: Grid,
    pub max_order: f64,
}

impl ActionBox {
    pub fn of(p: &Problem) -> Self {
        Self {
            grid: p.grid,
            max_order: p.max_order_per_location,
        }
    }

    #[inline]
    pub fn cap(&self, x: f64) -> f64 {
        self.max_order.min(self.grid.max - x).max(0.0)
    }

    #[inline]
    fn truncate(&self, x: f64, u: f64) -> f64 {
        let cap = self.cap(x);
        if u > cap {
            log::trace!("order {u} at x = {x} truncated to {cap}");
            cap
        } else {
            u.max(0.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Tabular(TabularPolicy),
    /// `levels[k][i]`; a stationary policy uses `levels[0]` at every stage.
    BaseStock {
        levels: Vec<Vec<f64>>,
        #[serde(default)]
        stationary: bool,
    },
    /// `levels[k][i] = (s, S)`.
    #[serde(rename = "ss")]
    SS {
        levels: Vec<Vec<(f64, f64)>>,
        #[serde(default)]
        stationary: bool,
    },
    Decoupled {
        components: Vec<Policy>,
    },
    Balancing(BalancingPolicy),
    ExplicitV(PiV),
}

/// Order up to a common level once the total falls below `M(1 + delta)`,
/// using only order totals from `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiV {
    pub locations: usize,
    pub delta: f64,
    /// Allowed order totals, ascending.
    pub values: Vec<f64>,
}

impl PiV {
    pub fn threshold(&self) -> f64 {
        self.locations as f64 * (1.0 + self.delta)
    }

    fn act_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.locations {
            return Err(Error::Incompatible(format!(
                "explicit policy for {} locations applied to a {}-location state",
                self.locations,
                x.len()
            )));
        }
        let total: f64 = x.iter().sum();
        let threshold = self.threshold();
        out.iter_mut().for_each(|u| *u = 0.0);
        if total >= threshold - 1e-12 * threshold {
            return Ok(());
        }
        let v = self
            .values
            .iter()
            .copied()
            .find(|&v| v + total >= threshold - 1e-12 * threshold)
            .or_else(|| self.values.last().copied())
            .unwrap_or(0.0);
        waterfill(x, v, out);
        Ok(())
    }
}

/// Raises the lowest levels of `x` to a common value using exactly `v`.
pub fn waterfill(x: &[f64], v: f64, out: &mut [f64]) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    // Find how many of the lowest levels get raised.
    let mut level = x[order[0]];
    let mut used = 0.0;
    let mut count = 1;
    while count < order.len() {
        let next = x[order[count]];
        let need = (next - level) * count as f64;
        if used + need >= v {
            break;
        }
        used += need;
        level = next;
        count += 1;
    }
    level += (v - used) / count as f64;
    out.iter_mut().for_each(|u| *u = 0.0);
    let mut assigned = 0.0;
    for &i in &order[..count - 1] {
        out[i] = (level - x[i]).max(0.0);
        assigned += out[i];
    }
    // The last raised location absorbs rounding so the total is exactly `v`.
    out[order[count - 1]] = (v - assigned).max(0.0);
}

impl Policy {
    /// Whether `act` ignores the random stream.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Self::Balancing(b) => b.is_deterministic(),
            Self::Decoupled { components } => components.iter().all(Self::is_deterministic),
            _ => true,
        }
    }

    /// Number of locations the policy acts on, when fixed by the policy.
    pub fn locations(&self) -> Option<usize> {
        match self {
            Self::Tabular(t) => Some(t.locations),
            Self::BaseStock { levels, .. } => levels.first().map(Vec::len),
            Self::SS { levels, .. } => levels.first().map(Vec::len),
            Self::Decoupled { components } => Some(components.len()),
            Self::Balancing(b) => Some(b.locations()),
            Self::ExplicitV(v) => Some(v.locations),
        }
    }

    /// Checks that the policy can act on every state of `p`.
    pub fn check_compatible(&self, p: &Problem) -> Result<()> {
        match self {
            Self::Decoupled { components } => {
                if components.len() != p.locations {
                    return Err(Error::Incompatible(format!(
                        "{} components for {} locations",
                        components.len(),
                        p.locations
                    )));
                }
                for (i, c) in components.iter().enumerate() {
                    c.check_compatible(&p.restrict(i)?)?;
                }
                Ok(())
            }
            Self::Tabular(t) => {
                if t.grid != p.grid || t.locations != p.locations {
                    return Err(Error::Incompatible(
                        "table grid differs from the problem grid".into(),
                    ));
                }
                Ok(())
            }
            Self::ExplicitV(v) => {
                let orders: Vec<f64> = p.ordering.discounts.iter().map(|d| d.order).collect();
                if v.locations != p.locations || orders != v.values {
                    return Err(Error::Incompatible(
                        "the explicit policy needs the matching tightness instance".into(),
                    ));
                }
                Ok(())
            }
            Self::SS { levels, .. } => {
                for (k, row) in levels.iter().enumerate() {
                    for (i, &(s, big)) in row.iter().enumerate() {
                        if s > big {
                            return Err(Error::Incompatible(format!(
                                "stage {k}, location {i}: s = {s} exceeds S = {big}"
                            )));
                        }
                    }
                }
                self.check_width(p)
            }
            _ => self.check_width(p),
        }
    }

    fn check_width(&self, p: &Problem) -> Result<()> {
        match self.locations() {
            Some(m) if m != p.locations => Err(Error::Incompatible(format!(
                "policy for {m} location(s) on a {}-location problem",
                p.locations
            ))),
            _ => Ok(()),
        }
    }

    pub fn act<R: RngCore>(
        &self,
        bx: &ActionBox,
        k: usize,
        x: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.act_into(bx, k, x, rng, &mut out)?;
        Ok(out)
    }

    /// Writes the joint order for stage `k` at state `x` into `out`.
    pub fn act_into<R: RngCore>(
        &self,
        bx: &ActionBox,
        k: usize,
        x: &[f64],
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            Self::Tabular(t) => t.act_into(k, x, out),
            Self::BaseStock { levels, stationary } => {
                let row = stage_row(levels, k, *stationary)?;
                for ((o, &xi), &s) in out.iter_mut().zip(x).zip(row) {
                    *o = bx.truncate(xi, (s - xi).max(0.0));
                }
                Ok(())
            }
            Self::SS { levels, stationary } => {
                let row = stage_row(levels, k, *stationary)?;
                for ((o, &xi), &(s, big)) in out.iter_mut().zip(x).zip(row) {
                    *o = if xi < s {
                        bx.truncate(xi, big - xi)
                    } else {
                        0.0
                    };
                }
                Ok(())
            }
            Self::Decoupled { components } => {
                for (i, c) in components.iter().enumerate() {
                    c.act_into(bx, k, &x[i..i + 1], rng, &mut out[i..i + 1])?;
                }
                Ok(())
            }
            Self::Balancing(b) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = b.decide(i, k, x[i], bx, rng)?.order;
                }
                Ok(())
            }
            Self::ExplicitV(v) => {
                v.act_into(x, out)?;
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = bx.truncate(xi, *o);
                }
                Ok(())
            }
        }
    }
}

fn stage_row<T>(levels: &[Vec<T>], k: usize, stationary: bool) -> Result<&[T]> {
    let idx = if stationary { 0 } else { k };
    levels
        .get(idx)
        .map(Vec::as_slice)
        .ok_or(Error::StageOutOfRange {
            stage: k,
            stages: levels.len(),
        })
}

/// Per-stage, per-location structure fits with their boundary exceptions.
#[derive(Clone, Debug, PartialEq)]
pub struct Construction {
    pub policy: Policy,
    /// `(stage, location, state)` of every boundary state the fit does not match.
    pub exceptions: Vec<(usize, usize, f64)>,
}

/// Decoupled base-stock policy that is optimal for each location under the
/// linear cost `l z`.
pub fn make_pi_square(p: &Problem, l: f64) -> Result<Construction> {
    build_decoupled(p, OrderingCost::linear(l), true)
}

/// Decoupled (s,S) policy that is optimal for each location under
/// `k_h 1(z > 0) + h z`.
pub fn make_pi_diamond(p: &Problem, k_h: f64, h: f64) -> Result<Construction> {
    build_decoupled(p, OrderingCost::affine(k_h, h), false)
}

fn build_decoupled(p: &Problem, cost: OrderingCost, base_stock: bool) -> Result<Construction> {
    let margin = dp::boundary_margin(p);
    let mut components = Vec::with_capacity(p.locations);
    let mut exceptions = Vec::new();
    for i in 0..p.locations {
        let single = p.restrict(i)?.with_ordering(cost.clone());
        let (_, table) = dp::solve_single_dp(&single)?;
        let mut bs = Vec::with_capacity(table.stages());
        let mut ss = Vec::with_capacity(table.stages());
        for k in 0..table.stages() {
            let fit = dp::extract_ss_interior(&table, k, p.max_order_per_location, margin)?;
            let (s, big) = fit.levels;
            if base_stock && s != big {
                return Err(Error::Structure {
                    expected: "base-stock",
                    stage: k,
                    state: s,
                    detail: format!("location {i} orders up to {big} only below {s}"),
                });
            }
            exceptions.extend(fit.exceptions.iter().map(|&x| (k, i, x)));
            bs.push(vec![big]);
            ss.push(vec![(s, big)]);
        }
        components.push(if base_stock {
            Policy::BaseStock {
                levels: bs,
                stationary: false,
            }
        } else {
            Policy::SS {
                levels: ss,
                stationary: false,
            }
        });
    }
    if !exceptions.is_empty() {
        log::info!(
            "{} boundary state(s) differ from the fitted structure",
            exceptions.len()
        );
    }
    Ok(Construction {
        policy: Policy::Decoupled { components },
        exceptions,
    })
}

/// The explicit policy of the tightness instance.
pub fn make_pi_v(params: &TightnessParams) -> Result<Policy> {
    params.check()?;
    Ok(Policy::ExplicitV(PiV {
        locations: params.locations,
        delta: params.delta(),
        values: params.discount_orders().to_vec(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{self, InstanceId};
    use crate::rng::derive_stream;

    fn bx() -> ActionBox {
        ActionBox {
            grid: Grid::new(-2.0, 8.0, 0.5).unwrap(),
            max_order: 10.0,
        }
    }

    #[test]
    fn base_stock_and_ss_examples() {
        let mut rng = derive_stream(0, &[]);
        let bs = Policy::BaseStock {
            levels: vec![vec![1.0, 1.0]],
            stationary: true,
        };
        assert_eq!(
            bs.act(&bx(), 5, &[0.0, 2.0], &mut rng).unwrap(),
            vec![1.0, 0.0]
        );
        let ss = Policy::SS {
            levels: vec![vec![(0.5, 2.0)]],
            stationary: false,
        };
        assert_eq!(ss.act(&bx(), 0, &[1.0], &mut rng).unwrap(), vec![0.0]);
        assert_eq!(ss.act(&bx(), 0, &[0.0], &mut rng).unwrap(), vec![2.0]);
        assert!(matches!(
            ss.act(&bx(), 1, &[0.0], &mut rng),
            Err(Error::StageOutOfRange {
                stage: 1,
                stages: 1
            })
        ));
    }

    #[test]
    fn truncation_to_box() {
        let mut rng = derive_stream(0, &[]);
        let bs = Policy::BaseStock {
            levels: vec![vec![20.0]],
            stationary: true,
        };
        assert_eq!(bs.act(&bx(), 0, &[7.0], &mut rng).unwrap(), vec![1.0]);
        assert_eq!(bs.act(&bx(), 0, &[-2.0], &mut rng).unwrap(), vec![10.0]);
    }

    #[test]
    fn decoupled_fig1_optima() {
        let p = instances::build(&InstanceId::Fig1Linear).unwrap();
        let c = make_pi_square(&p, 2.0).unwrap();
        let mut rng = derive_stream(0, &[]);
        assert_eq!(
            c.policy
                .act(&ActionBox::of(&p), 0, &[0.0, 0.0], &mut rng)
                .unwrap(),
            vec![1.0, 1.0]
        );
        if let Policy::Decoupled { components } = &c.policy {
            for comp in components {
                if let Policy::BaseStock { levels, .. } = comp {
                    assert_eq!(levels[0], vec![1.0]);
                }
            }
        }
    }

    #[test]
    fn diamond_without_fixed_charge_is_base_stock() {
        let p = instances::build(&InstanceId::Fig1Linear).unwrap();
        let c = make_pi_diamond(&p, 0.0, 2.0).unwrap();
        let Policy::Decoupled { components } = &c.policy else {
            panic!()
        };
        for comp in components {
            let Policy::SS { levels, .. } = comp else {
                panic!()
            };
            for row in levels {
                assert_eq!(row[0].0, row[0].1);
            }
        }
    }

    #[test]
    fn huge_fixed_charge_never_orders() {
        let mut p = instances::build(&InstanceId::Fig1Linear).unwrap();
        p.horizon = crate::model::Horizon::Finite { periods: 1 };
        let c = make_pi_diamond(&p, 1e6, 2.0).unwrap();
        let mut rng = derive_stream(0, &[]);
        for x in p.grid.points() {
            let u = c
                .policy
                .act(&ActionBox::of(&p), 0, &[x, x], &mut rng)
                .unwrap();
            assert_eq!(u, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn zero_demand_pi_square_orders_nothing_from_nonnegative() {
        let mut p = instances::build(&InstanceId::Fig1Linear).unwrap();
        p.demand =
            crate::model::DemandModel::replicated(crate::model::Distribution::constant(0.0), 2);
        let c = make_pi_square(&p, 2.0).unwrap();
        let mut rng = derive_stream(0, &[]);
        for k in 0..2 {
            for x in [0.0, 1.0, 3.0] {
                assert_eq!(
                    c.policy
                        .act(&ActionBox::of(&p), k, &[x, x], &mut rng)
                        .unwrap(),
                    vec![0.0, 0.0]
                );
            }
        }
    }

    #[test]
    fn pi_v_examples() {
        let params = TightnessParams {
            locations: 2,
            epsilon: 0.3,
            l: 1.0,
            h: 4.0,
            p: 100.0,
        };
        // delta = 0.1
        let pi = make_pi_v(&params).unwrap();
        let wide = ActionBox {
            grid: Grid::new(-2.0, 6.0, 0.5).unwrap(),
            max_order: 4.0,
        };
        let mut rng = derive_stream(0, &[]);
        let u = pi.act(&wide, 0, &[0.0, 0.0], &mut rng).unwrap();
        assert!((u[0] - 1.1).abs() < 1e-12 && (u[1] - 1.1).abs() < 1e-12);
        assert_eq!(u.iter().sum::<f64>(), 2.2);
        assert_eq!(
            pi.act(&wide, 0, &[1.2, 1.0], &mut rng).unwrap(),
            vec![0.0, 0.0]
        );
        // the smallest value of V that reaches the threshold is M = 2
        let u = pi.act(&wide, 0, &[2.0, 0.0], &mut rng).unwrap();
        assert_eq!(u, vec![0.0, 2.0]);
    }

    #[test]
    fn pi_v_rejects_other_problems() {
        let params = TightnessParams::default();
        let pi = make_pi_v(&params).unwrap();
        let p = instances::build(&InstanceId::SectorSim).unwrap();
        assert!(matches!(
            pi.check_compatible(&p),
            Err(Error::Incompatible(_))
        ));
        let t = instances::build(&InstanceId::Tightness(params)).unwrap();
        pi.check_compatible(&t).unwrap();
    }

    #[test]
    fn serde_round_trip() {
        let pol = Policy::Decoupled {
            components: vec![
                Policy::SS {
                    levels: vec![vec![(0.5, 2.0)], vec![(0.0, 1.5)]],
                    stationary: false,
                },
                Policy::BaseStock {
                    levels: vec![vec![1.0]],
                    stationary: true,
                },
            ],
        };
        let text = toml::to_string(&pol).unwrap();
        let back: Policy = toml::from_str(&text).unwrap();
        assert_eq!(back, pol);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn waterfill_equalizes(x in proptest::collection::vec(-2.0..3.0f64, 1..5), v in 0.0..8.0f64) {
                let mut u = vec![0.0; x.len()];
                waterfill(&x, v, &mut u);
                prop_assert!(u.iter().all(|&ui| ui >= 0.0));
                prop_assert!((u.iter().sum::<f64>() - v).abs() < 1e-9);
                let raised: Vec<f64> = x.iter().zip(&u).filter(|(_, &ui)| ui > 1e-12).map(|(a, b)| a + b).collect();
                if let Some(&lvl) = raised.first() {
                    for r in &raised {
                        prop_assert!((r - lvl).abs() < 1e-9);
                    }
                    for (xi, ui) in x.iter().zip(&u) {
                        if *ui <= 1e-12 {
                            prop_assert!(*xi >= lvl - 1e-9);
                        }
                    }
                }
            }

            #[test]
            fn pi_v_levels_equal_below_threshold(a in 0.0..1.0f64, b in 0.0..1.0f64) {
                let params = TightnessParams::default();
                let pi = make_pi_v(&params).unwrap();
                let wide = ActionBox { grid: Grid::new(-2.0, 6.0, 0.5).unwrap(), max_order: 4.0 };
                let mut rng = derive_stream(0, &[]);
                let x = [a, b];
                let u = pi.act(&wide, 0, &x, &mut rng).unwrap();
                let threshold = 2.0 * (1.0 + params.delta());
                prop_assert!((x[0] + u[0] - x[1] - u[1]).abs() < 1e-9);
                prop_assert!(x[0] + u[0] + x[1] + u[1] >= threshold - 1e-9);
            }

            #[test]
            fn decoupled_matches_components(x0 in -2.0..8.0f64, x1 in -2.0..8.0f64) {
                let a = Policy::SS { levels: vec![vec![(0.5, 3.0)]], stationary: true };
                let b = Policy::BaseStock { levels: vec![vec![1.5]], stationary: true };
                let d = Policy::Decoupled { components: vec![a.clone(), b.clone()] };
                let mut rng = derive_stream(0, &[]);
                let u = d.act(&bx(), 0, &[x0, x1], &mut rng).unwrap();
                prop_assert_eq!(u[0], a.act(&bx(), 0, &[x0], &mut rng).unwrap()[0]);
                prop_assert_eq!(u[1], b.act(&bx(), 0, &[x1], &mut rng).unwrap()[0]);
                prop_assert!(u.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
