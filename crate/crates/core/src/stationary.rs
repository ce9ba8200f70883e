//! Long-run average cost of stationary base-stock policies and the
//! joint-versus-individual optimization of their levels.
//!
//! In steady state a base-stock policy reorders last period's demand, so
//! the average cost is `E c(sum_i w^i) + sum_i E r^i(S^i - w^i)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Problem;

/// Same tie tolerance as the DP argmin.
const TIE_TOL: f64 = 1e-12;
pub const MAX_JOINT_CANDIDATES: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryReport {
    pub levels: Vec<f64>,
    /// `E c(sum_i w^i)`, independent of the levels.
    pub ordering: f64,
    /// `E r^i(S^i - w^i)` per location.
    pub holding: Vec<f64>,
    pub total: f64,
}

fn check(p: &Problem) -> Result<Vec<Vec<(f64, f64)>>> {
    if !p.demand.iid {
        return Err(Error::Unsupported(
            "steady-state cost of demand that is not i.i.d. across periods".into(),
        ));
    }
    (0..p.locations).map(|i| p.demand.pmf(i)).collect()
}

/// `E c(sum_i w^i)` by convolving the per-location pmfs.
fn expected_ordering(p: &Problem, pmfs: &[Vec<(f64, f64)>]) -> f64 {
    let mut total: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for pmf in pmfs {
        let mut next = Vec::with_capacity(total.len() * pmf.len());
        for &(z, q) in &total {
            for &(w, r) in pmf {
                next.push((z + w, q * r));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        total.clear();
        for (z, q) in next {
            match total.last_mut() {
                Some(last) if last.0 == z => last.1 += q,
                _ => total.push((z, q)),
            }
        }
    }
    total.iter().map(|&(z, q)| q * p.ordering.value(z)).sum()
}

fn expected_holding(p: &Problem, pmf: &[(f64, f64)], i: usize, s: f64) -> f64 {
    let rates = p.holding.locations[i];
    pmf.iter().map(|&(w, q)| q * rates.cost(s - w)).sum()
}

/// Per-term steady-state cost of the levels `s`.
pub fn stationary_report(s: &[f64], p: &Problem) -> Result<StationaryReport> {
    let pmfs = check(p)?;
    if s.len() != p.locations {
        return Err(Error::Domain(format!(
            "{} levels for {} locations",
            s.len(),
            p.locations
        )));
    }
    let ordering = expected_ordering(p, &pmfs);
    let holding: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(i, &si)| expected_holding(p, &pmfs[i], i, si))
        .collect();
    let total = ordering + holding.iter().sum::<f64>();
    Ok(StationaryReport {
        levels: s.to_vec(),
        ordering,
        holding,
        total,
    })
}

pub fn stationary_cost(s: &[f64], p: &Problem) -> Result<f64> {
    Ok(stationary_report(s, p)?.total)
}

/// First index whose value is within the tie tolerance of the minimum.
fn first_min(values: &[f64]) -> usize {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs().max(1.0);
    values
        .iter()
        .position(|&v| v <= best + tol)
        .expect("nonempty")
}

/// Per-location minimizers of `E r^i(S - w^i)` over the state grid.
pub fn optimize_individual(p: &Problem) -> Result<Vec<f64>> {
    let pmfs = check(p)?;
    let points: Vec<f64> = p.grid.points().collect();
    Ok((0..p.locations)
        .map(|i| {
            let costs: Vec<f64> = points
                .iter()
                .map(|&s| expected_holding(p, &pmfs[i], i, s))
                .collect();
            points[first_min(&costs)]
        })
        .collect())
}

/// Exhaustive minimization of the stationary cost over the joint grid.
pub fn optimize_joint(p: &Problem) -> Result<Vec<f64>> {
    let pmfs = check(p)?;
    let n = p.grid.count();
    let size = (n as u128).pow(p.locations as u32);
    if size > MAX_JOINT_CANDIDATES as u128 {
        return Err(Error::TooLarge {
            locations: p.locations,
            points: n,
            size,
            limit: MAX_JOINT_CANDIDATES,
        });
    }
    let size = size as usize;
    let ordering = expected_ordering(p, &pmfs);
    let decode = |mut idx: usize| {
        let mut s = vec![0.0; p.locations];
        for i in (0..p.locations).rev() {
            s[i] = p.grid.point(idx % n);
            idx /= n;
        }
        s
    };
    let costs: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let s = decode(idx);
            ordering
                + s.iter()
                    .enumerate()
                    .map(|(i, &si)| expected_holding(p, &pmfs[i], i, si))
                    .sum::<f64>()
        })
        .collect();
    Ok(decode(first_min(&costs)))
}
