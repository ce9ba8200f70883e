//! Sector and affine envelopes of ordering costs and the worst-case ratio
//! bounds they imply.
//!
//! All fits are analytic: on an affine piece both `c(z) / z` and
//! `c(z) / (K + l z)` are monotone in `z`, so extremes sit at piece
//! endpoints, one-sided limits, `z -> infinity`, or discount points.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::OrderingCost;

/// Where an extreme ratio is reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    At(f64),
    /// Approached as `z` tends to the given value (possibly infinity) but
    /// not attained.
    Limit(f64),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::At(z) => write!(f, "z = {z}"),
            Self::Limit(z) => write!(f, "limit z -> {z}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectorFit {
    pub l: f64,
    pub h: f64,
    pub l_witness: Witness,
    pub h_witness: Witness,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineFit {
    pub k_l: f64,
    pub l: f64,
    pub k_h: f64,
    pub h: f64,
    /// `max(K_h / K_l, h / l)`, with the slope term dropped when `h = l = 0`.
    pub ratio: f64,
    pub locations: usize,
    /// `M * ratio`.
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fit {
    Sector(SectorFit),
    Affine(AffineFit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    BaseStock,
    SS,
    Online,
}

/// Candidate evaluation points of a cost, optionally cut at `z_max`.
struct Segment {
    lo: f64,
    hi: f64,
    /// Whether `hi` is reached (false for an unbounded tail).
    closed: bool,
    fixed: f64,
    slope: f64,
}

fn segments(c: &OrderingCost, z_max: Option<f64>) -> Vec<Segment> {
    let cut = z_max.unwrap_or(f64::INFINITY);
    c.pieces
        .iter()
        .filter(|p| p.lower < cut)
        .map(|p| {
            let hi = p.upper_or_inf().min(cut);
            Segment {
                lo: p.lower,
                hi,
                closed: hi.is_finite(),
                fixed: p.fixed,
                slope: p.slope,
            }
        })
        .collect()
}

fn discounts(c: &OrderingCost, z_max: Option<f64>) -> impl Iterator<Item = (f64, f64)> + '_ {
    let cut = z_max.unwrap_or(f64::INFINITY);
    c.discounts
        .iter()
        .filter(move |d| d.order <= cut)
        .map(|d| (d.order, d.slope * d.order))
}

/// Tightest `l z <= c(z) <= h z` over `z > 0`.
pub fn fit_sector(c: &OrderingCost) -> Result<SectorFit> {
    fit_sector_on(c, None)
}

/// [`fit_sector`] restricted to `0 < z <= z_max` when given.
pub fn fit_sector_on(c: &OrderingCost, z_max: Option<f64>) -> Result<SectorFit> {
    if c.fixed_at_zero() > 0.0 {
        return Err(Error::NotSectorBoundable(format!(
            "fixed charge {} next to zero makes c(z)/z unbounded as z -> 0",
            c.fixed_at_zero()
        )));
    }
    let mut cands: Vec<(f64, Witness)> = Vec::new();
    for s in segments(c, z_max) {
        // c(z)/z = slope + fixed/z on the segment.
        if s.fixed == 0.0 {
            let z = if s.closed { s.hi } else { s.lo + 1.0 };
            cands.push((s.slope, Witness::At(z)));
            continue;
        }
        cands.push((s.slope + s.fixed / s.lo, Witness::Limit(s.lo)));
        if s.closed {
            cands.push((s.slope + s.fixed / s.hi, Witness::At(s.hi)));
        } else {
            cands.push((s.slope, Witness::Limit(f64::INFINITY)));
        }
    }
    for (z, v) in discounts(c, z_max) {
        cands.push((v / z, Witness::At(z)));
    }
    // Attained witnesses win ties.
    let better = |a: &(f64, Witness), b: &(f64, Witness), lower: bool| {
        let (va, vb) = (a.0, b.0);
        if va != vb {
            if lower {
                va < vb
            } else {
                va > vb
            }
        } else {
            matches!(a.1, Witness::At(_)) && matches!(b.1, Witness::Limit(_))
        }
    };
    let mut lo = cands[0];
    let mut hi = cands[0];
    for c in &cands[1..] {
        if better(c, &lo, true) {
            lo = *c;
        }
        if better(c, &hi, false) {
            hi = *c;
        }
    }
    if lo.0 <= 0.0 {
        return Err(Error::NotSectorBoundable(format!(
            "c(z) vanishes at some z > 0 ({}), so the lower slope is 0",
            lo.1
        )));
    }
    Ok(SectorFit {
        l: lo.0,
        h: hi.0,
        l_witness: lo.1,
        h_witness: hi.1,
    })
}

/// Largest `K` with `K + l z <= c(z)` for all `z`, possibly `-inf`.
fn k_max(c: &OrderingCost, z_max: Option<f64>, l: f64) -> f64 {
    let mut best = f64::INFINITY;
    for s in segments(c, z_max) {
        let lo = s.fixed + (s.slope - l) * s.lo;
        best = best.min(lo);
        if s.closed {
            best = best.min(s.fixed + (s.slope - l) * s.hi);
        } else if s.slope < l {
            return f64::NEG_INFINITY;
        }
    }
    for (z, v) in discounts(c, z_max) {
        best = best.min(v - l * z);
    }
    best
}

/// `sup_z c(z) / (k + l z)` for `k > 0`, `l >= 0`.
fn upper_ratio(c: &OrderingCost, z_max: Option<f64>, k: f64, l: f64) -> f64 {
    let mut best: f64 = 0.0;
    let ratio = |fixed: f64, slope: f64, z: f64| (fixed + slope * z) / (k + l * z);
    for s in segments(c, z_max) {
        best = best.max(ratio(s.fixed, s.slope, s.lo));
        if s.closed {
            best = best.max(ratio(s.fixed, s.slope, s.hi));
        } else if l > 0.0 {
            best = best.max(s.slope / l);
        } else if s.slope > 0.0 {
            return f64::INFINITY;
        }
    }
    for (z, v) in discounts(c, z_max) {
        best = best.max(v / (k + l * z));
    }
    best
}

/// Envelope pair minimizing `M * max(K_h / K_l, h / l)` over all
/// `K_l 1(z > 0) + l z <= c(z) <= K_h 1(z > 0) + h z`.
pub fn fit_affine(c: &OrderingCost, locations: usize) -> Result<AffineFit> {
    fit_affine_on(c, locations, None)
}

/// [`fit_affine`] restricted to `0 < z <= z_max` when given.
pub fn fit_affine_on(c: &OrderingCost, locations: usize, z_max: Option<f64>) -> Result<AffineFit> {
    let k0 = k_max(c, z_max, 0.0);
    if !(k0 > 0.0) {
        return Err(Error::NoAffineLower(format!(
            "inf of c(z) over z > 0 is {k0}; a positive fixed charge cannot fit below"
        )));
    }
    // Feasible slopes form [0, l_hi]: k_max is concave and decreasing in l.
    let mut l_hi = segments(c, z_max)
        .iter()
        .filter(|s| !s.closed)
        .map(|s| s.slope)
        .fold(f64::INFINITY, f64::min);
    if !l_hi.is_finite() || k_max(c, z_max, l_hi) <= 0.0 {
        let (mut a, mut b) = (0.0, if l_hi.is_finite() { l_hi } else { 1.0 });
        while !l_hi.is_finite() && k_max(c, z_max, b) > 0.0 {
            b *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if k_max(c, z_max, mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        l_hi = a;
    }
    let phi = |l: f64| upper_ratio(c, z_max, k_max(c, z_max, l), l);
    // phi is convex on [0, l_hi]; golden-section search.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, l_hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..300 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = phi(x2);
        }
        if b - a <= 1e-15 * l_hi.max(1.0) {
            break;
        }
    }
    let mut l = 0.5 * (a + b);
    let mut t = phi(l);
    for cand in [0.0, l_hi] {
        let v = phi(cand);
        if v <= t {
            l = cand;
            t = v;
        }
    }
    let k_l = k_max(c, z_max, l);
    Ok(AffineFit {
        k_l,
        l,
        k_h: t * k_l,
        h: t * l,
        ratio: t,
        locations,
        objective: locations as f64 * t,
    })
}

/// Worst-case cost ratio implied by a fit for a policy family.
pub fn theoretical_ratio(fit: &Fit, locations: usize, family: Family) -> Result<f64> {
    match (fit, family) {
        (Fit::Sector(s), Family::BaseStock) => Ok(s.h / s.l),
        (Fit::Sector(s), Family::Online) => Ok(2.0 * s.h / s.l),
        (Fit::Affine(a), Family::SS) => Ok(locations as f64 * a.ratio),
        (Fit::Affine(a), Family::Online) => Ok(3.0 * locations as f64 * a.ratio),
        (Fit::Sector(_), Family::SS) => {
            Err(Error::FitMismatch("(s,S) bounds need an affine fit".into()))
        }
        (Fit::Affine(_), Family::BaseStock) => Err(Error::FitMismatch(
            "base-stock bounds need a sector fit".into(),
        )),
    }
}

/// Rounds away float noise such as `9.600000000000001` for display.
fn tidy(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        let scale = 10f64.powi(11 - x.abs().log10().floor() as i32);
        (x * scale).round() / scale
    } else {
        x
    }
}

impl fmt::Display for SectorFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "sector fit: l = {} ({}), h = {} ({})",
            tidy(self.l),
            self.l_witness,
            tidy(self.h),
            self.h_witness
        )?;
        writeln!(f, "  base-stock bound h/l = {}", tidy(self.h / self.l))?;
        write!(f, "  online bound 2h/l = {}", tidy(2.0 * self.h / self.l))
    }
}

impl fmt::Display for AffineFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "affine fit: K_l = {}, l = {}, K_h = {}, h = {}",
            tidy(self.k_l),
            tidy(self.l),
            tidy(self.k_h),
            tidy(self.h)
        )?;
        writeln!(
            f,
            "  (s,S) bound M max(K_h/K_l, h/l) = {} (M = {})",
            tidy(self.objective),
            self.locations
        )?;
        write!(
            f,
            "  online bound 3 M max(K_h/K_l, h/l) = {}",
            tidy(3.0 * self.objective)
        )
    }
}
