//! Envelope fits against brute-force searches that only evaluate the cost.

use invctl_core::bounds::{self, Family, Fit, Witness};
use invctl_core::instances;
use invctl_core::model::OrderingCost;
use invctl_core::rng;
use rand::Rng;

/// Evaluation points: a log-spaced sweep plus both sides of every breakpoint.
fn sample(c: &OrderingCost) -> Vec<f64> {
    let mut zs: Vec<f64> = (0..=4000)
        .map(|j| 10f64.powf(-6.0 + 12.0 * j as f64 / 4000.0))
        .collect();
    for p in &c.pieces {
        for b in [p.lower, p.upper_or_inf()] {
            if b.is_finite() && b > 0.0 {
                zs.extend([b, b * (1.0 + 1e-12), b * (1.0 - 1e-12)]);
            }
        }
    }
    zs
}

fn tail_slope(c: &OrderingCost) -> f64 {
    c.pieces.last().unwrap().slope
}

/// `sup c / (k + l z)` over the sample and the limit at infinity; `None`
/// if the lower envelope is violated.
fn ratio(c: &OrderingCost, zs: &[f64], k: f64, l: f64) -> Option<f64> {
    if l > tail_slope(c) + 1e-15 {
        return None;
    }
    let mut t: f64 = if l > 0.0 {
        tail_slope(c) / l
    } else {
        f64::INFINITY
    };
    for &z in zs {
        let v = c.value(z);
        let lo = k + l * z;
        if v < lo - 1e-9 * lo.max(1.0) {
            return None;
        }
        t = t.max(v / lo);
    }
    Some(t)
}

/// Zooming grid search of `max(K_h/K_l, h/l)` over the lower envelope.
fn oracle(c: &OrderingCost) -> f64 {
    let zs = sample(c);
    let k_top = zs.iter().map(|&z| c.value(z)).fold(f64::INFINITY, f64::min);
    let (mut k_lo, mut k_hi) = (0.0, k_top);
    let (mut l_lo, mut l_hi) = (0.0, tail_slope(c));
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..40 {
        let n = 24;
        for i in 0..=n {
            for j in 0..=n {
                let k = k_lo + (k_hi - k_lo) * i as f64 / n as f64;
                let l = l_lo + (l_hi - l_lo) * j as f64 / n as f64;
                if k <= 0.0 {
                    continue;
                }
                if let Some(t) = ratio(c, &zs, k, l) {
                    if t < best.0 {
                        best = (t, k, l);
                    }
                }
            }
        }
        let (dk, dl) = ((k_hi - k_lo) / 6.0, (l_hi - l_lo) / 6.0);
        k_lo = (best.1 - dk).max(0.0);
        k_hi = (best.1 + dk).min(k_top);
        l_lo = (best.2 - dl).max(0.0);
        l_hi = (best.2 + dl).min(tail_slope(c));
    }
    best.0
}

fn random_cost(seed: u64) -> OrderingCost {
    let mut r = rng::derive_stream(seed, &[rng::kind::TEST, rng::tag("random_cost")]);
    let mut parts = Vec::new();
    let (mut at, mut fixed, mut slope) = (0.0, r.gen_range(0.5..5.0), r.gen_range(0.5..4.0));
    for _ in 0..r.gen_range(1..=3) {
        let upper = at + r.gen_range(0.5..5.0);
        parts.push((upper, fixed, slope));
        let next: f64 = r.gen_range(0.2..4.0);
        fixed = (fixed + (slope - next) * upper + r.gen_range(0.0..2.0)).max(0.0);
        slope = next;
        at = upper;
    }
    parts.push((f64::INFINITY, fixed, slope));
    OrderingCost::piecewise(&parts)
}

#[test]
fn affine_fit_matches_grid_oracle() {
    let mut costs = vec![instances::affine_cost()];
    costs.extend((0..5).map(random_cost));
    for c in costs {
        let f = bounds::fit_affine(&c, 2).unwrap();
        let o = oracle(&c);
        assert!(
            f.ratio <= o + 1e-6,
            "{c:?}: fit {} worse than oracle {o}",
            f.ratio
        );
        assert!(
            f.ratio >= o - 1e-3 * o,
            "{c:?}: fit {} below oracle {o}",
            f.ratio
        );
        let zs = sample(&c);
        assert!((ratio(&c, &zs, f.k_l, f.l).unwrap() - f.ratio).abs() <= 1e-6 * f.ratio);
    }
}

#[test]
fn affine_sim_optimum() {
    let f = bounds::fit_affine(&instances::affine_cost(), 2).unwrap();
    assert!(
        (f.k_l - 4.0).abs() < 1e-9 && (f.l - 1.0).abs() < 1e-9,
        "{f:?}"
    );
    assert!((f.objective - 3.2).abs() < 1e-9);
    // The pair (16/3, 4/3) does not lie above the cost at z = 6.
    assert!(instances::affine_cost().value(6.0) > 16.0 / 3.0 + 4.0 / 3.0 * 6.0);
}

#[test]
fn sector_fit_matches_dense_scan() {
    for c in [instances::sector_cost(), instances::fig1_nonlinear_cost()] {
        let f = bounds::fit_sector(&c).unwrap();
        let zs = sample(&c);
        let lo = zs
            .iter()
            .map(|&z| c.value(z) / z)
            .fold(f64::INFINITY, f64::min)
            .min(tail_slope(&c));
        let hi = zs.iter().map(|&z| c.value(z) / z).fold(0.0, f64::max);
        assert!(
            (f.l - lo).abs() <= 1e-9 && (f.h - hi).abs() <= 1e-9,
            "{f:?} vs ({lo}, {hi})"
        );
    }
    let s = bounds::fit_sector(&instances::sector_cost()).unwrap();
    assert_eq!((s.l, s.h), (2.0, 4.0));
    assert_eq!(s.l_witness, Witness::Limit(f64::INFINITY));
    let fit = Fit::Sector(s);
    assert_eq!(
        bounds::theoretical_ratio(&fit, 2, Family::BaseStock).unwrap(),
        2.0
    );
    assert_eq!(
        bounds::theoretical_ratio(&fit, 2, Family::Online).unwrap(),
        4.0
    );
}
