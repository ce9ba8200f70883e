//! Policy specifications on the command line: `name[:key=value,...]`.
//!
//! Per-location values are separated by `/`; a single value is replicated.

use std::collections::BTreeMap;
use std::path::Path;

use invctl_core::balancing::{BalancingPolicy, HoldingProxy};
use invctl_core::instances::InstanceId;
use invctl_core::model::{Problem, Purpose};
use invctl_core::policies::{self, Policy};
use invctl_core::sim::{Method, Side};
use invctl_core::{bounds, config, dp, stationary, Error};

use crate::Usage;

pub const NAMES: &str =
    "optimal, pi_square[:l=], pi_diamond[:K=,h=], balancing[:K=,variant=], pi_v, base_stock:S=auto|S1/S2.., sS:s=..,S=.., file:PATH";

/// Everything a policy may be built from.
pub struct Context<'a> {
    pub problem: &'a Problem,
    pub instance: Option<InstanceId>,
    pub variant: HoldingProxy,
}

pub struct Built {
    pub side: Side,
    /// Boundary states where a decoupled construction departs from its fit.
    pub exceptions: usize,
}

fn args(rest: &str, allowed: &[&str], name: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Usage(format!("{name}: expected key=value, got {kv:?}")))?;
        if !allowed.contains(&k) {
            return Err(Usage(format!(
                "{name}: unknown key {k:?} (allowed: {})",
                if allowed.is_empty() {
                    "none".to_string()
                } else {
                    allowed.join(", ")
                }
            ))
            .into());
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

fn number(name: &str, key: &str, v: &str) -> anyhow::Result<f64> {
    v.parse()
        .map_err(|_| Usage(format!("{name}: {key} is not a number: {v:?}")).into())
}

fn levels(name: &str, key: &str, v: &str, m: usize) -> anyhow::Result<Vec<f64>> {
    let xs = v
        .split('/')
        .map(|s| number(name, key, s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    match xs.len() {
        1 => Ok(vec![xs[0]; m]),
        n if n == m => Ok(xs),
        n => Err(Usage(format!("{name}: {key} has {n} values for {m} locations")).into()),
    }
}

fn method(name: &str, a: &BTreeMap<String, String>, default: Method) -> anyhow::Result<Method> {
    match a.get("method").map(String::as_str) {
        None => Ok(default),
        Some("exact") => Ok(Method::Exact),
        Some("mc") => Ok(Method::MonteCarlo),
        Some(other) => {
            Err(Usage(format!("{name}: method must be exact or mc, got {other:?}")).into())
        }
    }
}

fn dp_ready(p: &Problem, what: &str) -> anyhow::Result<()> {
    p.validate(Purpose::DynamicProgramming)
        .map_err(|e| Error::Incompatible(format!("{what} needs a DP-solvable problem: {e}")))?;
    Ok(())
}

pub fn build(spec: &str, ctx: &Context) -> anyhow::Result<Built> {
    let p = ctx.problem;
    let m = p.locations;
    if let Some(path) = spec.strip_prefix("file:") {
        let policy = config::load_policy(Path::new(path))?;
        policy.check_compatible(p)?;
        return Ok(Built {
            side: Side::monte_carlo(spec, policy),
            exceptions: 0,
        });
    }
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut exceptions = 0;
    let (policy, default_method, a) = match name {
        "optimal" => {
            let a = args(rest, &["method"], name)?;
            dp_ready(p, "optimal")?;
            let (_, table) = dp::solve_joint_dp(p)?;
            (Policy::Tabular(table), Method::Exact, a)
        }
        "pi_square" => {
            let a = args(rest, &["l", "method"], name)?;
            let l = match a.get("l") {
                Some(v) => number(name, "l", v)?,
                None => {
                    bounds::fit_sector(&p.ordering)
                        .map_err(|e| {
                            Error::Incompatible(format!(
                                "pi_square needs a slope l; pass pi_square:l=... ({e})"
                            ))
                        })?
                        .l
                }
            };
            dp_ready(p, "pi_square")?;
            let c = policies::make_pi_square(p, l)?;
            exceptions = c.exceptions.len();
            (c.policy, Method::MonteCarlo, a)
        }
        "pi_diamond" => {
            let a = args(rest, &["K", "h", "method"], name)?;
            let (k, h) = match (a.get("K"), a.get("h")) {
                (Some(k), Some(h)) => (number(name, "K", k)?, number(name, "h", h)?),
                _ => {
                    let f = bounds::fit_affine(&p.ordering, m).map_err(|e| {
                        Error::Incompatible(format!(
                            "pi_diamond needs K and h; pass pi_diamond:K=...,h=... ({e})"
                        ))
                    })?;
                    let k = a
                        .get("K")
                        .map(|v| number(name, "K", v))
                        .transpose()?
                        .unwrap_or(f.k_h);
                    let h = a
                        .get("h")
                        .map(|v| number(name, "h", v))
                        .transpose()?
                        .unwrap_or(f.h);
                    (k, h)
                }
            };
            dp_ready(p, "pi_diamond")?;
            let c = policies::make_pi_diamond(p, k, h)?;
            exceptions = c.exceptions.len();
            (c.policy, Method::MonteCarlo, a)
        }
        "balancing" => {
            let a = args(rest, &["K", "variant", "method"], name)?;
            let k = match a.get("K") {
                Some(v) => number(name, "K", v)?,
                None => p.ordering.fixed_at_zero(),
            };
            let variant = match a.get("variant") {
                Some(v) => v.parse()?,
                None => ctx.variant,
            };
            (
                Policy::Balancing(BalancingPolicy::new(p, k, variant)?),
                Method::MonteCarlo,
                a,
            )
        }
        "pi_v" => {
            let a = args(rest, &["method"], name)?;
            let Some(InstanceId::Tightness(t)) = ctx.instance else {
                return Err(Error::Incompatible(
                    "pi_v is defined only for the tightness instance".into(),
                )
                .into());
            };
            (policies::make_pi_v(&t)?, Method::MonteCarlo, a)
        }
        "base_stock" => {
            let a = args(rest, &["S", "method"], name)?;
            let s = a
                .get("S")
                .ok_or_else(|| Usage("base_stock needs S=auto or S=value[/value...]".into()))?;
            let lv = if s == "auto" {
                match ctx.instance {
                    Some(InstanceId::Tightness(t)) => vec![t.auto_level(); m],
                    _ => stationary::optimize_individual(p)?,
                }
            } else {
                levels(name, "S", s, m)?
            };
            (
                Policy::BaseStock {
                    levels: vec![lv],
                    stationary: true,
                },
                Method::MonteCarlo,
                a,
            )
        }
        "sS" => {
            let a = args(rest, &["s", "S", "method"], name)?;
            let (Some(s), Some(big)) = (a.get("s"), a.get("S")) else {
                return Err(Usage("sS needs s=... and S=...".into()).into());
            };
            let s = levels(name, "s", s, m)?;
            let big = levels(name, "S", big, m)?;
            (
                Policy::SS {
                    levels: vec![s.into_iter().zip(big).collect()],
                    stationary: true,
                },
                Method::MonteCarlo,
                a,
            )
        }
        other => {
            return Err(Usage(format!("unknown policy {other:?}; known: {NAMES}")).into());
        }
    };
    let method = method(name, &a, default_method)?;
    if method == Method::Exact {
        if !policy.is_deterministic() {
            return Err(Usage(format!(
                "{name} is randomized; exact evaluation needs a deterministic policy"
            ))
            .into());
        }
        dp_ready(p, "exact evaluation")?;
    }
    policy.check_compatible(p)?;
    Ok(Built {
        side: Side {
            name: spec.to_string(),
            policy,
            method,
        },
        exceptions,
    })
}
