//! `invctl`: exact solves, policy comparisons, cost bounds and property
//! checks for multi-location inventory problems.
//!
//! Exit codes: 0 success, 1 a checked invariant failed or the computation
//! could not be carried out, 2 usage or configuration error.

mod output;
mod spec;
mod verify;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invctl_core::balancing::HoldingProxy;
use invctl_core::bounds;
use invctl_core::instances::{self, InstanceId};
use invctl_core::model::{Problem, Purpose};
use invctl_core::sim::{self, InitialStates, SimConfig};
use invctl_core::{config, dp, Error};

use output::{Manifest, Sink};

/// A command-line usage error (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(
    name = "invctl",
    version,
    about = "Multi-location inventory control: exact DP, decoupled and online policies, cost bounds"
)]
struct Cli {
    /// More log output (repeat for more); RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Source {
    /// Built-in instance, e.g. fig1_linear or tightness:M=2,eps=0.1,l=1,h=4,p=100.
    #[arg(long, conflicts_with = "config")]
    instance: Option<String>,
    /// Problem TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct SimArgs {
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Common random numbers: both policies see the same demand paths.
    #[arg(long)]
    crn: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the number of simulated periods.
    #[arg(long)]
    horizon: Option<usize>,
    /// Initial state `x1,x2,...`; repeat for several. Default: the whole grid.
    #[arg(long = "state", value_name = "X")]
    states: Vec<String>,
    #[arg(long, default_value = "printed", value_parser = parse_variant)]
    balancing_variant: HoldingProxy,
}

fn parse_variant(s: &str) -> Result<HoldingProxy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Theorem1,
    Transform,
    Oracle,
    BalancingMonotone,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the joint DP and write value and policy tables.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Also solve each location alone under the joint ordering cost.
        #[arg(long)]
        per_location: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-initial-state cost ratio of two policies.
    Compare {
        #[command(flatten)]
        source: Source,
        /// Numerator policy.
        #[arg(long, help = format!("Numerator policy: {}", spec::NAMES))]
        num: String,
        /// Denominator policy.
        #[arg(long)]
        den: String,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot heatmap script (two locations only).
        #[arg(long)]
        gnuplot: bool,
    },
    /// Fit sector and affine envelopes and print the worst-case ratios.
    Bounds {
        #[command(flatten)]
        source: Source,
        /// Number of locations in the affine objective (default: the problem's).
        #[arg(long)]
        locations: Option<usize>,
        /// Restrict the fit to totals up to this order.
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite; exit 0 iff every check passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        source: Source,
        /// Slope removed by the transform suite (default: the smallest slope).
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo runs for randomized policies in the transform suite.
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in instance as problem TOML.
    Instance {
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Loaded {
    problem: Problem,
    instance: Option<InstanceId>,
}

fn load(source: &Source, purpose: Purpose, default: Option<InstanceId>) -> anyhow::Result<Loaded> {
    match (&source.instance, &source.config) {
        (Some(name), _) => {
            let id: InstanceId = name.parse()?;
            let problem = instances::build(&id)?;
            problem.validate(purpose)?;
            Ok(Loaded {
                problem,
                instance: Some(id),
            })
        }
        (None, Some(path)) => Ok(Loaded {
            problem: config::load_problem(path, purpose)?,
            instance: None,
        }),
        (None, None) => match default {
            Some(id) => Ok(Loaded {
                problem: instances::build(&id)?,
                instance: Some(id),
            }),
            None => Err(Usage("one of --instance or --config is required".into()).into()),
        },
    }
}

fn manifest(command: &str, source: &Source, loaded: &Loaded) -> Manifest {
    let mut m = Manifest::new(command);
    m.instance = loaded.instance.map(|i| i.to_string());
    m.config = source.config.as_ref().map(|p| p.display().to_string());
    m
}

fn parse_state(s: &str, m: usize) -> anyhow::Result<Vec<f64>> {
    let x = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Usage(format!("--state {s:?}: expected comma-separated numbers")))?;
    if x.len() != m {
        return Err(Usage(format!(
            "--state {s:?} has {} coordinates for {m} locations",
            x.len()
        ))
        .into());
    }
    Ok(x)
}

fn cmd_solve(source: &Source, per_location: bool, out: Option<&Path>) -> anyhow::Result<bool> {
    let loaded = load(source, Purpose::DynamicProgramming, None)?;
    let p = &loaded.problem;
    let mut sink = Sink::new(out, manifest("solve", source, &loaded))?;
    let (v, pi) = dp::solve_joint_dp(p)?;
    let mut summary = String::new();
    for k in 0..pi.stages() {
        let line = match dp::analyze_stage(&pi, k, p.max_order_per_location) {
            Ok(s) => s.to_string(),
            Err(e) => format!("unstructured ({e})"),
        };
        summary.push_str(&format!("stage {k}: {line}\n"));
    }
    let space = v.space();
    let avg = v.average_cost();
    let origin = p
        .grid
        .index_of(0.0)
        .map(|j| vec![p.grid.point(j); p.locations]);
    if let Some(x) = &origin {
        let s = space.index_of(&p.grid, x)?;
        summary.push_str(&format!(
            "at x0 = {x:?}: stage-0 order {:?}, last-stage order {:?}, average cost {}\n",
            pi.act(0, x)?,
            pi.act(pi.stages() - 1, x)?,
            avg[s]
        ));
    }
    print!("{summary}");
    sink.write("value.csv", &v.to_csv())?;
    sink.write("policy.csv", &pi.to_csv())?;
    sink.write("structure.txt", &summary)?;
    if per_location {
        for i in 0..p.locations {
            let (vi, pii) = dp::solve_single_dp(&p.restrict(i)?)?;
            let name = format!("location{}", i + 1);
            if sink.enabled() {
                sink.write(&format!("{name}_value.csv"), &vi.to_csv())?;
                sink.write(&format!("{name}_policy.csv"), &pii.to_csv())?;
            }
            match dp::extract_ss(&pii, 0, p.max_order_per_location) {
                Ok((s, big)) => println!("{name} alone, stage 0: (s, S) = ({s}, {big})"),
                Err(e) => println!("{name} alone, stage 0: {e}"),
            }
        }
    }
    sink.finish()?;
    Ok(true)
}

fn cmd_compare(
    source: &Source,
    num: &str,
    den: &str,
    a: &SimArgs,
    out: Option<&Path>,
    gnuplot: bool,
) -> anyhow::Result<bool> {
    let loaded = load(source, Purpose::Simulation, None)?;
    let p = &loaded.problem;
    let ctx = spec::Context {
        problem: p,
        instance: loaded.instance,
        variant: a.balancing_variant,
    };
    let n = spec::build(num, &ctx)?;
    let d = spec::build(den, &ctx)?;
    for b in [&n, &d] {
        if b.exceptions > 0 {
            log::warn!(
                "{}: {} boundary state(s) differ from the fitted structure",
                b.side.name,
                b.exceptions
            );
        }
    }
    let initial = if a.states.is_empty() {
        InitialStates::Grid
    } else {
        InitialStates::List(
            a.states
                .iter()
                .map(|s| parse_state(s, p.locations))
                .collect::<anyhow::Result<_>>()?,
        )
    };
    let cfg = SimConfig {
        runs: a.runs,
        seed: a.seed,
        initial,
        horizon: a.horizon,
        crn: a.crn,
        threads: a.threads,
    };
    let report = sim::ratio_heatmap(p, &n.side, &d.side, &cfg)?;
    let mut m = manifest("compare", source, &loaded);
    m.seed = Some(a.seed);
    m.runs = Some(a.runs);
    m.crn = Some(a.crn);
    m.threads = a.threads;
    m.horizon = a.horizon;
    m.balancing_variant = Some(a.balancing_variant.to_string());
    m.num = Some(num.into());
    m.den = Some(den.into());
    let mut sink = Sink::new(out, m)?;
    let summary = report.summary_toml();
    print!("{summary}");
    sink.write("ratios.csv", &report.to_csv())?;
    sink.write("summary.toml", &summary)?;
    if gnuplot {
        if p.locations == 2 {
            sink.write(
                "heatmap.gp",
                &output::gnuplot_script("ratios.csv", &format!("{num} / {den}")),
            )?;
        } else {
            log::warn!("--gnuplot needs two locations; skipped");
        }
    }
    sink.finish()?;
    Ok(true)
}

fn cmd_bounds(
    source: &Source,
    locations: Option<usize>,
    z_max: Option<f64>,
    out: Option<&Path>,
) -> anyhow::Result<bool> {
    let loaded = load(source, Purpose::Simulation, None)?;
    let p = &loaded.problem;
    let m = locations.unwrap_or(p.locations);
    let mut text = String::new();
    let mut fitted = false;
    match bounds::fit_sector_on(&p.ordering, z_max) {
        Ok(s) => {
            fitted = true;
            text.push_str(&format!("{s}\n"));
        }
        Err(e @ Error::NotSectorBoundable(_)) => {
            text.push_str(&format!(
                "{e}\n  hint: the affine fit below covers costs with a fixed charge\n"
            ));
        }
        Err(e) => return Err(e.into()),
    }
    match bounds::fit_affine_on(&p.ordering, m, z_max) {
        Ok(a) => {
            fitted = true;
            text.push_str(&format!("{a}\n"));
        }
        Err(e @ Error::NoAffineLower(_)) => text.push_str(&format!("{e}\n")),
        Err(e) => return Err(e.into()),
    }
    print!("{text}");
    let mut sink = Sink::new(out, manifest("bounds", source, &loaded))?;
    sink.write("bounds.txt", &text)?;
    sink.finish()?;
    Ok(fitted)
}

fn cmd_verify(
    suite: Suite,
    source: &Source,
    slope: Option<f64>,
    seed: u64,
    runs: usize,
    out: Option<&Path>,
) -> anyhow::Result<bool> {
    let (checks, mut m) = match suite {
        Suite::Theorem1 => (verify::theorem1(seed)?, Manifest::new("verify theorem1")),
        Suite::Oracle => (verify::oracle(seed, 10)?, Manifest::new("verify oracle")),
        Suite::BalancingMonotone => (
            verify::balancing_monotone()?,
            Manifest::new("verify balancing-monotone"),
        ),
        Suite::Transform => {
            let loaded = load(
                source,
                Purpose::Simulation,
                Some(InstanceId::TransformCheck),
            )?;
            let m = slope.unwrap_or_else(|| verify::default_slope(&loaded.problem));
            let checks = verify::transform(&loaded.problem, m, &verify::grid_config(seed, runs))?;
            let mut man = manifest("verify transform", source, &loaded);
            man.runs = Some(runs);
            (checks, std::mem::take(&mut man))
        }
    };
    m.seed = Some(seed);
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{} {}: {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    let pass = checks.iter().all(|c| c.pass);
    if suite == Suite::Transform {
        // The demand-only form omits the boundary term; it is informational.
        let corrected = checks
            .iter()
            .filter(|c| c.name.ends_with("boundary term"))
            .all(|c| c.pass);
        print!("{text}");
        let mut sink = Sink::new(out, m)?;
        sink.write("verify.txt", &text)?;
        sink.finish()?;
        return Ok(corrected);
    }
    print!("{text}");
    let mut sink = Sink::new(out, m)?;
    sink.write("verify.txt", &text)?;
    sink.finish()?;
    Ok(pass)
}

fn cmd_instance(name: Option<&str>, list: bool, out: Option<&Path>) -> anyhow::Result<bool> {
    if list || name.is_none() {
        for n in InstanceId::NAMES {
            println!("{n}");
        }
        return Ok(true);
    }
    let id: InstanceId = name.unwrap_or_default().parse()?;
    let text = config::to_toml(&instances::build(&id)?)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Solve {
            source,
            per_location,
            out,
        } => cmd_solve(source, *per_location, out.as_deref()),
        Command::Compare {
            source,
            num,
            den,
            sim,
            out,
            gnuplot,
        } => cmd_compare(source, num, den, sim, out.as_deref(), *gnuplot),
        Command::Bounds {
            source,
            locations,
            z_max,
            out,
        } => cmd_bounds(source, *locations, *z_max, out.as_deref()),
        Command::Verify {
            suite,
            source,
            slope,
            seed,
            runs,
            out,
        } => cmd_verify(*suite, source, *slope, *seed, *runs, out.as_deref()),
        Command::Instance { name, list, out } => {
            cmd_instance(name.as_deref(), *list, out.as_deref())
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<Usage>() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::Config(_)
            | Error::Io(_)
            | Error::Invalid(_)
            | Error::Incompatible(_)
            | Error::FitMismatch(_),
        ) => 2,
        _ if e.is::<std::io::Error>() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests;
