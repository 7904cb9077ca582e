//! Command-line surface. Every subcommand reads measures as JSON and plans as
//! `x,y,w` CSV, and prints one JSON document. Exit codes: 0 success, 1 a
//! checked property is false, 2 bad input, 3 a solver ran out of iterations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::couplings::{
    check_optimal_crossings, is_strongly_multiplicative_on, is_weakly_multiplicative,
    kellerer_plan, kellerer_plan_exact, monotone_coupling, relative_entropy, w1_oracle, HalfPlane,
    IpfOptions, Verdict,
};
use crate::decomposition::{barrier_set, marginal_components_of, Component};
use crate::entropic::{
    check_cycle_invariance, sinkhorn_solve, sinkhorn_solve_annealed, sweep_to_limit,
    verify_eps_invariance, SinkhornOptions, SweepOptions, DEFAULT_SCHEDULE,
};
use crate::error::{Error, Result};
use crate::grid::LineSet;
use crate::instances;
use crate::measure::Measure;
use crate::orders::Relation;
use crate::plan::{FloatPlan, Plan, TransportPlan, Weight};
use crate::svg::decomposition_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "otline",
    version,
    about = "Optimal transport on the line with cost |x - y|"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Line components, boundary sets and marginal components of (μ, ν).
    Decompose {
        #[command(flatten)]
        pair: PairArgs,
        /// Also draw both CDFs with the components shaded.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// The barrier set B(μ, ν).
    Barriers {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Generalized Kellerer plan K(μ, ν).
    Kellerer {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Use the exact rational construction instead of IPF.
        #[arg(long)]
        exact: bool,
        /// Write the plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Entropic plan at one regularization level.
    Sinkhorn {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Regularization level, in cost units.
        #[arg(long)]
        epsilon: f64,
        /// Reach epsilon through geometric levels from 1, warm-starting each.
        #[arg(long)]
        anneal: bool,
        /// Write the plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Entropic plans along a decreasing schedule, compared with K(μ, ν).
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<f64>>,
        /// Start every level from zero potentials.
        #[arg(long)]
        no_warm_start: bool,
        /// Also write the per-level table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Order, optimality and multiplicativity checks.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Cost of a plan (or of the built-in constructions) against the exact W1.
    OracleCompare {
        #[command(flatten)]
        pair: PairArgs,
        /// Plan to compare; defaults to the monotone and Kellerer plans.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Cost tolerance for float plans.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write one of the built-in instances as a pair of measure files.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        /// Directory receiving mu.json and nu.json.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cells of the discretized uniform part (semi-discrete instance).
        #[arg(long, default_value_t = 8)]
        cells: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// g1 ≤ g2 for the stochastic order or one of the reinforced orders.
    Order {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_relation)]
        relation: Relation,
    },
    /// No non-free crossing in the support of a plan.
    Optimal { plan: PathBuf },
    /// Weak multiplicativity, or strong multiplicativity on a half-plane.
    Multiplicative {
        plan: PathBuf,
        #[arg(long, value_parser = parse_halfplane)]
        strong: Option<HalfPlane>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// First marginal (measure JSON).
    pub mu: PathBuf,
    /// Second marginal (measure JSON).
    pub nu: PathBuf,
    /// Replace every density piece by N atoms before solving.
    #[arg(long)]
    pub discretize: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Stop once the marginal L1 error falls below this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget; running out exits with code 3.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExampleName {
    MixedBoundary,
    UniformWindow,
    PointSplit,
    Shifted,
    SemiDiscrete,
    Random,
}

fn parse_relation(s: &str) -> std::result::Result<Relation, String> {
    match s {
        "st" => Ok(Relation::Stochastic),
        "F" => Ok(Relation::ReinforcedLarge),
        "G" => Ok(Relation::ReinforcedStrict),
        _ => Err(format!("unknown relation '{s}' (expected st, F or G)")),
    }
}

fn parse_halfplane(s: &str) -> std::result::Result<HalfPlane, String> {
    match s {
        "F" => Ok(HalfPlane::F),
        "G" => Ok(HalfPlane::G),
        "F~" | "Ftilde" => Ok(HalfPlane::FTilde),
        "G~" | "Gtilde" => Ok(HalfPlane::GTilde),
        _ => Err(format!(
            "unknown half-plane '{s}' (expected F, G, Ftilde or Gtilde)"
        )),
    }
}

/// Result of a successful run: the JSON document and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome {
            report,
            code: EXIT_OK,
        }
    }

    fn verdict(report: Value, holds: bool) -> Self {
        Outcome {
            report,
            code: if holds { EXIT_OK } else { EXIT_FALSE },
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_INPUT,
    }
}

pub fn error_report(e: &Error) -> Value {
    json!({ "error": e.kind(), "message": e.to_string() })
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn read_measure(path: &Path) -> Result<Measure> {
    let text = read_text(path)?;
    Measure::parse_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl PairArgs {
    /// Both marginals, discretized if asked, with equal positive masses.
    fn load(&self) -> Result<(Measure, Measure)> {
        let (mut mu, mut nu) = (read_measure(&self.mu)?, read_measure(&self.nu)?);
        if let Some(n) = self.discretize {
            mu = mu.discretize(n)?;
            nu = nu.discretize(n)?;
        }
        if mu.mass() != nu.mass() {
            return Err(Error::MassMismatch {
                mu: Box::new(mu.mass()),
                nu: Box::new(nu.mass()),
            });
        }
        if mu.is_zero() {
            return Err(Error::InvalidMeasure("marginals have zero mass".into()));
        }
        Ok((mu, nu))
    }
}

fn ipf_options(s: &SolverArgs) -> IpfOptions {
    let d = IpfOptions::default();
    IpfOptions {
        tol: s.tol.unwrap_or(d.tol),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
    }
}

fn sinkhorn_options(s: &SolverArgs) -> SinkhornOptions {
    let d = SinkhornOptions::default();
    SinkhornOptions {
        tol: s.tol.unwrap_or(d.tol),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
    }
}

enum LoadedPlan {
    Exact(TransportPlan),
    Float(FloatPlan),
}

/// Rational weights when every entry parses exactly, floats otherwise.
fn read_plan(path: &Path) -> Result<LoadedPlan> {
    let text = read_text(path)?;
    match TransportPlan::read_csv(text.as_bytes()) {
        Ok(p) => Ok(LoadedPlan::Exact(p)),
        Err(Error::Parse(_)) => FloatPlan::read_csv(text.as_bytes()).map(LoadedPlan::Float),
        Err(e) => Err(e),
    }
}

fn write_plan<W: Weight>(path: &Path, plan: &Plan<W>) -> Result<()> {
    plan.write_csv(fs::File::create(path)?)
}

fn set_json(s: &LineSet) -> Value {
    Value::String(s.to_string())
}

fn component_json(c: &Component, pair: &(Measure, Measure)) -> Value {
    json!({ "a": c.a, "b": c.b, "mu": pair.0.to_json(), "nu": pair.1.to_json() })
}

fn verdict_json(v: &Verdict) -> Value {
    serde_json::to_value(v).expect("verdicts serialize")
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Decompose { pair, svg } => decompose(pair, svg.as_deref()),
        Command::Barriers { pair } => {
            let (mu, nu) = pair.load()?;
            let b = barrier_set(&mu, &nu)?;
            Ok(Outcome::ok(json!({ "barrier_set": set_json(&b) })))
        }
        Command::Kellerer {
            pair,
            solver,
            exact,
            plan,
        } => kellerer(pair, solver, *exact, plan.as_deref()),
        Command::Sinkhorn {
            pair,
            solver,
            epsilon,
            anneal,
            plan,
        } => sinkhorn(pair, solver, *epsilon, *anneal, plan.as_deref()),
        Command::Sweep {
            pair,
            solver,
            schedule,
            no_warm_start,
            csv,
        } => {
            let (mu, nu) = pair.load()?;
            let schedule = schedule
                .clone()
                .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
            let opts = SweepOptions {
                sinkhorn: sinkhorn_options(solver),
                ipf: ipf_options(solver),
                warm_start: !no_warm_start,
            };
            let rep = sweep_to_limit(&mu, &nu, &schedule, opts)?;
            if let Some(path) = csv {
                fs::write(path, rep.to_csv())?;
            }
            let code = if rep.all_converged() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            };
            Ok(Outcome {
                report: serde_json::to_value(&rep).expect("report serializes"),
                code,
            })
        }
        Command::Check(c) => check(c),
        Command::OracleCompare { pair, plan, tol } => oracle_compare(pair, plan.as_deref(), *tol),
        Command::Example {
            name,
            dir,
            seed,
            cells,
        } => example(*name, dir, *seed, *cells),
    }
}

fn decompose(pair: &PairArgs, svg: Option<&Path>) -> Result<Outcome> {
    let (mu, nu) = pair.load()?;
    let (dec, mc) = marginal_components_of(&mu, &nu)?;
    let barriers = barrier_set(&mu, &nu)?;
    if let Some(path) = svg {
        fs::write(path, decomposition_svg(&dec))?;
    }
    let report = json!({
        "mass": mu.mass(),
        "e_plus": set_json(&dec.e_plus()),
        "e_minus": set_json(&dec.e_minus()),
        "e_eq": set_json(dec.e_eq()),
        "positive": dec.pos.iter().zip(&mc.pos).map(|(c, p)| component_json(c, p)).collect::<Vec<_>>(),
        "negative": dec.neg.iter().zip(&mc.neg).map(|(c, p)| component_json(c, p)).collect::<Vec<_>>(),
        "boundary": {
            "left_plus": dec.b_l_plus(),
            "right_plus": dec.b_r_plus(),
            "left_minus": dec.b_l_minus(),
            "right_minus": dec.b_r_minus(),
            "all": dec.boundary(),
        },
        "fixed": {
            "mu_eq1": mc.mu_eq1.to_json(),
            "mu_eq2": mc.mu_eq2.to_json(),
            "nu_eq1": mc.nu_eq1.to_json(),
            "nu_eq2": mc.nu_eq2.to_json(),
        },
        "barrier_set": set_json(&barriers),
    });
    Ok(Outcome::ok(report))
}

fn kellerer(
    pair: &PairArgs,
    solver: &SolverArgs,
    exact: bool,
    out: Option<&Path>,
) -> Result<Outcome> {
    let (mu, nu) = pair.load()?;
    let w1 = w1_oracle(&mu, &nu)?;
    let report = if exact {
        let k = kellerer_plan_exact(&mu, &nu)?;
        if let Some(path) = out {
            write_plan(path, &k)?;
        }
        json!({
            "mode": "exact",
            "w1": w1,
            "cost": k.cost(),
            "entropy": relative_entropy(&k, &mu, &nu),
            "plan": k,
        })
    } else {
        let k = kellerer_plan(&mu, &nu, ipf_options(solver))?;
        if let Some(path) = out {
            write_plan(path, &k.plan)?;
        }
        let fits = |cs: &[crate::couplings::KellererComponent]| -> Vec<Value> {
            cs.iter()
                .map(|c| json!({ "iterations": c.iterations, "residual": c.residual }))
                .collect()
        };
        json!({
            "mode": "ipf",
            "w1": w1,
            "cost": k.plan.cost(),
            "cost_gap": (k.plan.cost() - w1.to_f64()).abs(),
            "entropy": relative_entropy(&k.plan, &mu, &nu),
            "marginal_error": k.marginal_error,
            "positive": fits(&k.positive),
            "negative": fits(&k.negative),
            "plan": k.plan,
        })
    };
    Ok(Outcome::ok(report))
}

fn sinkhorn(
    pair: &PairArgs,
    solver: &SolverArgs,
    epsilon: f64,
    anneal: bool,
    out: Option<&Path>,
) -> Result<Outcome> {
    let (mu, nu) = pair.load()?;
    let opts = sinkhorn_options(solver);
    let res = if anneal {
        sinkhorn_solve_annealed(&mu, &nu, epsilon, opts)?
    } else {
        sinkhorn_solve(&mu, &nu, epsilon, opts)?
    };
    if let Some(path) = out {
        write_plan(path, &res.plan)?;
    }
    let check_tol = opts.tol.max(1e-8);
    let report = json!({
        "epsilon": res.epsilon,
        "annealed": anneal,
        "converged": res.converged,
        "iterations": res.iterations,
        "marginal_error": res.marginal_error,
        "cost": res.plan.cost(),
        "entropy": relative_entropy(&res.plan, &mu, &nu),
        "eps_invariance": verdict_json(&verify_eps_invariance(&res, &mu, &nu, check_tol)),
        "cycle_invariance": verdict_json(&check_cycle_invariance(&res.plan, &mu, &nu, epsilon, check_tol)),
        "weakly_multiplicative": verdict_json(&is_weakly_multiplicative(&res.plan, check_tol)),
        "xs": res.xs,
        "ys": res.ys,
        "phi": res.phi,
        "psi": res.psi,
        "plan": res.plan,
    });
    let code = if res.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    Ok(Outcome { report, code })
}

fn check(c: &CheckCommand) -> Result<Outcome> {
    match c {
        CheckCommand::Order { pair, relation } => {
            let mu = read_measure(&pair.mu)?;
            let nu = read_measure(&pair.nu)?;
            let v = relation.check(&mu, &nu);
            let report =
                json!({ "relation": relation.name(), "holds": v.holds, "witness_t": v.witness_t });
            Ok(Outcome::verdict(report, v.holds))
        }
        CheckCommand::Optimal { plan } => {
            let v = match read_plan(plan)? {
                LoadedPlan::Exact(p) => check_optimal_crossings(&p),
                LoadedPlan::Float(p) => check_optimal_crossings(&p),
            };
            Ok(Outcome::verdict(verdict_json(&v), v.holds))
        }
        CheckCommand::Multiplicative { plan, strong, tol } => {
            let run = |v: Verdict| Outcome::verdict(verdict_json(&v), v.holds);
            Ok(match (read_plan(plan)?, strong) {
                (LoadedPlan::Exact(p), None) => run(is_weakly_multiplicative(&p, *tol)),
                (LoadedPlan::Float(p), None) => run(is_weakly_multiplicative(&p, *tol)),
                (LoadedPlan::Exact(p), Some(h)) => run(is_strongly_multiplicative_on(&p, *h, *tol)),
                (LoadedPlan::Float(p), Some(h)) => run(is_strongly_multiplicative_on(&p, *h, *tol)),
            })
        }
    }
}

fn oracle_compare(pair: &PairArgs, plan: Option<&Path>, tol: f64) -> Result<Outcome> {
    let (mu, nu) = pair.load()?;
    let w1 = w1_oracle(&mu, &nu)?;
    let entry = |name: &str, cost: Value, couples: bool, optimal: bool| json!({ "plan": name, "cost": cost, "couples": couples, "optimal": optimal });
    let rows = match plan {
        Some(path) => vec![match read_plan(path)? {
            LoadedPlan::Exact(p) => {
                let couples = p.couples(&mu, &nu, 0.0);
                entry("input", json!(p.cost()), couples, couples && p.cost() == w1)
            }
            LoadedPlan::Float(p) => {
                let couples = p.couples(&mu, &nu, tol);
                entry(
                    "input",
                    json!(p.cost()),
                    couples,
                    couples && (p.cost() - w1.to_f64()).abs() <= tol,
                )
            }
        }],
        None => {
            let m = monotone_coupling(&mu, &nu)?;
            let k = kellerer_plan_exact(&mu, &nu)?;
            [("monotone", m), ("kellerer", k)]
                .into_iter()
                .map(|(name, p)| {
                    let couples = p.couples(&mu, &nu, 0.0);
                    entry(name, json!(p.cost()), couples, couples && p.cost() == w1)
                })
                .collect()
        }
    };
    let all = rows.iter().all(|r| r["optimal"] == Value::Bool(true));
    Ok(Outcome::verdict(json!({ "w1": w1, "plans": rows }), all))
}

fn example(name: ExampleName, dir: &Path, seed: u64, cells: usize) -> Result<Outcome> {
    let (mu, nu) = match name {
        ExampleName::MixedBoundary => instances::mixed_boundary_pair(),
        ExampleName::UniformWindow => instances::uniform_window_pair(),
        ExampleName::PointSplit => instances::point_split_pair(),
        ExampleName::Shifted => instances::shifted_pair(),
        ExampleName::SemiDiscrete => {
            if cells == 0 {
                return Err(Error::InvalidArgument("--cells must be positive".into()));
            }
            instances::semi_discrete_pair(cells)
        }
        ExampleName::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            instances::random_atomic_pair(&mut rng, instances::RandomPairSpec::default())
        }
    };
    fs::create_dir_all(dir)?;
    let (mu_path, nu_path) = (dir.join("mu.json"), dir.join("nu.json"));
    for (m, path) in [(&mu, &mu_path), (&nu, &nu_path)] {
        let text = serde_json::to_string_pretty(&m.to_json()).expect("measures serialize");
        fs::write(path, text + "\n")?;
    }
    Ok(Outcome::ok(json!({
        "mu": mu_path.display().to_string(),
        "nu": nu_path.display().to_string(),
        "mass": mu.mass(),
    })))
}

/// Parses `args`, runs the command and returns the process exit code. The
/// report goes to stdout (or `--out`), errors go to stderr as JSON.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = run(&cli).and_then(|o| {
        let text = render(&o.report);
        match &cli.out {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(o.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprint!("{}", render(&error_report(&e)));
            exit_code(&e)
        }
    }
}
