//! Entropic transport for the cost `|y - x|`: log-domain Sinkhorn, the
//! cycle-invariance check and the `ε → 0` sweep towards `K(μ, ν)`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::couplings::{
    kellerer_plan, relative_entropy, w1_oracle, IpfOptions, Verdict, Witness, DROP_BELOW,
};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::plan::{format_f64, FloatPlan, Plan};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SinkhornOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SinkhornResult {
    pub epsilon: f64,
    pub xs: Vec<Scalar>,
    pub ys: Vec<Scalar>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub plan: FloatPlan,
    pub iterations: usize,
    pub marginal_error: f64,
    pub converged: bool,
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Sinkhorn from zero potentials.
pub fn sinkhorn_solve(
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
    opts: SinkhornOptions,
) -> Result<SinkhornResult> {
    sinkhorn_solve_from(mu, nu, epsilon, opts, None)
}

/// Sinkhorn started from a given `ψ` (one value per atom of `ν`).
pub fn sinkhorn_solve_from(
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
    opts: SinkhornOptions,
    psi0: Option<&[f64]>,
) -> Result<SinkhornResult> {
    mu.require_atomic()?;
    nu.require_atomic()?;
    if mu.mass() != nu.mass() {
        return Err(Error::MassMismatch {
            mu: Box::new(mu.mass()),
            nu: Box::new(nu.mass()),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let xs: Vec<Scalar> = mu.atoms().iter().map(|a| a.x.clone()).collect();
    let ys: Vec<Scalar> = nu.atoms().iter().map(|a| a.x.clone()).collect();
    let la: Vec<f64> = mu.atoms().iter().map(|a| a.w.to_f64().ln()).collect();
    let lb: Vec<f64> = nu.atoms().iter().map(|a| a.w.to_f64().ln()).collect();
    let a: Vec<f64> = mu.atoms().iter().map(|t| t.w.to_f64()).collect();
    let cost: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| (y - x).abs().to_f64()).collect())
        .collect();
    let (n, m) = (xs.len(), ys.len());

    let mut phi = vec![0.0; n];
    let mut psi = match psi0 {
        Some(p) if p.len() == m => p.to_vec(),
        Some(_) => {
            return Err(Error::InvalidArgument(
                "warm start has the wrong length".into(),
            ))
        }
        None => vec![0.0; m],
    };
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            phi[i] =
                -epsilon * log_sum_exp((0..m).map(|j| lb[j] + (psi[j] - cost[i][j]) / epsilon));
        }
        for j in 0..m {
            psi[j] =
                -epsilon * log_sum_exp((0..n).map(|i| la[i] + (phi[i] - cost[i][j]) / epsilon));
        }
        // columns are exact after the ψ update
        err = (0..n)
            .map(|i| {
                let row =
                    log_sum_exp((0..m).map(|j| lb[j] + (phi[i] + psi[j] - cost[i][j]) / epsilon))
                        .exp();
                (a[i] * row - a[i]).abs()
            })
            .sum();
        if err < opts.tol {
            break;
        }
    }
    let plan = plan_from_potentials(&xs, &ys, &la, &lb, &phi, &psi, &cost, epsilon);
    let marginal_error = plan.marginal_error(mu, nu);
    Ok(SinkhornResult {
        epsilon,
        xs,
        ys,
        phi,
        psi,
        plan,
        iterations,
        marginal_error,
        converged: err < opts.tol,
    })
}

/// Ratio between consecutive levels of [`sinkhorn_solve_annealed`].
pub const ANNEAL_RATIO: f64 = 1.0 / 3.0;

/// Sinkhorn at `epsilon` reached through the levels `1, 1/3, 1/9, …`, each
/// started from the previous `ψ`. Cold starts at small `ε` can stall when
/// blocks of the support only talk through cells whose cost exceeds the
/// optimum, since the misallocated mass then drains at rate `~exp(-gap/ε)`.
/// `iterations` counts every level; `max_iter` applies per level.
pub fn sinkhorn_solve_annealed(
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
    opts: SinkhornOptions,
) -> Result<SinkhornResult> {
    let mut levels = Vec::new();
    let mut e = 1.0;
    while e > epsilon {
        levels.push(e);
        e *= ANNEAL_RATIO;
    }
    levels.push(epsilon);
    let mut warm: Option<Vec<f64>> = None;
    let mut spent = 0;
    let mut last = None;
    for eps in levels {
        let res = sinkhorn_solve_from(mu, nu, eps, opts, warm.as_deref())?;
        spent += res.iterations;
        warm = Some(res.psi.clone());
        last = Some(res);
    }
    let mut res = last.expect("at least one level");
    res.iterations = spent;
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn plan_from_potentials(
    xs: &[Scalar],
    ys: &[Scalar],
    la: &[f64],
    lb: &[f64],
    phi: &[f64],
    psi: &[f64],
    cost: &[Vec<f64>],
    epsilon: f64,
) -> FloatPlan {
    let mut triples = Vec::new();
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            let w = (la[i] + lb[j] + (phi[i] + psi[j] - cost[i][j]) / epsilon).exp();
            if w > DROP_BELOW {
                triples.push((xs[i].clone(), ys[j].clone(), w));
            }
        }
    }
    Plan::new(triples).expect("exponentials are non-negative")
}

/// Checks that `res.plan` couples `(μ, ν)`, that it equals
/// `μ(x) ν(y) exp((φ(x) + ψ(y) - |y - x|) / ε)` cell by cell, and that the
/// cycle identity holds on 2-cycles and sampled 3-cycles.
pub fn verify_eps_invariance(
    res: &SinkhornResult,
    mu: &Measure,
    nu: &Measure,
    tol: f64,
) -> Verdict {
    let mass = mu.mass().to_f64();
    for (x, y, expected) in potential_cells(res, mu, nu) {
        let found = res.plan.weight_at(&x, &y);
        let expected = if expected > DROP_BELOW { expected } else { 0.0 };
        if (found - expected).abs() > tol * mass {
            return Verdict::fail(Witness::Marginal {
                cell: (x, y),
                expected,
                found,
            });
        }
    }
    if res.plan.marginal_error(mu, nu) > tol * mass {
        let (x, y) = res
            .plan
            .cells()
            .first()
            .map(|c| (c.x.clone(), c.y.clone()))
            .unwrap_or_default();
        return Verdict::fail(Witness::Marginal {
            cell: (x, y),
            expected: 0.0,
            found: res.plan.marginal_error(mu, nu),
        });
    }
    check_cycle_invariance(&res.plan, mu, nu, res.epsilon, tol)
}

fn potential_cells(res: &SinkhornResult, mu: &Measure, nu: &Measure) -> Vec<(Scalar, Scalar, f64)> {
    let mut out = Vec::with_capacity(res.xs.len() * res.ys.len());
    for (i, x) in res.xs.iter().enumerate() {
        for (j, y) in res.ys.iter().enumerate() {
            let c = (y - x).abs().to_f64();
            let w = mu.atom_weight(x).to_f64()
                * nu.atom_weight(y).to_f64()
                * ((res.phi[i] + res.psi[j] - c) / res.epsilon).exp();
            out.push((x.clone(), y.clone(), w));
        }
    }
    out
}

const SAMPLED_CYCLES: usize = 256;

/// Cycle identity of ε-cyclical invariance, compared in log space:
/// `Σ log f(x_i, y_i) + |y_i - x_i| / ε = Σ log f(x_i, y_{i+1}) + |y_{i+1} - x_i| / ε`
/// with `f = dπ / d(μ ⊗ ν)`. Cycles through cells that underflowed to zero
/// are skipped. All 2-cycles are checked; 3-cycles are sampled with a fixed
/// seed.
pub fn check_cycle_invariance(
    pi: &FloatPlan,
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
    tol: f64,
) -> Verdict {
    let cells = pi.cells();
    let log_term = |x: &Scalar, y: &Scalar| -> Option<f64> {
        let w = pi.weight_at(x, y);
        if w <= 0.0 {
            return None;
        }
        let f = w / (mu.atom_weight(x).to_f64() * nu.atom_weight(y).to_f64());
        Some(f.ln() + (y - x).abs().to_f64() / epsilon)
    };
    let check = |idx: &[usize]| -> Option<Witness> {
        let k = idx.len();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for t in 0..k {
            let (c, d) = (&cells[idx[t]], &cells[idx[(t + 1) % k]]);
            lhs += log_term(&c.x, &c.y)?;
            rhs += log_term(&c.x, &d.y)?;
        }
        let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
        ((lhs - rhs).abs() > tol * scale).then(|| Witness::Factorization {
            cells: idx
                .iter()
                .map(|&i| (cells[i].x.clone(), cells[i].y.clone()))
                .collect(),
            lhs,
            rhs,
        })
    };
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if let Some(w) = check(&[i, j]) {
                return Verdict::fail(w);
            }
        }
    }
    if cells.len() >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SAMPLED_CYCLES {
            let idx = sample(&mut rng, cells.len(), 3).into_vec();
            if let Some(w) = check(&idx) {
                return Verdict::fail(w);
            }
        }
    }
    Verdict::pass()
}

/// `½ Σ |w1 - w2|` over the union of supports.
pub fn tv_distance(p1: &FloatPlan, p2: &FloatPlan) -> f64 {
    let diff = p1.add(&p2.map_weights(|w| -w));
    // `add` sums matching cells, so opposite weights cancel exactly
    diff.cells().iter().map(|c| c.w.abs()).sum::<f64>() / 2.0
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub tv: f64,
    pub cost: f64,
    pub cost_gap: f64,
    pub entropy: f64,
    pub iterations: usize,
    pub marginal_error: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub schedule: Vec<f64>,
    pub warm_start: bool,
    /// Marginal error of the reference plan `K(μ, ν)`, which bounds how
    /// small the reported distances can get.
    pub reference_marginal_error: f64,
    pub w1: f64,
    pub records: Vec<SweepRecord>,
    pub eventually_decreasing: bool,
    pub cost_nonincreasing: bool,
    pub entropy_nondecreasing: bool,
}

/// Slack used by the monotonicity diagnostics.
pub const MONOTONE_SLACK: f64 = 1e-12;

impl SweepReport {
    pub fn final_tv(&self) -> Option<f64> {
        self.records.last().map(|r| r.tv)
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "epsilon",
            "tv",
            "cost",
            "cost_gap",
            "entropy",
            "iterations",
            "marginal_error",
            "converged",
        ])
        .expect("in-memory write");
        for r in &self.records {
            w.write_record([
                format_f64(r.epsilon),
                format_f64(r.tv),
                format_f64(r.cost),
                format_f64(r.cost_gap),
                format_f64(r.entropy),
                r.iterations.to_string(),
                format_f64(r.marginal_error),
                r.converged.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// TV is nonincreasing over the last `⌈n/2⌉` schedule entries, up to
/// `slack`. Once TV reaches the solver tolerance it only carries noise, so
/// callers pass a slack at least that large.
pub fn eventually_decreasing(tvs: &[f64], slack: f64) -> bool {
    let tail = tvs.len().div_ceil(2);
    tvs[tvs.len() - tail..]
        .windows(2)
        .all(|w| w[1] <= w[0] + slack)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub sinkhorn: SinkhornOptions,
    pub ipf: IpfOptions,
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            sinkhorn: SinkhornOptions::default(),
            ipf: IpfOptions::default(),
            warm_start: true,
        }
    }
}

pub const DEFAULT_SCHEDULE: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];

/// Solves along a strictly decreasing schedule and measures the distance
/// to `K(μ, ν)`. Non-converged solves are recorded, not raised.
pub fn sweep_to_limit(
    mu: &Measure,
    nu: &Measure,
    schedule: &[f64],
    opts: SweepOptions,
) -> Result<SweepReport> {
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(
            "schedule must be non-empty and positive".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "schedule must be strictly decreasing".into(),
        ));
    }
    let k = kellerer_plan(mu, nu, opts.ipf)?;
    let w1 = w1_oracle(mu, nu)?.to_f64();
    let mut records = Vec::with_capacity(schedule.len());
    let mut warm: Option<Vec<f64>> = None;
    for &eps in schedule {
        let res = sinkhorn_solve_from(mu, nu, eps, opts.sinkhorn, warm.as_deref())?;
        let cost = res.plan.cost();
        records.push(SweepRecord {
            epsilon: eps,
            tv: tv_distance(&res.plan, &k.plan),
            cost,
            cost_gap: cost - w1,
            entropy: relative_entropy(&res.plan, mu, nu),
            iterations: res.iterations,
            marginal_error: res.marginal_error,
            converged: res.converged,
        });
        if opts.warm_start {
            warm = Some(res.psi);
        }
    }
    let tvs: Vec<f64> = records.iter().map(|r| r.tv).collect();
    let slack = |a: f64| MONOTONE_SLACK * (1.0 + a.abs());
    Ok(SweepReport {
        schedule: schedule.to_vec(),
        warm_start: opts.warm_start,
        reference_marginal_error: k.marginal_error,
        w1,
        eventually_decreasing: eventually_decreasing(&tvs, MONOTONE_SLACK.max(opts.sinkhorn.tol)),
        cost_nonincreasing: records
            .windows(2)
            .all(|w| w[1].cost <= w[0].cost + slack(w[0].cost)),
        entropy_nondecreasing: records
            .windows(2)
            .all(|w| w[1].entropy >= w[0].entropy - slack(w[0].entropy)),
        records,
    })
}
