//! Couplings: monotone coupling, cost and `W_1`, relative entropy,
//! product-form (Kellerer) couplings on half-planes, the assembled plan
//! `K(μ, ν)`, and optimality / multiplicativity checks.

use serde::Serialize;

use crate::decomposition::{marginal_components_of, MarginalComponents};
use crate::error::{Error, Result};
use crate::grid::PairGrid;
use crate::measure::Measure;
use crate::orders::{leq_f, leq_g};
use crate::plan::{FloatPlan, Plan, TransportPlan, Weight};
use crate::scalar::Scalar;

/// Cells below this weight are dropped from solver outputs.
pub const DROP_BELOW: f64 = 1e-15;

/// Closed and open half-planes above and below the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HalfPlane {
    /// `x ≤ y`
    F,
    /// `x < y`
    G,
    /// `x ≥ y`
    FTilde,
    /// `x > y`
    GTilde,
}

impl HalfPlane {
    pub fn contains(self, x: &Scalar, y: &Scalar) -> bool {
        match self {
            HalfPlane::F => x <= y,
            HalfPlane::G => x < y,
            HalfPlane::FTilde => x >= y,
            HalfPlane::GTilde => x > y,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Two support points forming a non-free crossing.
    Crossing {
        first: (Scalar, Scalar),
        second: (Scalar, Scalar),
    },
    /// A product identity that fails: `lhs != rhs` for the listed cells.
    Factorization {
        cells: Vec<(Scalar, Scalar)>,
        lhs: f64,
        rhs: f64,
    },
    /// A cell whose weight is not reproduced by the claimed structure.
    Marginal {
        cell: (Scalar, Scalar),
        expected: f64,
        found: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn pass() -> Self {
        Verdict {
            holds: true,
            witness: None,
        }
    }

    pub fn fail(w: Witness) -> Self {
        Verdict {
            holds: false,
            witness: Some(w),
        }
    }
}

fn check_pair(mu: &Measure, nu: &Measure) -> Result<()> {
    mu.require_atomic()?;
    nu.require_atomic()?;
    let (m1, m2) = (mu.mass(), nu.mass());
    if m1 != m2 {
        return Err(Error::MassMismatch {
            mu: Box::new(m1),
            nu: Box::new(m2),
        });
    }
    Ok(())
}

/// Quantile coupling by the northwest-corner rule over sorted supports.
pub fn monotone_coupling(mu: &Measure, nu: &Measure) -> Result<TransportPlan> {
    check_pair(mu, nu)?;
    let (a, b) = (mu.atoms(), nu.atoms());
    let mut triples = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut ra = a.first().map(|t| t.w.clone()).unwrap_or_default();
    let mut rb = b.first().map(|t| t.w.clone()).unwrap_or_default();
    while i < a.len() && j < b.len() {
        let w = ra.clone().min(rb.clone());
        triples.push((a[i].x.clone(), b[j].x.clone(), w.clone()));
        ra -= &w;
        rb -= &w;
        if ra.is_zero() {
            i += 1;
            if let Some(t) = a.get(i) {
                ra = t.w.clone();
            }
        }
        if rb.is_zero() {
            j += 1;
            if let Some(t) = b.get(j) {
                rb = t.w.clone();
            }
        }
    }
    Plan::new(triples)
}

/// `∫ |F_μ^+ - F_ν^+| dt`, exact.
pub fn w1_oracle(mu: &Measure, nu: &Measure) -> Result<Scalar> {
    let (m1, m2) = (mu.mass(), nu.mass());
    if m1 != m2 {
        return Err(Error::MassMismatch {
            mu: Box::new(m1),
            nu: Box::new(m2),
        });
    }
    Ok(PairGrid::new(mu, nu).integral_abs_diff())
}

/// Per-cell terms `w log(w / (μ(x) ν(y)))`, or `None` if some cell lies
/// outside `spt μ × spt ν`.
pub fn entropy_terms<W: Weight>(pi: &Plan<W>, mu: &Measure, nu: &Measure) -> Option<Vec<f64>> {
    pi.cells()
        .iter()
        .map(|c| {
            let (a, b) = (mu.atom_weight(&c.x), nu.atom_weight(&c.y));
            if a.is_zero() || b.is_zero() {
                return None;
            }
            let w = c.w.to_f64();
            Some(w * (w.ln() - a.to_f64().ln() - b.to_f64().ln()))
        })
        .collect()
}

/// `Ent(π | μ ⊗ ν)`; `+∞` when `π` is not absolutely continuous.
pub fn relative_entropy<W: Weight>(pi: &Plan<W>, mu: &Measure, nu: &Measure) -> f64 {
    match entropy_terms(pi, mu, nu) {
        Some(t) => t.iter().sum(),
        None => f64::INFINITY,
    }
}

/// Optimality through crossings: the plan is cyclically monotone iff no two
/// support points `(x1, y1)`, `(x2, y2)` with `x1 < x2`, `y2 < y1` satisfy
/// `x1 < y1` and `y2 < x2`. Ties in `x` or in `y` are skipped since the swap
/// they would induce is the identity.
pub fn check_optimal_crossings<W: Weight>(pi: &Plan<W>) -> Verdict {
    let cells = pi.cells();
    for (i, c1) in cells.iter().enumerate() {
        if c1.y <= c1.x {
            continue;
        }
        // cells are sorted by x, so only later cells can have x2 > x1
        for c2 in &cells[i + 1..] {
            if c1.x < c2.x && c2.y < c1.y && c2.y < c2.x {
                return Verdict::fail(Witness::Crossing {
                    first: (c1.x.clone(), c1.y.clone()),
                    second: (c2.x.clone(), c2.y.clone()),
                });
            }
        }
    }
    Verdict::pass()
}

/// Dense view of a plan restricted to some cells.
struct Dense<W> {
    xs: Vec<Scalar>,
    ys: Vec<Scalar>,
    w: Vec<Vec<W>>,
}

impl<W: Weight> Dense<W> {
    fn new(pi: &Plan<W>) -> Self {
        let (xs, ys) = (pi.xs(), pi.ys());
        let mut w = vec![vec![W::zero(); ys.len()]; xs.len()];
        for c in pi.cells() {
            let i = xs.binary_search(&c.x).expect("x in support");
            let j = ys.binary_search(&c.y).expect("y in support");
            w[i][j] = c.w.clone();
        }
        Dense { xs, ys, w }
    }
}

/// Whether `R` is a product measure, through
/// `R(ℝ²) R(I_x × I_y) = R(I_x × ℝ) R(ℝ × I_y)` on the support grid.
fn product_defect<W: Weight>(r: &Plan<W>, tol: f64) -> Option<(Scalar, Scalar, f64, f64)> {
    if r.is_empty() {
        return None;
    }
    let d = Dense::new(r);
    let (nx, ny) = (d.xs.len(), d.ys.len());
    // 2-D prefix sums: s[i][j] = R(x ≤ xs[i-1], y ≤ ys[j-1])
    let mut s = vec![vec![W::zero(); ny + 1]; nx + 1];
    for i in 0..nx {
        for j in 0..ny {
            s[i + 1][j + 1] = s[i][j + 1].add(&s[i + 1][j]).sub(&s[i][j]).add(&d.w[i][j]);
        }
    }
    let total = s[nx][ny].clone();
    for i in 1..=nx {
        for j in 1..=ny {
            let lhs = total.mul(&s[i][j]);
            let rhs = s[i][ny].mul(&s[nx][j]);
            if !lhs.close(&rhs, tol) {
                return Some((
                    d.xs[i - 1].clone(),
                    d.ys[j - 1].clone(),
                    lhs.to_f64(),
                    rhs.to_f64(),
                ));
            }
        }
    }
    None
}

/// Candidate thresholds: every support coordinate, midpoints between
/// consecutive ones, and one point beyond each end.
fn thresholds<W: Weight>(pi: &Plan<W>) -> Vec<Scalar> {
    let mut pts: Vec<Scalar> = pi.xs();
    pts.extend(pi.ys());
    pts.sort();
    pts.dedup();
    let mut out = Vec::with_capacity(2 * pts.len() + 1);
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        out.push(first - Scalar::one());
        out.push(last + Scalar::one());
    }
    for w in pts.windows(2) {
        out.push(w[0].midpoint(&w[1]));
    }
    out.extend(pts);
    out.sort();
    out
}

/// Weak multiplicativity: restrictions to `]-∞, t] × [t, +∞[` and
/// `[t, +∞[ × ]-∞, t]` are product measures for every `t`. Float plans are
/// compared with tolerance `tol · mass²`; rational plans exactly.
pub fn is_weakly_multiplicative<W: Weight>(pi: &Plan<W>, tol: f64) -> Verdict {
    let m = pi.mass().to_f64();
    let scaled = tol * m * m;
    for t in thresholds(pi) {
        let upper = pi.restrict(|x, y| x <= &t && y >= &t);
        let lower = pi.restrict(|x, y| x >= &t && y <= &t);
        for r in [upper, lower] {
            if let Some((x, y, lhs, rhs)) = product_defect(&r, scaled) {
                return Verdict::fail(Witness::Factorization {
                    cells: vec![(t.clone(), t.clone()), (x, y)],
                    lhs,
                    rhs,
                });
            }
        }
    }
    Verdict::pass()
}

/// Strong multiplicativity on a half-plane: the plan is concentrated on it,
/// every cross ratio of cells inside it balances, and no cell inside it is
/// missing between an active row and an active column.
pub fn is_strongly_multiplicative_on<W: Weight>(pi: &Plan<W>, hp: HalfPlane, tol: f64) -> Verdict {
    if let Some(c) = pi.cells().iter().find(|c| !hp.contains(&c.x, &c.y)) {
        return Verdict::fail(Witness::Marginal {
            cell: (c.x.clone(), c.y.clone()),
            expected: 0.0,
            found: c.w.to_f64(),
        });
    }
    let m = pi.mass().to_f64();
    let scaled = tol * m * m;
    let d = Dense::new(pi);
    let inside = |i: usize, j: usize| hp.contains(&d.xs[i], &d.ys[j]);
    for i in 0..d.xs.len() {
        for j in 0..d.ys.len() {
            if inside(i, j) && d.w[i][j].is_zero() {
                return Verdict::fail(Witness::Marginal {
                    cell: (d.xs[i].clone(), d.ys[j].clone()),
                    expected: f64::NAN,
                    found: 0.0,
                });
            }
        }
    }
    for i in 0..d.xs.len() {
        for k in i + 1..d.xs.len() {
            for j in 0..d.ys.len() {
                for l in j + 1..d.ys.len() {
                    if !(inside(i, j) && inside(i, l) && inside(k, j) && inside(k, l)) {
                        continue;
                    }
                    let lhs = d.w[i][j].mul(&d.w[k][l]);
                    let rhs = d.w[i][l].mul(&d.w[k][j]);
                    if !lhs.close(&rhs, scaled) {
                        return Verdict::fail(Witness::Factorization {
                            cells: vec![
                                (d.xs[i].clone(), d.ys[j].clone()),
                                (d.xs[k].clone(), d.ys[l].clone()),
                                (d.xs[i].clone(), d.ys[l].clone()),
                                (d.xs[k].clone(), d.ys[j].clone()),
                            ],
                            lhs: lhs.to_f64(),
                            rhs: rhs.to_f64(),
                        });
                    }
                }
            }
        }
    }
    Verdict::pass()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IpfOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Product-form coupling `u(x) v(y) 1_H(x, y) g1(x) g2(y)` of one component.
#[derive(Clone, Debug, Serialize)]
pub struct KellererComponent {
    pub halfplane: HalfPlane,
    pub plan: FloatPlan,
    pub xs: Vec<Scalar>,
    pub ys: Vec<Scalar>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn order_precondition(g1: &Measure, g2: &Measure, hp: HalfPlane) -> Result<()> {
    let (verdict, name) = match hp {
        HalfPlane::F => (leq_f(g1, g2), "F"),
        HalfPlane::G => (leq_g(g1, g2), "G"),
        _ => {
            return Err(Error::InvalidArgument(
                "Kellerer components live on F or G".into(),
            ))
        }
    };
    match verdict.witness_t {
        Some(t) => Err(Error::OrderViolation {
            relation: name,
            witness: Box::new(t),
        }),
        None => Ok(()),
    }
}

/// Iterative proportional fitting of the half-plane kernel to `(g1, g2)`.
pub fn kellerer_component(
    g1: &Measure,
    g2: &Measure,
    hp: HalfPlane,
    opts: IpfOptions,
) -> Result<KellererComponent> {
    check_pair(g1, g2)?;
    order_precondition(g1, g2, hp)?;
    let xs: Vec<Scalar> = g1.atoms().iter().map(|a| a.x.clone()).collect();
    let ys: Vec<Scalar> = g2.atoms().iter().map(|a| a.x.clone()).collect();
    let a: Vec<f64> = g1.atoms().iter().map(|t| t.w.to_f64()).collect();
    let b: Vec<f64> = g2.atoms().iter().map(|t| t.w.to_f64()).collect();
    let strict = hp == HalfPlane::G;
    // first column reachable from row i, last row reaching column j (exclusive)
    let col_start: Vec<usize> = xs
        .iter()
        .map(|x| ys.partition_point(|y| if strict { y <= x } else { y < x }))
        .collect();
    let row_end: Vec<usize> = ys
        .iter()
        .map(|y| xs.partition_point(|x| if strict { x < y } else { x <= y }))
        .collect();

    let mut u = vec![1.0; xs.len()];
    let mut v = vec![1.0; ys.len()];
    let mut suffix = vec![0.0; ys.len() + 1];
    let mut prefix = vec![0.0; xs.len() + 1];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        for j in (0..ys.len()).rev() {
            suffix[j] = suffix[j + 1] + b[j] * v[j];
        }
        for i in 0..xs.len() {
            u[i] = 1.0 / suffix[col_start[i]];
        }
        for i in 0..xs.len() {
            prefix[i + 1] = prefix[i] + a[i] * u[i];
        }
        for j in 0..ys.len() {
            v[j] = 1.0 / prefix[row_end[j]];
        }
        // columns are now exact; measure the row defect
        for j in (0..ys.len()).rev() {
            suffix[j] = suffix[j + 1] + b[j] * v[j];
        }
        residual = (0..xs.len())
            .map(|i| (a[i] * u[i] * suffix[col_start[i]] - a[i]).abs())
            .sum();
        if residual < opts.tol {
            break;
        }
    }
    if residual.is_nan() || residual >= opts.tol {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    let mut triples = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate().skip(col_start[i]) {
            let w = a[i] * b[j] * u[i] * v[j];
            if w > DROP_BELOW {
                triples.push((x.clone(), y.clone(), w));
            }
        }
    }
    Ok(KellererComponent {
        halfplane: hp,
        plan: Plan::new(triples)?,
        xs,
        ys,
        u,
        v,
        iterations,
        residual,
    })
}

/// Exact product-form coupling by a single left-to-right sweep.
///
/// With `P` the running row mass `Σ_{x_i ≤ t} U_i` and `S` the remaining
/// column mass `Σ_{y_j ≥ t} V_j`, the scalings are `U_i = g1(x_i) / S` and
/// `V_j = g2(y_j) / P`, and the plan is `U_i V_j` on the half-plane. The
/// product `P S` equals `F_{g1} - F_{g2}` along the sweep, so the divisions
/// are well defined exactly when the order condition holds.
pub fn kellerer_component_exact(
    g1: &Measure,
    g2: &Measure,
    hp: HalfPlane,
) -> Result<TransportPlan> {
    check_pair(g1, g2)?;
    order_precondition(g1, g2, hp)?;
    let mut pts: Vec<Scalar> = g1
        .atoms()
        .iter()
        .chain(g2.atoms())
        .map(|a| a.x.clone())
        .collect();
    pts.sort();
    pts.dedup();
    let strict = hp == HalfPlane::G;
    let (mut p, mut s) = (Scalar::zero(), Scalar::one());
    let mut us: Vec<(Scalar, Scalar)> = Vec::new();
    let mut vs: Vec<(Scalar, Scalar)> = Vec::new();
    let broken = |t: &Scalar| Error::Internal(format!("product-form sweep degenerates at {t}"));
    for t in &pts {
        let (a, b) = (g1.atom_weight(t), g2.atom_weight(t));
        let mut take_x = |p: &mut Scalar, s: &Scalar| -> Result<()> {
            if !a.is_zero() {
                if !s.is_positive() {
                    return Err(broken(t));
                }
                let u = &a / s;
                *p += &u;
                us.push((t.clone(), u));
            }
            Ok(())
        };
        if strict {
            if !b.is_zero() {
                if !p.is_positive() {
                    return Err(broken(t));
                }
                let v = &b / &p;
                s -= &v;
                vs.push((t.clone(), v));
            }
            take_x(&mut p, &s)?;
        } else {
            take_x(&mut p, &s)?;
            if !b.is_zero() {
                if !p.is_positive() {
                    return Err(broken(t));
                }
                let v = &b / &p;
                s -= &v;
                vs.push((t.clone(), v));
            }
        }
    }
    let mut triples = Vec::new();
    for (x, u) in &us {
        for (y, v) in &vs {
            if hp.contains(x, y) {
                triples.push((x.clone(), y.clone(), u * v));
            }
        }
    }
    Plan::new(triples)
}

/// `K(μ, ν)` with every piece kept for inspection.
#[derive(Clone, Debug, Serialize)]
pub struct KellererPlan {
    pub plan: FloatPlan,
    /// Couplings of `(μ_k^+, ν_k^+)` on `F`.
    pub positive: Vec<KellererComponent>,
    /// Couplings of `(ν_k^-, μ_k^-)` on `F`, before reflection.
    pub negative: Vec<KellererComponent>,
    /// Identity on `μ⁼`.
    pub fixed: TransportPlan,
    pub marginal_error: f64,
}

fn fixed_identity(mc: &MarginalComponents) -> Result<TransportPlan> {
    Plan::identity(&mc.mu_eq())
}

/// Generalized Kellerer plan, product-form components fitted by IPF.
pub fn kellerer_plan(mu: &Measure, nu: &Measure, opts: IpfOptions) -> Result<KellererPlan> {
    check_pair(mu, nu)?;
    let (_, mc) = marginal_components_of(mu, nu)?;
    let internal = |e: Error| match e {
        Error::OrderViolation { .. } => Error::Internal(format!("component out of order: {e}")),
        other => other,
    };
    let positive = mc
        .pos
        .iter()
        .map(|(a, b)| kellerer_component(a, b, HalfPlane::F, opts).map_err(internal))
        .collect::<Result<Vec<_>>>()?;
    let negative = mc
        .neg
        .iter()
        .map(|(a, b)| kellerer_component(b, a, HalfPlane::F, opts).map_err(internal))
        .collect::<Result<Vec<_>>>()?;
    let fixed = fixed_identity(&mc)?;
    let mut plan = fixed.to_float();
    for c in &positive {
        plan = plan.add(&c.plan);
    }
    for c in &negative {
        plan = plan.add(&c.plan.transpose());
    }
    let marginal_error = plan.marginal_error(mu, nu);
    Ok(KellererPlan {
        plan,
        positive,
        negative,
        fixed,
        marginal_error,
    })
}

/// Generalized Kellerer plan in exact arithmetic.
pub fn kellerer_plan_exact(mu: &Measure, nu: &Measure) -> Result<TransportPlan> {
    check_pair(mu, nu)?;
    let (_, mc) = marginal_components_of(mu, nu)?;
    let mut plan = fixed_identity(&mc)?;
    for (a, b) in &mc.pos {
        plan = plan.add(&kellerer_component_exact(a, b, HalfPlane::F)?);
    }
    for (a, b) in &mc.neg {
        plan = plan.add(&kellerer_component_exact(b, a, HalfPlane::F)?.transpose());
    }
    Ok(plan)
}
