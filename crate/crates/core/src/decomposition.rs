//! Decomposition of a pair `(μ, ν)` into positive, negative and fixed
//! components, on the line, on the marginals and on transport plans.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridPiece, LineSet, PairGrid};
use crate::measure::{IntervalSpec, Measure};
use crate::plan::{Plan, Weight};
use crate::scalar::Scalar;

/// Open interval `]a, b[`. Components are always bounded: with equal
/// masses both CDF differences vanish outside the supports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub a: Scalar,
    pub b: Scalar,
}

impl Component {
    pub fn contains(&self, t: &Scalar) -> bool {
        &self.a < t && t < &self.b
    }
}

#[derive(Clone, Debug)]
pub struct LineDecomposition {
    mu: Measure,
    nu: Measure,
    pub pos: Vec<Component>,
    pub neg: Vec<Component>,
    e_eq: LineSet,
}

fn in_e_plus(p: &GridPiece) -> bool {
    p.f1_plus > p.f2_plus && p.f1_minus > p.f2_minus
}

fn in_e_minus(p: &GridPiece) -> bool {
    p.f1_plus < p.f2_plus && p.f1_minus < p.f2_minus
}

fn components(set: &LineSet) -> Result<Vec<Component>> {
    set.intervals()
        .iter()
        .map(
            |iv| match (iv.lo.finite(), iv.hi.finite(), iv.lo_closed, iv.hi_closed) {
                (Some(a), Some(b), false, false) => Ok(Component {
                    a: a.clone(),
                    b: b.clone(),
                }),
                _ => Err(Error::Internal(format!(
                    "component {iv} is not a bounded open interval"
                ))),
            },
        )
        .collect()
}

fn check_masses(mu: &Measure, nu: &Measure) -> Result<()> {
    let (m1, m2) = (mu.mass(), nu.mass());
    if m1 != m2 {
        return Err(Error::MassMismatch {
            mu: Box::new(m1),
            nu: Box::new(m2),
        });
    }
    Ok(())
}

/// Connected components of `E⁺ = {F_μ^+ > F_ν^+} ∩ {F_μ^- > F_ν^-}` and of
/// the mirrored `E⁻`, together with the closed remainder `E⁼`.
pub fn line_components(mu: &Measure, nu: &Measure) -> Result<LineDecomposition> {
    check_masses(mu, nu)?;
    let grid = PairGrid::new(mu, nu);
    let pos = components(&grid.to_line_set(&grid.select(in_e_plus)))?;
    let neg = components(&grid.to_line_set(&grid.select(in_e_minus)))?;
    let e_eq = grid.to_line_set(&grid.select(|p| !in_e_plus(p) && !in_e_minus(p)));
    Ok(LineDecomposition {
        mu: mu.clone(),
        nu: nu.clone(),
        pos,
        neg,
        e_eq,
    })
}

impl LineDecomposition {
    pub fn mu(&self) -> &Measure {
        &self.mu
    }

    pub fn nu(&self) -> &Measure {
        &self.nu
    }

    pub fn e_plus(&self) -> LineSet {
        LineSet::from_intervals(
            self.pos
                .iter()
                .map(|c| IntervalSpec::open(c.a.clone(), c.b.clone()))
                .collect(),
        )
    }

    pub fn e_minus(&self) -> LineSet {
        LineSet::from_intervals(
            self.neg
                .iter()
                .map(|c| IntervalSpec::open(c.a.clone(), c.b.clone()))
                .collect(),
        )
    }

    pub fn e_eq(&self) -> &LineSet {
        &self.e_eq
    }

    pub fn b_l_plus(&self) -> Vec<Scalar> {
        self.pos.iter().map(|c| c.a.clone()).collect()
    }

    pub fn b_r_plus(&self) -> Vec<Scalar> {
        self.pos.iter().map(|c| c.b.clone()).collect()
    }

    pub fn b_l_minus(&self) -> Vec<Scalar> {
        self.neg.iter().map(|c| c.a.clone()).collect()
    }

    pub fn b_r_minus(&self) -> Vec<Scalar> {
        self.neg.iter().map(|c| c.b.clone()).collect()
    }

    /// `B`: all component endpoints, sorted.
    pub fn boundary(&self) -> Vec<Scalar> {
        let mut b: Vec<Scalar> = self
            .pos
            .iter()
            .chain(&self.neg)
            .flat_map(|c| [c.a.clone(), c.b.clone()])
            .collect();
        b.sort();
        b.dedup();
        b
    }

    pub fn in_boundary(&self, t: &Scalar) -> bool {
        self.pos
            .iter()
            .chain(&self.neg)
            .any(|c| &c.a == t || &c.b == t)
    }

    pub fn in_e_eq(&self, t: &Scalar) -> bool {
        self.e_eq.contains(t)
    }

    /// The decomposition of `(ν, μ)`.
    pub fn swapped(&self) -> LineDecomposition {
        LineDecomposition {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
            pos: self.neg.clone(),
            neg: self.pos.clone(),
            e_eq: self.e_eq.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalComponents {
    /// `(μ_k^+, ν_k^+)` in the order of the positive components.
    pub pos: Vec<(Measure, Measure)>,
    /// `(μ_k^-, ν_k^-)` in the order of the negative components.
    pub neg: Vec<(Measure, Measure)>,
    pub mu_eq1: Measure,
    pub mu_eq2: Measure,
    pub nu_eq1: Measure,
    pub nu_eq2: Measure,
}

fn sum<'a>(it: impl Iterator<Item = &'a Measure>) -> Measure {
    it.fold(Measure::zero(), |acc, m| acc.add(m))
}

impl MarginalComponents {
    pub fn mu_plus(&self) -> Measure {
        sum(self.pos.iter().map(|p| &p.0))
    }

    pub fn nu_plus(&self) -> Measure {
        sum(self.pos.iter().map(|p| &p.1))
    }

    pub fn mu_minus(&self) -> Measure {
        sum(self.neg.iter().map(|p| &p.0))
    }

    pub fn nu_minus(&self) -> Measure {
        sum(self.neg.iter().map(|p| &p.1))
    }

    pub fn mu_eq(&self) -> Measure {
        self.mu_eq1.add(&self.mu_eq2)
    }

    pub fn nu_eq(&self) -> Measure {
        self.nu_eq1.add(&self.nu_eq2)
    }

    /// `Σ μ_k^+ + Σ μ_k^- + μ⁼`.
    pub fn mu_total(&self) -> Measure {
        self.mu_plus().add(&self.mu_minus()).add(&self.mu_eq())
    }

    pub fn nu_total(&self) -> Measure {
        self.nu_plus().add(&self.nu_minus()).add(&self.nu_eq())
    }
}

/// Restriction of `m` to `B^c ∩ E⁼`.
fn fixed_free_part(m: &Measure, dec: &LineDecomposition) -> Measure {
    m.restrict_to_set(dec.e_eq())
        .without_atoms_at(&dec.boundary())
}

pub fn marginal_components(dec: &LineDecomposition) -> MarginalComponents {
    use crate::measure::Side::{Minus, Plus};
    let (mu, nu) = (&dec.mu, &dec.nu);
    let f = |m: &Measure, t: &Scalar, s| m.cdf_at(t, s);

    let pos = dec
        .pos
        .iter()
        .map(|c| {
            let inner = IntervalSpec::open(c.a.clone(), c.b.clone());
            let left = f(mu, &c.a, Plus) - f(nu, &c.a, Plus);
            let right = f(mu, &c.b, Minus) - f(nu, &c.b, Minus);
            (
                Measure::dirac(c.a.clone(), left).add(&mu.restrict(&inner)),
                nu.restrict(&inner).add(&Measure::dirac(c.b.clone(), right)),
            )
        })
        .collect();
    let neg = dec
        .neg
        .iter()
        .map(|c| {
            let inner = IntervalSpec::open(c.a.clone(), c.b.clone());
            let right = f(nu, &c.b, Minus) - f(mu, &c.b, Minus);
            let left = f(nu, &c.a, Plus) - f(mu, &c.a, Plus);
            (
                mu.restrict(&inner).add(&Measure::dirac(c.b.clone(), right)),
                Measure::dirac(c.a.clone(), left).add(&nu.restrict(&inner)),
            )
        })
        .collect();

    let eq2_atoms: Vec<(Scalar, Scalar)> = dec
        .boundary()
        .into_iter()
        .map(|x| {
            let lo = f(mu, &x, Plus).min(f(nu, &x, Plus));
            let hi = f(mu, &x, Minus).max(f(nu, &x, Minus));
            (x, lo - hi)
        })
        .collect();
    let eq2 = Measure::accumulate(eq2_atoms, Vec::new());

    MarginalComponents {
        pos,
        neg,
        mu_eq1: fixed_free_part(mu, dec),
        nu_eq1: fixed_free_part(nu, dec),
        mu_eq2: eq2.clone(),
        nu_eq2: eq2,
    }
}

/// Convenience wrapper running [`line_components`] first.
pub fn marginal_components_of(
    mu: &Measure,
    nu: &Measure,
) -> Result<(LineDecomposition, MarginalComponents)> {
    let dec = line_components(mu, nu)?;
    let mc = marginal_components(&dec);
    Ok((dec, mc))
}

/// `E⁼`, cross-checked against
/// `{F_μ^+ = F_ν^+} ∪ {F_μ^- = F_ν^-} ∪ {F_ν^- < F_μ^- ≤ F_μ^+ < F_ν^+} ∪ {F_μ^- < F_ν^- ≤ F_ν^+ < F_μ^+}`.
pub fn barrier_set(mu: &Measure, nu: &Measure) -> Result<LineSet> {
    check_masses(mu, nu)?;
    let grid = PairGrid::new(mu, nu);
    let e_eq = grid.select(|p| !in_e_plus(p) && !in_e_minus(p));
    let union = grid.select(four_set_union);
    if let Some(i) = e_eq.iter().zip(&union).position(|(a, b)| a != b) {
        return Err(Error::Internal(format!(
            "barrier set formulas disagree at t = {}",
            grid.pieces()[i].rep
        )));
    }
    Ok(grid.to_line_set(&e_eq))
}

/// Membership in the four-set union describing the barrier points.
pub fn four_set_union(p: &GridPiece) -> bool {
    let (mp, mm, np, nm) = (&p.f1_plus, &p.f1_minus, &p.f2_plus, &p.f2_minus);
    mp == np || mm == nm || (nm < mm && mm <= mp && mp < np) || (mm < nm && nm <= np && np < mp)
}

/// Restrictions of a plan to the blocks `A_k^±` and to the fixed blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanComponents<W> {
    pub pos: Vec<Plan<W>>,
    pub neg: Vec<Plan<W>>,
    /// Rows in `B^c ∩ E⁼`.
    pub eq1: Plan<W>,
    /// Diagonal cells with `x ∈ B`.
    pub eq2: Plan<W>,
    /// Mass outside every block; empty for cyclically monotone plans.
    pub remainder: Plan<W>,
}

impl<W: Weight> PlanComponents<W> {
    pub fn eq(&self) -> Plan<W> {
        self.eq1.add(&self.eq2)
    }
}

/// Splits `pi` along `dec`. The plan must couple `dec`'s pair up to `tol`
/// (exactly for rational plans).
pub fn split_plan<W: Weight>(
    pi: &Plan<W>,
    dec: &LineDecomposition,
    tol: f64,
) -> Result<PlanComponents<W>> {
    if !pi.couples(&dec.mu, &dec.nu, tol) {
        return Err(Error::MarginalMismatch(format!(
            "marginal L1 error {:e}",
            pi.marginal_error(&dec.mu, &dec.nu)
        )));
    }
    let in_pos =
        |c: &Component, x: &Scalar, y: &Scalar| &c.a <= x && x < &c.b && &c.a < y && y <= &c.b;
    let in_neg =
        |c: &Component, x: &Scalar, y: &Scalar| &c.a < x && x <= &c.b && &c.a <= y && y < &c.b;
    let pos: Vec<Plan<W>> = dec
        .pos
        .iter()
        .map(|c| pi.restrict(|x, y| in_pos(c, x, y)))
        .collect();
    let neg: Vec<Plan<W>> = dec
        .neg
        .iter()
        .map(|c| pi.restrict(|x, y| in_neg(c, x, y)))
        .collect();
    let eq1 = pi.restrict(|x, _| !dec.in_boundary(x) && dec.in_e_eq(x));
    let eq2 = pi.restrict(|x, y| x == y && dec.in_boundary(x));
    let remainder = pi.restrict(|x, y| {
        !(dec.pos.iter().any(|c| in_pos(c, x, y))
            || dec.neg.iter().any(|c| in_neg(c, x, y))
            || (!dec.in_boundary(x) && dec.in_e_eq(x))
            || (x == y && dec.in_boundary(x)))
    });
    Ok(PlanComponents {
        pos,
        neg,
        eq1,
        eq2,
        remainder,
    })
}

/// Sum of the components (the remainder is left out).
pub fn reassemble<W: Weight>(pc: &PlanComponents<W>) -> Plan<W> {
    pc.pos
        .iter()
        .chain(&pc.neg)
        .chain([&pc.eq1, &pc.eq2])
        .fold(Plan::empty(), |acc, p| acc.add(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{mixed_boundary_pair, point_split_pair, uniform_window_pair};
    use crate::measure::Side;
    use crate::orders::leq_f;
    use crate::scalar::q;

    fn atoms(pts: &[(i64, i64)]) -> Measure {
        Measure::atomic(pts.iter().map(|&(x, w)| (q(x, 1), q(w, 1))).collect()).unwrap()
    }

    fn u(a: Scalar, b: Scalar, d: Scalar) -> Measure {
        Measure::uniform(a, b, d)
    }

    fn d(x: i64, w: Scalar) -> Measure {
        Measure::dirac(q(x, 1), w)
    }

    fn s(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn guiding_pair_line_components() {
        let (mu, nu) = mixed_boundary_pair();
        let dec = line_components(&mu, &nu).unwrap();
        assert_eq!(dec.e_plus().to_string(), "]0,2[");
        assert_eq!(dec.e_minus().to_string(), "]2,3[ ∪ ]3,4[");
        assert_eq!(dec.e_eq().to_string(), "]-inf,0] ∪ {2} ∪ {3} ∪ [4,+inf[");
        assert_eq!(dec.b_l_plus(), s(&[0]));
        assert_eq!(dec.b_r_plus(), s(&[2]));
        assert_eq!(dec.b_l_minus(), s(&[2, 3]));
        assert_eq!(dec.b_r_minus(), s(&[3, 4]));
        assert_eq!(dec.boundary(), s(&[0, 2, 3, 4]));
        assert_eq!(barrier_set(&mu, &nu).unwrap(), *dec.e_eq());
    }

    #[test]
    fn guiding_pair_marginal_components() {
        let (mu, nu) = mixed_boundary_pair();
        let (_, mc) = marginal_components_of(&mu, &nu).unwrap();
        let one = q(1, 1);
        let half = q(1, 2);
        let mu1p = u(q(0, 1), q(2, 1), one.clone()).add(&d(1, one.clone()));
        let nu1p = u(q(1, 2), q(2, 1), one.clone())
            .add(&d(1, one.clone()))
            .add(&d(2, half.clone()));
        assert_eq!(mc.pos, vec![(mu1p, nu1p)]);
        let mu1m = u(q(2, 1), q(3, 1), one.clone());
        let nu1m = d(2, half.clone()).add(&u(q(2, 1), q(3, 1), half.clone()));
        let mu2m = u(q(3, 1), q(4, 1), one.clone());
        let nu2m = d(3, half.clone()).add(&u(q(3, 1), q(4, 1), half.clone()));
        assert_eq!(mc.neg, vec![(mu1m, nu1m), (mu2m, nu2m)]);
        let eq1 = u(q(4, 1), q(6, 1), one.clone()).add(&d(5, one.clone()));
        assert_eq!(mc.mu_eq1, eq1);
        assert_eq!(mc.nu_eq1, eq1);
        // the boundary point 4 keeps one unit as well
        assert_eq!(mc.mu_eq2, atoms(&[(2, 1), (3, 1), (4, 1)]));
        assert_eq!(mc.mu_total(), mu);
        assert_eq!(mc.nu_total(), nu);
    }

    #[test]
    fn fixed_boundary_mass_matches_subtraction_form() {
        for (mu, nu) in [mixed_boundary_pair(), point_split_pair()] {
            let (dec, mc) = marginal_components_of(&mu, &nu).unwrap();
            for x in dec.boundary() {
                let alt = mu.atom_weight(&x)
                    - mc.mu_plus().atom_weight(&x)
                    - mc.mu_minus().atom_weight(&x);
                assert_eq!(mc.mu_eq2.atom_weight(&x), alt);
                let alt = nu.atom_weight(&x)
                    - mc.nu_plus().atom_weight(&x)
                    - mc.nu_minus().atom_weight(&x);
                assert_eq!(mc.nu_eq2.atom_weight(&x), alt);
            }
        }
    }

    #[test]
    fn uniform_window_pair_sign_sets() {
        let (mu, nu) = uniform_window_pair();
        let grid = PairGrid::new(&mu, &nu);
        let gt = grid.to_line_set(&grid.select(|p| p.f1_plus > p.f2_plus));
        let lt = grid.to_line_set(&grid.select(|p| p.f1_plus < p.f2_plus));
        assert_eq!(gt.to_string(), "]0,1/4[ ∪ ]1/4,1/2[");
        assert_eq!(lt.to_string(), "]3/4,1[");
        let e_eq = barrier_set(&mu, &nu).unwrap();
        assert!(e_eq.contains_all_of(
            &LineSet::from_intervals(vec![IntervalSpec::closed(q(1, 2), q(3, 4))]),
            &grid
        ));
        // atomless: E⁼ = {F_μ^+ = F_ν^+}
        let eq = grid.to_line_set(&grid.select(|p| p.f1_plus == p.f2_plus));
        assert_eq!(e_eq, eq);
    }

    #[test]
    fn point_split_components() {
        let (mu, nu) = point_split_pair();
        let (dec, mc) = marginal_components_of(&mu, &nu).unwrap();
        assert_eq!(dec.e_minus().to_string(), "]-3,0[");
        assert_eq!(dec.e_plus().to_string(), "]0,3[");
        assert_eq!(mc.mu_eq2, atoms(&[(0, 3)]));
        assert_eq!(
            mc.neg,
            vec![(atoms(&[(-1, 1), (0, 2)]), atoms(&[(-3, 1), (-2, 2)]))]
        );
        assert_eq!(
            mc.pos,
            vec![(atoms(&[(0, 1), (1, 1)]), atoms(&[(2, 1), (3, 1)]))]
        );
        assert_eq!(mu.cdf_at(&q(1, 1), Side::Minus), q(7, 1));
    }

    #[test]
    fn identical_marginals_are_fixed() {
        let (mu, _) = mixed_boundary_pair();
        let dec = line_components(&mu, &mu).unwrap();
        assert!(dec.pos.is_empty() && dec.neg.is_empty());
        assert_eq!(dec.e_eq().to_string(), "]-inf,+inf[");
        let mc = marginal_components(&dec);
        assert_eq!(mc.mu_eq1, mu);
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let err = line_components(&atoms(&[(0, 1)]), &atoms(&[(0, 2)])).unwrap_err();
        assert!(err.to_string().contains("marginal masses differ"));
    }

    #[test]
    fn swapping_the_pair_swaps_signs() {
        for (mu, nu) in [mixed_boundary_pair(), point_split_pair()] {
            let (dec, mc) = marginal_components_of(&mu, &nu).unwrap();
            let (rdec, rmc) = marginal_components_of(&nu, &mu).unwrap();
            assert_eq!(rdec.pos, dec.neg);
            assert_eq!(rdec.neg, dec.pos);
            assert_eq!(rdec.e_eq(), dec.e_eq());
            let flip = |v: &Vec<(Measure, Measure)>| {
                v.iter()
                    .map(|(a, b)| (b.clone(), a.clone()))
                    .collect::<Vec<_>>()
            };
            assert_eq!(rmc.pos, flip(&mc.neg));
            assert_eq!(rmc.neg, flip(&mc.pos));
        }
    }

    #[test]
    fn components_are_ordered() {
        let (mu, nu) = mixed_boundary_pair();
        let (_, mc) = marginal_components_of(&mu, &nu).unwrap();
        for (a, b) in &mc.pos {
            assert!(leq_f(a, b).holds);
        }
        for (a, b) in &mc.neg {
            assert!(leq_f(b, a).holds);
        }
    }

    #[test]
    fn split_of_identity_is_fixed() {
        let m = atoms(&[(0, 1), (2, 3)]);
        let dec = line_components(&m, &m).unwrap();
        let pi = Plan::identity(&m).unwrap();
        let pc = split_plan(&pi, &dec, 0.0).unwrap();
        assert!(pc.pos.is_empty() && pc.neg.is_empty() && pc.remainder.is_empty());
        assert_eq!(reassemble(&pc), pi);
    }

    #[test]
    fn split_rejects_foreign_plan() {
        let m = atoms(&[(0, 1)]);
        let dec = line_components(&m, &m).unwrap();
        let pi = Plan::new(vec![(q(1, 1), q(1, 1), q(1, 1))]).unwrap();
        assert!(matches!(
            split_plan(&pi, &dec, 0.0),
            Err(Error::MarginalMismatch(_))
        ));
    }
}
