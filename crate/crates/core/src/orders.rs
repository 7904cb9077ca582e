//! Stochastic order `≤st` and the two reinforced orders `≤F` (large) and
//! `≤G` (strict).
//!
//! The quantifiers over `t ∈ ℝ` are decided exactly on a [`PairGrid`]. A
//! failing verdict carries the smallest failing grid point (or a point inside
//! the first failing open cell), which re-fails the condition when the CDFs
//! are evaluated there directly.

use serde::Serialize;

use crate::grid::{GridPiece, LineSet, PairGrid, PieceKind};
use crate::measure::Measure;
use crate::scalar::{Bound, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderVerdict {
    pub holds: bool,
    pub witness_t: Option<Scalar>,
}

impl OrderVerdict {
    fn from_grid(grid: &PairGrid, ok: impl Fn(&GridPiece) -> bool) -> Self {
        match grid.pieces().iter().find(|p| !ok(p)) {
            Some(p) => OrderVerdict {
                holds: false,
                witness_t: Some(p.rep.clone()),
            },
            None => OrderVerdict {
                holds: true,
                witness_t: None,
            },
        }
    }
}

/// Order relation selector, mainly for the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Stochastic,
    ReinforcedLarge,
    ReinforcedStrict,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Stochastic => "st",
            Relation::ReinforcedLarge => "F",
            Relation::ReinforcedStrict => "G",
        }
    }

    pub fn check(self, g1: &Measure, g2: &Measure) -> OrderVerdict {
        match self {
            Relation::Stochastic => leq_st(g1, g2),
            Relation::ReinforcedLarge => leq_f(g1, g2),
            Relation::ReinforcedStrict => leq_g(g1, g2),
        }
    }
}

fn in_t_plus(p: &GridPiece, m2: &Scalar) -> bool {
    p.f1_plus.is_positive() && &p.f2_plus < m2
}

fn in_t_minus(p: &GridPiece, m2: &Scalar) -> bool {
    p.f1_minus.is_positive() && &p.f2_minus < m2
}

fn in_t_star(p: &GridPiece, m2: &Scalar) -> bool {
    p.f1_minus.is_positive() && &p.f2_plus < m2
}

/// `g1 ≤st g2`: equal masses and `F_{g1}^+ ≥ F_{g2}^+`. Unequal masses fail
/// at a point to the right of both supports.
pub fn leq_st(g1: &Measure, g2: &Measure) -> OrderVerdict {
    let grid = PairGrid::new(g1, g2);
    let equal = grid.mass1() == grid.mass2();
    OrderVerdict::from_grid(&grid, |p| equal_mass_ok(equal, p) && p.f1_plus >= p.f2_plus)
}

// With unequal masses only the right tail is blamed, so that the witness
// is the point where the CDFs reach the two different totals.
fn equal_mass_ok(equal: bool, p: &GridPiece) -> bool {
    equal || !matches!(&p.kind, PieceKind::Cell(_, Bound::PosInf))
}

/// `g1 ≤F g2`: `g1 ≤st g2`, strict `F^+` gap on `T_+` and strict `F^-` gap
/// on `T_-`.
pub fn leq_f(g1: &Measure, g2: &Measure) -> OrderVerdict {
    let grid = PairGrid::new(g1, g2);
    let equal = grid.mass1() == grid.mass2();
    let m2 = grid.mass2().clone();
    OrderVerdict::from_grid(&grid, |p| {
        equal_mass_ok(equal, p)
            && p.f1_plus >= p.f2_plus
            && (!in_t_plus(p, &m2) || p.f1_plus > p.f2_plus)
            && (!in_t_minus(p, &m2) || p.f1_minus > p.f2_minus)
    })
}

/// `g1 ≤G g2`: `F_{g1}^- ≥ F_{g2}^+` everywhere, strictly on `T_*`. Masses
/// are required to agree as well, since the order is only meaningful for
/// pairs that admit a coupling.
pub fn leq_g(g1: &Measure, g2: &Measure) -> OrderVerdict {
    let grid = PairGrid::new(g1, g2);
    let equal = grid.mass1() == grid.mass2();
    let m2 = grid.mass2().clone();
    OrderVerdict::from_grid(&grid, |p| {
        equal_mass_ok(equal, p)
            && p.f1_minus >= p.f2_plus
            && (!in_t_star(p, &m2) || p.f1_minus > p.f2_plus)
    })
}

/// `T_+(g1, g2) = { F_{g1}^+ > 0 and F_{g2}^+ < g2(ℝ) }`.
pub fn t_plus(g1: &Measure, g2: &Measure) -> LineSet {
    let grid = PairGrid::new(g1, g2);
    let m2 = grid.mass2().clone();
    grid.to_line_set(&grid.select(|p| in_t_plus(p, &m2)))
}

/// `T_-(g1, g2) = { F_{g1}^- > 0 and F_{g2}^- < g2(ℝ) }`.
pub fn t_minus(g1: &Measure, g2: &Measure) -> LineSet {
    let grid = PairGrid::new(g1, g2);
    let m2 = grid.mass2().clone();
    grid.to_line_set(&grid.select(|p| in_t_minus(p, &m2)))
}

/// `T_*(g1, g2) = { F_{g1}^- > 0 and F_{g2}^+ < g2(ℝ) }`.
pub fn t_star(g1: &Measure, g2: &Measure) -> LineSet {
    let grid = PairGrid::new(g1, g2);
    let m2 = grid.mass2().clone();
    grid.to_line_set(&grid.select(|p| in_t_star(p, &m2)))
}
