//! Exact comparison of two piecewise-linear CDFs.
//!
//! The line is cut at every atom, piece endpoint and zero crossing of
//! `F_1 - F_2`. On each resulting open cell both CDFs are continuous and
//! their difference has a constant strict sign (or vanishes identically), so
//! every set defined by comparisons of `F_1^±`, `F_2^±`, `0` and the masses
//! is a union of grid points and grid cells.

use std::fmt;

use crate::measure::{IntervalSpec, Measure, Side};
use crate::scalar::{Bound, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PieceKind {
    Point(Scalar),
    /// Open cell `]lo, hi[`.
    Cell(Bound, Bound),
}

/// One point or open cell of the grid with both CDFs evaluated on it. On
/// cells the plus and minus values coincide and are taken at `rep`.
#[derive(Clone, Debug)]
pub struct GridPiece {
    pub kind: PieceKind,
    /// Representative point: the point itself, or an interior point of the
    /// cell.
    pub rep: Scalar,
    pub f1_plus: Scalar,
    pub f1_minus: Scalar,
    pub f2_plus: Scalar,
    pub f2_minus: Scalar,
}

impl GridPiece {
    pub fn is_point(&self) -> bool {
        matches!(self.kind, PieceKind::Point(_))
    }
}

#[derive(Clone, Debug)]
pub struct PairGrid {
    pieces: Vec<GridPiece>,
    mass1: Scalar,
    mass2: Scalar,
}

impl PairGrid {
    pub fn new(g1: &Measure, g2: &Measure) -> Self {
        let mut base: Vec<Scalar> = g1.breakpoints();
        base.extend(g2.breakpoints());
        base.sort();
        base.dedup();

        let mut points: Vec<Scalar> = Vec::with_capacity(2 * base.len());
        for (i, p) in base.iter().enumerate() {
            points.push(p.clone());
            if let Some(next) = base.get(i + 1) {
                let left = g1.cdf_at(p, Side::Plus) - g2.cdf_at(p, Side::Plus);
                let right = g1.cdf_at(next, Side::Minus) - g2.cdf_at(next, Side::Minus);
                let crosses = (left.is_positive() && right.is_negative())
                    || (left.is_negative() && right.is_positive());
                if crosses {
                    let frac = &left / (&left - &right);
                    points.push(p + frac * (next - p));
                }
            }
        }

        let eval_cell = |kind: PieceKind, rep: Scalar| {
            let f1 = g1.cdf_at(&rep, Side::Plus);
            let f2 = g2.cdf_at(&rep, Side::Plus);
            GridPiece {
                kind,
                rep,
                f1_plus: f1.clone(),
                f1_minus: f1,
                f2_plus: f2.clone(),
                f2_minus: f2,
            }
        };

        let mut pieces = Vec::with_capacity(2 * points.len() + 1);
        if points.is_empty() {
            pieces.push(eval_cell(
                PieceKind::Cell(Bound::NegInf, Bound::PosInf),
                Scalar::zero(),
            ));
        } else {
            let first = &points[0];
            pieces.push(eval_cell(
                PieceKind::Cell(Bound::NegInf, Bound::Finite(first.clone())),
                first - Scalar::one(),
            ));
            for (i, p) in points.iter().enumerate() {
                pieces.push(GridPiece {
                    kind: PieceKind::Point(p.clone()),
                    rep: p.clone(),
                    f1_plus: g1.cdf_at(p, Side::Plus),
                    f1_minus: g1.cdf_at(p, Side::Minus),
                    f2_plus: g2.cdf_at(p, Side::Plus),
                    f2_minus: g2.cdf_at(p, Side::Minus),
                });
                let (hi, rep) = match points.get(i + 1) {
                    Some(n) => (Bound::Finite(n.clone()), p.midpoint(n)),
                    None => (Bound::PosInf, p + Scalar::one()),
                };
                pieces.push(eval_cell(
                    PieceKind::Cell(Bound::Finite(p.clone()), hi),
                    rep,
                ));
            }
        }
        PairGrid {
            pieces,
            mass1: g1.mass(),
            mass2: g2.mass(),
        }
    }

    pub fn pieces(&self) -> &[GridPiece] {
        &self.pieces
    }

    pub fn mass1(&self) -> &Scalar {
        &self.mass1
    }

    pub fn mass2(&self) -> &Scalar {
        &self.mass2
    }

    /// Membership vector of the set `{ t : pred(values at t) }`.
    pub fn select(&self, pred: impl Fn(&GridPiece) -> bool) -> Vec<bool> {
        self.pieces.iter().map(pred).collect()
    }

    /// Maximal intervals of a membership vector.
    pub fn to_line_set(&self, members: &[bool]) -> LineSet {
        assert_eq!(members.len(), self.pieces.len());
        let mut out = Vec::new();
        let mut i = 0;
        while i < members.len() {
            if !members[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < members.len() && members[i + 1] {
                i += 1;
            }
            let (lo, lo_closed) = match &self.pieces[start].kind {
                PieceKind::Point(x) => (Bound::Finite(x.clone()), true),
                PieceKind::Cell(lo, _) => (lo.clone(), false),
            };
            let (hi, hi_closed) = match &self.pieces[i].kind {
                PieceKind::Point(x) => (Bound::Finite(x.clone()), true),
                PieceKind::Cell(_, hi) => (hi.clone(), false),
            };
            out.push(IntervalSpec {
                lo,
                hi,
                lo_closed,
                hi_closed,
            });
            i += 1;
        }
        LineSet { intervals: out }
    }

    /// `∫ |F_1 - F_2| dt`, exact. Requires equal masses (the tails would
    /// otherwise contribute an infinite amount).
    pub fn integral_abs_diff(&self) -> Scalar {
        assert_eq!(
            self.mass1, self.mass2,
            "integral of CDF gap needs equal masses"
        );
        let mut acc = Scalar::zero();
        for (i, piece) in self.pieces.iter().enumerate() {
            if let PieceKind::Cell(Bound::Finite(lo), Bound::Finite(hi)) = &piece.kind {
                let left = &self.pieces[i - 1];
                let right = &self.pieces[i + 1];
                let d_left = &left.f1_plus - &left.f2_plus;
                let d_right = &right.f1_minus - &right.f2_minus;
                // constant sign on the cell, so |mean| * length
                acc += ((d_left + d_right) / Scalar::from_int(2)).abs() * (hi - lo);
            }
        }
        acc
    }
}

/// Finite union of disjoint, ordered intervals.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LineSet {
    intervals: Vec<IntervalSpec>,
}

impl LineSet {
    pub fn empty() -> Self {
        LineSet::default()
    }

    pub fn from_intervals(intervals: Vec<IntervalSpec>) -> Self {
        LineSet { intervals }
    }

    pub fn intervals(&self) -> &[IntervalSpec] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Membership by binary search over the ordered intervals.
    pub fn contains(&self, x: &Scalar) -> bool {
        let idx = self.intervals.partition_point(|iv| match &iv.hi {
            Bound::Finite(hi) => hi < x || (hi == x && !iv.hi_closed),
            Bound::PosInf => false,
            Bound::NegInf => true,
        });
        self.intervals.get(idx).is_some_and(|iv| iv.contains(x))
    }

    /// Whether `sub ⊆ self`, decided on the given grid pieces'
    /// representatives. Both sets must be unions of pieces of `grid`.
    pub fn contains_all_of(&self, other: &LineSet, grid: &PairGrid) -> bool {
        grid.pieces()
            .iter()
            .all(|p| !other.contains(&p.rep) || self.contains(&p.rep))
    }
}

impl fmt::Display for LineSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn zero_crossing_is_inserted() {
        // F_1 - F_2 = 1/2 - t on ]0, 1[
        let g1 = Measure::atomic(vec![(q(0, 1), q(1, 2)), (q(1, 1), q(1, 2))]).unwrap();
        let g2 = Measure::uniform(q(0, 1), q(1, 1), q(1, 1));
        let grid = PairGrid::new(&g1, &g2);
        assert!(grid
            .pieces()
            .iter()
            .any(|p| p.kind == PieceKind::Point(q(1, 2))));
        let pos = grid.to_line_set(&grid.select(|p| p.f1_plus > p.f2_plus));
        assert_eq!(pos.to_string(), "[0,1/2[");
        let neg = grid.to_line_set(&grid.select(|p| p.f1_plus < p.f2_plus));
        assert_eq!(neg.to_string(), "]1/2,1[");
        assert_eq!(grid.integral_abs_diff(), q(1, 4));
    }

    #[test]
    fn line_set_membership() {
        let s = LineSet::from_intervals(vec![
            IntervalSpec {
                lo: Bound::NegInf,
                hi: Bound::Finite(q(0, 1)),
                lo_closed: false,
                hi_closed: true,
            },
            IntervalSpec::point(q(2, 1)),
            IntervalSpec::open(q(3, 1), q(4, 1)),
        ]);
        assert!(s.contains(&q(-5, 1)));
        assert!(s.contains(&q(0, 1)));
        assert!(!s.contains(&q(1, 1)));
        assert!(s.contains(&q(2, 1)));
        assert!(!s.contains(&q(3, 1)));
        assert!(s.contains(&q(7, 2)));
        assert!(!s.contains(&q(4, 1)));
        assert_eq!(s.to_string(), "]-inf,0] ∪ {2} ∪ ]3,4[");
    }

    #[test]
    fn abs_diff_integral_of_shift() {
        let g1 = Measure::dirac(q(0, 1), q(1, 1));
        let g2 = Measure::dirac(q(1, 1), q(1, 1));
        assert_eq!(PairGrid::new(&g1, &g2).integral_abs_diff(), q(1, 1));
        let u = Measure::uniform(q(0, 1), q(1, 1), q(1, 1));
        let d = Measure::dirac(q(1, 2), q(1, 1));
        // ∫_0^1 |t - 1{t >= 1/2}| dt = 1/4
        assert_eq!(PairGrid::new(&u, &d).integral_abs_diff(), q(1, 4));
    }
}
