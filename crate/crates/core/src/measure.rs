//! Finite positive measures on the line: atoms plus piecewise-constant
//! densities, all with exact rational data.
//!
//! A [`Measure`] is always stored in canonical form (sorted atoms with
//! positive weights, maximal density pieces with positive densities, no two
//! touching pieces of equal density), so structural equality is equality of
//! measures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Bound, Scalar};

/// CDF values are masses.
pub type CdfValue = Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub x: Scalar,
    pub w: Scalar,
}

/// Uniform density `density` on `[a, b]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub a: Scalar,
    pub b: Scalar,
    pub density: Scalar,
}

impl Piece {
    pub fn mass(&self) -> Scalar {
        &self.density * (&self.b - &self.a)
    }

    /// Mass of `]-inf, t]` (equivalently `]-inf, t[`) under this piece.
    fn mass_below(&self, t: &Scalar) -> Scalar {
        if t <= &self.a {
            Scalar::zero()
        } else if t >= &self.b {
            self.mass()
        } else {
            &self.density * (t - &self.a)
        }
    }
}

/// Which one-sided CDF to evaluate: `Plus` is `m(]-inf, t])`, `Minus` is
/// `m(]-inf, t[)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Measure {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

impl Measure {
    pub fn zero() -> Self {
        Measure::default()
    }

    /// Validated constructor: weights and densities must be positive, atom
    /// positions distinct, and piece interiors disjoint.
    pub fn new(
        atoms: Vec<(Scalar, Scalar)>,
        pieces: Vec<(Scalar, Scalar, Scalar)>,
    ) -> Result<Self> {
        for (x, w) in &atoms {
            if !w.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {x} has non-positive weight {w}"
                )));
            }
        }
        let mut xs: Vec<&Scalar> = atoms.iter().map(|(x, _)| x).collect();
        xs.sort();
        if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure(format!("duplicate atom at {}", w[0])));
        }
        for (a, b, d) in &pieces {
            if a >= b {
                return Err(Error::InvalidMeasure(format!("empty piece [{a}, {b}]")));
            }
            if !d.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "piece [{a}, {b}] has non-positive density {d}"
                )));
            }
        }
        let mut sorted: Vec<&(Scalar, Scalar, Scalar)> = pieces.iter().collect();
        sorted.sort_by(|p, q| p.0.cmp(&q.0));
        if let Some(w) = sorted.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(Error::InvalidMeasure(format!(
                "pieces [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        Ok(Self::accumulate(atoms, pieces))
    }

    /// Purely atomic measure from `(position, weight)` pairs.
    pub fn atomic(atoms: Vec<(Scalar, Scalar)>) -> Result<Self> {
        Self::new(atoms, Vec::new())
    }

    pub fn dirac(x: Scalar, w: Scalar) -> Self {
        Self::accumulate(vec![(x, w)], Vec::new())
    }

    /// Uniform density on `[a, b]`.
    pub fn uniform(a: Scalar, b: Scalar, density: Scalar) -> Self {
        Self::accumulate(Vec::new(), vec![(a, b, density)])
    }

    /// Sums arbitrary (possibly duplicated or overlapping) non-negative
    /// contributions and returns the canonical form.
    pub(crate) fn accumulate(
        mut atoms: Vec<(Scalar, Scalar)>,
        pieces: Vec<(Scalar, Scalar, Scalar)>,
    ) -> Self {
        atoms.sort_by(|p, q| p.0.cmp(&q.0));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.x == x => last.w += w,
                _ => merged.push(Atom { x, w }),
            }
        }
        merged.retain(|a| !a.w.is_zero());
        Measure {
            atoms: merged,
            pieces: canonical_pieces(pieces),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn mass(&self) -> Scalar {
        let a: Scalar = self.atoms.iter().map(|a| &a.w).sum();
        let p: Scalar = self.pieces.iter().map(Piece::mass).sum();
        a + p
    }

    /// Weight of the atom at `x` (zero if none).
    pub fn atom_weight(&self, x: &Scalar) -> Scalar {
        match self.atoms.binary_search_by(|a| a.x.cmp(x)) {
            Ok(i) => self.atoms[i].w.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    /// Density of the absolutely continuous part at a point that is not a
    /// piece endpoint.
    pub fn density_at(&self, t: &Scalar) -> Scalar {
        self.pieces
            .iter()
            .filter(|p| &p.a < t && t < &p.b)
            .map(|p| p.density.clone())
            .sum()
    }

    /// `F^+(t) = m(]-inf, t])` or `F^-(t) = m(]-inf, t[)`, with `F(-inf) = 0`
    /// and `F(+inf) = mass`.
    pub fn cdf(&self, t: &Bound, side: Side) -> CdfValue {
        match t {
            Bound::NegInf => Scalar::zero(),
            Bound::PosInf => self.mass(),
            Bound::Finite(t) => self.cdf_at(t, side),
        }
    }

    pub fn cdf_at(&self, t: &Scalar, side: Side) -> CdfValue {
        let mut acc = Scalar::zero();
        for a in &self.atoms {
            let counted = match side {
                Side::Plus => &a.x <= t,
                Side::Minus => &a.x < t,
            };
            if !counted {
                break;
            }
            acc += &a.w;
        }
        for p in &self.pieces {
            if &p.a >= t {
                break;
            }
            acc += p.mass_below(t);
        }
        acc
    }

    /// Sorted, deduplicated atom positions and piece endpoints.
    pub fn breakpoints(&self) -> Vec<Scalar> {
        let mut pts: Vec<Scalar> = self.atoms.iter().map(|a| a.x.clone()).collect();
        for p in &self.pieces {
            pts.push(p.a.clone());
            pts.push(p.b.clone());
        }
        pts.sort();
        pts.dedup();
        pts
    }

    /// Infimum of the support (`None` for the zero measure).
    pub fn support_min(&self) -> Option<Scalar> {
        let a = self.atoms.first().map(|a| &a.x);
        let p = self.pieces.first().map(|p| &p.a);
        match (a, p) {
            (Some(a), Some(p)) => Some(a.min(p).clone()),
            (Some(a), None) => Some(a.clone()),
            (None, Some(p)) => Some(p.clone()),
            (None, None) => None,
        }
    }

    /// Supremum of the support (`None` for the zero measure).
    pub fn support_max(&self) -> Option<Scalar> {
        let a = self.atoms.last().map(|a| &a.x);
        let p = self.pieces.last().map(|p| &p.b);
        match (a, p) {
            (Some(a), Some(p)) => Some(a.max(p).clone()),
            (Some(a), None) => Some(a.clone()),
            (None, Some(p)) => Some(p.clone()),
            (None, None) => None,
        }
    }

    /// `m` restricted to the interval `iv`: atoms outside (including those
    /// sitting on open endpoints) are dropped, pieces are clipped.
    pub fn restrict(&self, iv: &IntervalSpec) -> Measure {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| iv.contains(&a.x))
            .map(|a| (a.x.clone(), a.w.clone()))
            .collect();
        let pieces = self
            .pieces
            .iter()
            .filter_map(|p| {
                let a = match &iv.lo {
                    Bound::Finite(lo) => p.a.clone().max(lo.clone()),
                    Bound::NegInf => p.a.clone(),
                    Bound::PosInf => return None,
                };
                let b = match &iv.hi {
                    Bound::Finite(hi) => p.b.clone().min(hi.clone()),
                    Bound::PosInf => p.b.clone(),
                    Bound::NegInf => return None,
                };
                (a < b).then(|| (a, b, p.density.clone()))
            })
            .collect();
        Measure::accumulate(atoms, pieces)
    }

    /// Restriction to a finite union of intervals.
    pub fn restrict_to_set(&self, set: &crate::grid::LineSet) -> Measure {
        set.intervals()
            .iter()
            .fold(Measure::zero(), |acc, iv| acc.add(&self.restrict(iv)))
    }

    /// Removes the atoms sitting at the given positions.
    pub fn without_atoms_at(&self, xs: &[Scalar]) -> Measure {
        let mut m = self.clone();
        m.atoms.retain(|a| !xs.contains(&a.x));
        m
    }

    /// Generalized inverse `inf { t : F^+(t) >= u }` for `0 < u <= mass`.
    pub fn quantile(&self, u: &Scalar) -> Result<Scalar> {
        let mass = self.mass();
        if !u.is_positive() || u > &mass {
            return Err(Error::QuantileOutOfRange(Box::new(u.clone())));
        }
        let pts = self.breakpoints();
        let mut prev: Option<(Scalar, Scalar)> = None; // (point, F^+ there)
        for p in pts {
            if let Some((x0, f0)) = &prev {
                // open cell ]x0, p[: F runs linearly from f0 to F^-(p)
                let fm = self.cdf_at(&p, Side::Minus);
                if u <= &fm && &fm > f0 {
                    let slope = (&fm - f0) / (&p - x0);
                    return Ok(x0 + (u - f0) / slope);
                }
            }
            let fp = self.cdf_at(&p, Side::Plus);
            if u <= &fp {
                return Ok(p);
            }
            prev = Some((p, fp));
        }
        Err(Error::Internal("quantile scan ran past the support".into()))
    }

    /// Common part `m1 ∧ m2`: minimum of atom weights at shared positions and
    /// pointwise minimum of densities.
    pub fn common_part(&self, other: &Measure) -> Measure {
        let atoms = self
            .atoms
            .iter()
            .filter_map(|a| {
                let w = other.atom_weight(&a.x);
                (!w.is_zero()).then(|| (a.x.clone(), a.w.clone().min(w)))
            })
            .collect();
        let mut ends: Vec<Scalar> = Vec::new();
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            ends.push(p.a.clone());
            ends.push(p.b.clone());
        }
        ends.sort();
        ends.dedup();
        let pieces = ends
            .windows(2)
            .filter_map(|w| {
                let mid = w[0].midpoint(&w[1]);
                let d = self.density_at(&mid).min(other.density_at(&mid));
                d.is_positive().then(|| (w[0].clone(), w[1].clone(), d))
            })
            .collect();
        Measure::accumulate(atoms, pieces)
    }

    /// Replaces every density piece by `cells_per_piece` atoms at the cell
    /// midpoints carrying the cell masses. Total mass is preserved exactly.
    pub fn discretize(&self, cells_per_piece: usize) -> Result<Measure> {
        if cells_per_piece == 0 {
            return Err(Error::InvalidArgument(
                "cells_per_piece must be >= 1".into(),
            ));
        }
        let n = Scalar::from_int(cells_per_piece as i64);
        let mut atoms: Vec<(Scalar, Scalar)> = self
            .atoms
            .iter()
            .map(|a| (a.x.clone(), a.w.clone()))
            .collect();
        for p in &self.pieces {
            let h = (&p.b - &p.a) / &n;
            let w = &p.density * &h;
            for k in 0..cells_per_piece {
                let x = &p.a + &h * Scalar::new(2 * k as i64 + 1, 2);
                atoms.push((x, w.clone()));
            }
        }
        Ok(Measure::accumulate(atoms, Vec::new()))
    }

    pub fn add(&self, other: &Measure) -> Measure {
        let atoms = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| (a.x.clone(), a.w.clone()))
            .collect();
        let pieces = self
            .pieces
            .iter()
            .chain(other.pieces.iter())
            .map(|p| (p.a.clone(), p.b.clone(), p.density.clone()))
            .collect();
        Measure::accumulate(atoms, pieces)
    }

    /// `self - other`, failing if the result would be negative somewhere.
    pub fn checked_sub(&self, other: &Measure) -> Result<Measure> {
        let mut atoms: Vec<(Scalar, Scalar)> = self
            .atoms
            .iter()
            .map(|a| (a.x.clone(), a.w.clone()))
            .collect();
        for a in &other.atoms {
            let w = self.atom_weight(&a.x);
            if w < a.w {
                return Err(Error::InvalidMeasure(format!(
                    "negative atom at {} after subtraction",
                    a.x
                )));
            }
            atoms.push((a.x.clone(), -&a.w));
        }
        let mut ends: Vec<Scalar> = Vec::new();
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            ends.push(p.a.clone());
            ends.push(p.b.clone());
        }
        ends.sort();
        ends.dedup();
        let mut pieces = Vec::new();
        for w in ends.windows(2) {
            let mid = w[0].midpoint(&w[1]);
            let d = self.density_at(&mid) - other.density_at(&mid);
            if d.is_negative() {
                return Err(Error::InvalidMeasure(format!(
                    "negative density on ]{}, {}[ after subtraction",
                    w[0], w[1]
                )));
            }
            if d.is_positive() {
                pieces.push((w[0].clone(), w[1].clone(), d));
            }
        }
        Ok(Measure::accumulate(atoms, pieces))
    }

    pub fn scale(&self, c: &Scalar) -> Measure {
        assert!(!c.is_negative(), "negative scale factor");
        let atoms = self.atoms.iter().map(|a| (a.x.clone(), &a.w * c)).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| (p.a.clone(), p.b.clone(), &p.density * c))
            .collect();
        Measure::accumulate(atoms, pieces)
    }

    /// Fails with [`Error::NotAtomic`] if a density part is present.
    pub fn require_atomic(&self) -> Result<()> {
        if self.is_atomic() {
            Ok(())
        } else {
            Err(Error::NotAtomic)
        }
    }

    pub fn to_json(&self) -> MeasureJson {
        MeasureJson {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    x: a.x.clone(),
                    w: a.w.clone(),
                })
                .collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceJson {
                    a: p.a.clone(),
                    b: p.b.clone(),
                    density: p.density.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: MeasureJson) -> Result<Measure> {
        Measure::new(
            j.atoms.into_iter().map(|a| (a.x, a.w)).collect(),
            j.pieces
                .into_iter()
                .map(|p| (p.a, p.b, p.density))
                .collect(),
        )
    }

    pub fn parse_json(s: &str) -> Result<Measure> {
        let j: MeasureJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Measure::from_json(j)
    }
}

fn canonical_pieces(pieces: Vec<(Scalar, Scalar, Scalar)>) -> Vec<Piece> {
    if pieces.is_empty() {
        return Vec::new();
    }
    let mut ends: Vec<Scalar> = Vec::with_capacity(2 * pieces.len());
    for (a, b, _) in &pieces {
        ends.push(a.clone());
        ends.push(b.clone());
    }
    ends.sort();
    ends.dedup();
    let mut out: Vec<Piece> = Vec::new();
    for w in ends.windows(2) {
        let d: Scalar = pieces
            .iter()
            .filter(|(a, b, _)| a <= &w[0] && &w[1] <= b)
            .map(|(_, _, d)| d.clone())
            .sum();
        if d.is_zero() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.b == w[0] && last.density == d => last.b = w[1].clone(),
            _ => out.push(Piece {
                a: w[0].clone(),
                b: w[1].clone(),
                density: d,
            }),
        }
    }
    out
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms: Vec<String> = Vec::new();
        for a in &self.atoms {
            terms.push(format!("{}·δ{}", a.w, a.x));
        }
        for p in &self.pieces {
            terms.push(format!("{}·1[{},{}]", p.density, p.a, p.b));
        }
        write!(f, "{}", terms.join(" + "))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomJson {
    pub x: Scalar,
    pub w: Scalar,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PieceJson {
    pub a: Scalar,
    pub b: Scalar,
    pub density: Scalar,
}

/// Wire form `{"atoms":[{"x","w"}],"pieces":[{"a","b","density"}]}` with
/// rationals as strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct MeasureJson {
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub pieces: Vec<PieceJson>,
}

/// Interval of the extended line. Infinite ends are always open.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalSpec {
    pub lo: Bound,
    pub hi: Bound,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl IntervalSpec {
    pub fn new(lo: Bound, hi: Bound, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        let lo_closed = lo_closed && matches!(lo, Bound::Finite(_));
        let hi_closed = hi_closed && matches!(hi, Bound::Finite(_));
        let ok = lo < hi || (lo == hi && lo_closed && hi_closed);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "empty interval between {lo} and {hi}"
            )));
        }
        Ok(IntervalSpec {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn real_line() -> Self {
        IntervalSpec {
            lo: Bound::NegInf,
            hi: Bound::PosInf,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn open(a: Scalar, b: Scalar) -> Self {
        IntervalSpec {
            lo: Bound::Finite(a),
            hi: Bound::Finite(b),
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(a: Scalar, b: Scalar) -> Self {
        IntervalSpec {
            lo: Bound::Finite(a),
            hi: Bound::Finite(b),
            lo_closed: true,
            hi_closed: true,
        }
    }

    /// `[a, b[`
    pub fn closed_open(a: Scalar, b: Scalar) -> Self {
        IntervalSpec {
            lo: Bound::Finite(a),
            hi: Bound::Finite(b),
            lo_closed: true,
            hi_closed: false,
        }
    }

    /// `]a, b]`
    pub fn open_closed(a: Scalar, b: Scalar) -> Self {
        IntervalSpec {
            lo: Bound::Finite(a),
            hi: Bound::Finite(b),
            lo_closed: false,
            hi_closed: true,
        }
    }

    pub fn point(x: Scalar) -> Self {
        IntervalSpec {
            lo: Bound::Finite(x.clone()),
            hi: Bound::Finite(x),
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        let above = match &self.lo {
            Bound::NegInf => true,
            Bound::PosInf => false,
            Bound::Finite(lo) => {
                if self.lo_closed {
                    x >= lo
                } else {
                    x > lo
                }
            }
        };
        let below = match &self.hi {
            Bound::PosInf => true,
            Bound::NegInf => false,
            Bound::Finite(hi) => {
                if self.hi_closed {
                    x <= hi
                } else {
                    x < hi
                }
            }
        };
        above && below
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            return write!(f, "{{{}}}", self.lo);
        }
        let l = if self.lo_closed { '[' } else { ']' };
        let r = if self.hi_closed { ']' } else { '[' };
        write!(f, "{l}{},{}{r}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn int(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn guiding_mu() -> Measure {
        crate::instances::mixed_boundary_pair().0
    }

    fn guiding_nu() -> Measure {
        crate::instances::mixed_boundary_pair().1
    }

    #[test]
    fn guiding_cdf_values() {
        let nu = guiding_nu();
        assert_eq!(nu.cdf(&Bound::Finite(int(2)), Side::Plus), q(9, 2));
        assert_eq!(nu.cdf(&Bound::Finite(int(2)), Side::Minus), q(5, 2));
        assert_eq!(nu.cdf(&Bound::NegInf, Side::Plus), Scalar::zero());
        assert_eq!(nu.cdf(&Bound::NegInf, Side::Minus), Scalar::zero());
        assert_eq!(nu.cdf(&Bound::PosInf, Side::Minus), nu.mass());
        assert_eq!(guiding_mu().mass(), nu.mass());
    }

    #[test]
    fn restrict_guiding_mu_to_open_interval() {
        let r = guiding_mu().restrict(&IntervalSpec::open(int(0), int(2)));
        let expected = Measure::new(
            vec![(int(1), int(1))],
            vec![(int(0), int(1), int(1)), (int(1), int(2), int(1))],
        )
        .unwrap();
        assert_eq!(r, expected);
        // touching equal-density pieces are merged
        assert_eq!(r.pieces().len(), 1);
    }

    #[test]
    fn restrict_edge_cases() {
        let d0 = Measure::dirac(int(0), int(1));
        assert!(d0.restrict(&IntervalSpec::open(int(0), int(1))).is_zero());
        let u = Measure::uniform(int(0), int(1), int(1));
        let r = u.restrict(&IntervalSpec::closed(q(1, 4), q(3, 4)));
        assert_eq!(r, Measure::uniform(q(1, 4), q(3, 4), int(1)));
        assert_eq!(r.mass(), q(1, 2));
        assert_eq!(
            guiding_mu().restrict(&IntervalSpec::real_line()),
            guiding_mu()
        );
    }

    #[test]
    fn quantiles() {
        let m = Measure::atomic(vec![(int(0), int(1)), (int(1), int(1))]).unwrap();
        assert_eq!(m.quantile(&q(3, 2)).unwrap(), int(1));
        assert_eq!(m.quantile(&int(1)).unwrap(), int(0));
        let u = Measure::uniform(int(0), int(1), int(1));
        assert_eq!(u.quantile(&q(1, 4)).unwrap(), q(1, 4));
        // F^+ of the guiding mu is 2 + (t - 1) on [1, 2[, so level 5/2 is hit at 3/2
        assert_eq!(guiding_mu().quantile(&q(5, 2)).unwrap(), q(3, 2));
        assert_eq!(guiding_mu().quantile(&int(3)).unwrap(), int(2));
        assert!(u.quantile(&int(0)).is_err());
        assert!(u.quantile(&int(2)).is_err());
    }

    #[test]
    fn common_parts() {
        let m = guiding_mu();
        assert_eq!(m.common_part(&m), m);
        let a = Measure::atomic(vec![(int(0), int(1)), (int(1), int(1))]).unwrap();
        let b = Measure::atomic(vec![(int(1), int(1)), (int(2), int(1))]).unwrap();
        assert_eq!(a.common_part(&b), Measure::dirac(int(1), int(1)));
        assert!(Measure::dirac(int(0), int(1))
            .common_part(&Measure::dirac(int(1), int(1)))
            .is_zero());
        let c = Measure::uniform(int(0), int(2), int(2)).common_part(&Measure::uniform(
            int(1),
            int(3),
            int(1),
        ));
        assert_eq!(c, Measure::uniform(int(1), int(2), int(1)));
    }

    #[test]
    fn discretization() {
        let a = Measure::atomic(vec![(int(0), int(1)), (int(3), q(1, 3))]).unwrap();
        assert_eq!(a.discretize(5).unwrap(), a);
        let u = Measure::uniform(int(0), int(1), int(1));
        assert_eq!(
            u.discretize(2).unwrap(),
            Measure::atomic(vec![(q(1, 4), q(1, 2)), (q(3, 4), q(1, 2))]).unwrap()
        );
        let u2 = Measure::uniform(int(0), int(1), int(2));
        assert_eq!(
            u2.discretize(4).unwrap(),
            Measure::atomic(vec![
                (q(1, 8), q(1, 2)),
                (q(3, 8), q(1, 2)),
                (q(5, 8), q(1, 2)),
                (q(7, 8), q(1, 2))
            ])
            .unwrap()
        );
        assert_eq!(
            guiding_mu().discretize(3).unwrap().mass(),
            guiding_mu().mass()
        );
        assert!(u.discretize(0).is_err());
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(Measure::atomic(vec![(int(0), int(-1))]).is_err());
        assert!(Measure::atomic(vec![(int(0), int(1)), (int(0), int(2))]).is_err());
        assert!(Measure::new(
            vec![],
            vec![(int(0), int(2), int(1)), (int(1), int(3), int(1))]
        )
        .is_err());
        assert!(Measure::new(vec![], vec![(int(1), int(1), int(1))]).is_err());
        assert!(Measure::new(
            vec![],
            vec![(int(0), int(1), int(1)), (int(1), int(3), int(1))]
        )
        .is_ok());
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let m = guiding_nu();
        let s = serde_json::to_string(&m.to_json()).unwrap();
        assert_eq!(Measure::parse_json(&s).unwrap(), m);
        let dec = r#"{"atoms":[{"x":"0.5","w":"1/4"}],"pieces":[]}"#;
        assert_eq!(
            Measure::parse_json(dec).unwrap(),
            Measure::dirac(q(1, 2), q(1, 4))
        );
        assert!(Measure::parse_json(r#"{"atoms":[{"x":"0","w":"-1"}]}"#).is_err());
        assert!(Measure::parse_json(r#"{"atoms":[{"x":"0","w":"1"},{"x":"0","w":"1"}]}"#).is_err());
        assert!(Measure::parse_json(
            r#"{"pieces":[{"a":"0","b":"2","density":"1"},{"a":"1","b":"3","density":"1"}]}"#
        )
        .is_err());
    }

    #[test]
    fn checked_sub_detects_negativity() {
        let a = Measure::atomic(vec![(int(0), int(2))]).unwrap();
        let b = Measure::atomic(vec![(int(0), int(1))]).unwrap();
        assert_eq!(a.checked_sub(&b).unwrap(), b);
        assert!(b.checked_sub(&a).is_err());
    }
}
